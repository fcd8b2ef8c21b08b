#include "bstc/chain_io.hpp"

#include <fstream>
#include <map>
#include <string>

#include "bstc/config.hpp"
#include "bstc/errors.hpp"
#include "csv.hpp"

namespace bstc {

namespace {

constexpr const char* kLayout = "bstc-chain-1";

class RowWriter {
 public:
  explicit RowWriter(const std::filesystem::path& path) : out_(detail::open_output(path)), path_(path) {}

  void field(const std::string& s) {
    if (!first_) line_ += ',';
    line_ += s;
    first_ = false;
  }
  void field(double v) { field(format_double(v)); }
  void end_row() {
    line_ += '\n';
    out_ << line_;
    line_.clear();
    first_ = true;
  }
  void close() {
    out_.close();
    if (!out_) throw InputError("failed writing " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::string line_;
  bool first_ = true;
};

double cell(const detail::CsvTable& t, std::size_t r, std::size_t c, const std::filesystem::path& path) {
  const auto v = detail::parse_double(t.rows[r][c]);
  if (!v) throw InputError(path.string() + ":" + std::to_string(t.line_numbers[r]) + ": non-numeric value");
  return *v;
}

detail::CsvTable read_block(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  auto t = detail::read_csv(path);
  if (t.rows.size() != rows || t.header.size() != cols)
    throw InputError(path.string() + ": expected " + std::to_string(rows) + " rows of " + std::to_string(cols) +
                     " columns");
  return t;
}

}  // namespace

void write_chain_output(const std::filesystem::path& dir, const ChainOutput& chain) {
  write_chain_output(dir, std::vector<ChainOutput>{chain});
}

void write_chain_output(const std::filesystem::path& dir, const std::vector<ChainOutput>& chains) {
  const ChainOutput all = merge_chains(chains);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());

  const auto I = all.units();
  const auto T = all.periods();
  const auto P = all.coefficients;
  const auto M = all.draws();

  {
    auto out = detail::open_output(dir / "meta");
    out << "layout=" << kLayout << '\n';
    out << "chains=" << chains.size() << '\n';
    out << "draws_per_chain=";
    for (std::size_t c = 0; c < chains.size(); ++c) out << (c ? "," : "") << chains[c].draws();
    out << '\n';
    out << "units=" << I << '\n' << "periods=" << T << '\n' << "coefficients=" << P << '\n';
    out << "acceptance_xi=" << format_double(all.acceptance_xi) << '\n';
    out << "acceptance_rho=" << format_double(all.acceptance_rho) << '\n';
    out << "final_step_xi=" << format_double(chains.front().final_step_xi) << '\n';
    out << "final_step_rho=" << format_double(chains.front().final_step_rho) << '\n';
    for (const auto& [k, v] : config_entries(all.config)) out << k << '=' << v << '\n';
  }
  {
    RowWriter u(dir / "units.csv");
    u.field(std::string("unit"));
    u.end_row();
    for (const auto& id : all.unit_ids) {
      u.field(id);
      u.end_row();
    }
    u.close();
    RowWriter t(dir / "times.csv");
    t.field(std::string("time"));
    t.end_row();
    for (const auto& tm : all.times) {
      t.field(tm);
      t.end_row();
    }
    t.close();
  }

  RowWriter sc(dir / "scalars.csv");
  for (const char* h : {"draw", "chain", "sigma2", "tau2", "rho", "alpha", "k"}) sc.field(std::string(h));
  sc.end_row();
  std::size_t m = 0;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t d = 0; d < chains[c].draws(); ++d, ++m) {
      sc.field(std::to_string(m));
      sc.field(std::to_string(chains[c].chain_index));
      sc.field(all.sigma2[m]);
      sc.field(all.tau2[m]);
      sc.field(all.rho[m]);
      sc.field(all.alpha[m]);
      sc.field(std::to_string(all.k[m]));
      sc.end_row();
    }
  sc.close();

  auto unit_header = [&](RowWriter& w) {
    for (const auto& id : all.unit_ids) w.field(id);
    w.end_row();
  };

  RowWriter al(dir / "allocations.csv");
  unit_header(al);
  for (const auto& s : all.allocations) {
    for (int l : s) al.field(std::to_string(l + 1));
    al.end_row();
  }
  al.close();

  RowWriter xw(dir / "xi.csv");
  unit_header(xw);
  for (const auto& x : all.xi) {
    for (Eigen::Index i = 0; i < x.size(); ++i) xw.field(x[i]);
    xw.end_row();
  }
  xw.close();

  RowWriter bw(dir / "beta.csv");
  for (const auto& id : all.unit_ids)
    for (std::size_t j = 0; j < P; ++j) bw.field(id + ":" + std::to_string(j));
  bw.end_row();
  for (const auto& b : all.beta) {
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) bw.field(b(i, j));
    bw.end_row();
  }
  bw.close();

  RowWriter ww(dir / "w.csv");
  for (const auto& id : all.unit_ids)
    for (const auto& tm : all.times) ww.field(id + "@" + tm);
  ww.end_row();
  for (const auto& w : all.w) {
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index t = 0; t < w.cols(); ++t) ww.field(w(i, t));
    ww.end_row();
  }
  ww.close();

  RowWriter lw(dir / "loglik.csv");
  unit_header(lw);
  for (std::size_t r = 0; r < M; ++r) {
    for (std::size_t i = 0; i < I; ++i) lw.field(all.loglik(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)));
    lw.end_row();
  }
  lw.close();
}

ChainOutput read_chain_output(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta");
  if (!in) throw InputError("cannot open " + (dir / "meta").string());
  std::map<std::string, std::string> meta;
  ChainOutput out;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw InputError((dir / "meta").string() + ": malformed line '" + line + "'");
    meta.emplace(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw InputError((dir / "meta").string() + ": missing key '" + key + "'");
    return it->second;
  };
  if (need("layout") != kLayout) throw InputError((dir / "meta").string() + ": unsupported layout");
  for (const auto& [k, v] : meta) {
    if (k == "layout" || k == "chains" || k == "draws_per_chain" || k == "units" || k == "periods" ||
        k == "coefficients" || k.starts_with("acceptance_") || k.starts_with("final_step_"))
      continue;
    apply_config_value(out.config, k, v);
  }
  auto number = [&](const std::string& key) {
    const auto v = detail::parse_double(need(key));
    if (!v) throw InputError((dir / "meta").string() + ": invalid " + key);
    return *v;
  };
  out.acceptance_xi = number("acceptance_xi");
  out.acceptance_rho = number("acceptance_rho");
  out.final_step_xi = number("final_step_xi");
  out.final_step_rho = number("final_step_rho");
  const auto I = static_cast<std::size_t>(number("units"));
  const auto T = static_cast<std::size_t>(number("periods"));
  const auto P = static_cast<std::size_t>(number("coefficients"));
  out.coefficients = P;

  for (const auto& r : read_block(dir / "units.csv", I, 1).rows) out.unit_ids.push_back(r[0]);
  for (const auto& r : read_block(dir / "times.csv", T, 1).rows) out.times.push_back(r[0]);

  const auto sc_path = dir / "scalars.csv";
  const auto sc = detail::read_csv(sc_path);
  const auto M = sc.rows.size();
  const auto c_s2 = sc.column("sigma2", sc_path), c_t2 = sc.column("tau2", sc_path), c_rho = sc.column("rho", sc_path),
             c_a = sc.column("alpha", sc_path), c_k = sc.column("k", sc_path);
  for (std::size_t m = 0; m < M; ++m) {
    out.sigma2.push_back(cell(sc, m, c_s2, sc_path));
    out.tau2.push_back(cell(sc, m, c_t2, sc_path));
    out.rho.push_back(cell(sc, m, c_rho, sc_path));
    out.alpha.push_back(cell(sc, m, c_a, sc_path));
    out.k.push_back(static_cast<int>(cell(sc, m, c_k, sc_path)));
  }

  const auto al_path = dir / "allocations.csv";
  const auto al = read_block(al_path, M, I);
  for (std::size_t m = 0; m < M; ++m) {
    Labels s(I);
    for (std::size_t i = 0; i < I; ++i) s[i] = static_cast<int>(cell(al, m, i, al_path)) - 1;
    if (!is_canonical(s)) throw InputError(al_path.string() + ": labels are not canonical");
    out.allocations.push_back(std::move(s));
  }

  const auto xi_path = dir / "xi.csv";
  const auto xt = read_block(xi_path, M, I);
  for (std::size_t m = 0; m < M; ++m) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(I));
    for (std::size_t i = 0; i < I; ++i) x[static_cast<Eigen::Index>(i)] = cell(xt, m, i, xi_path);
    out.xi.push_back(std::move(x));
  }

  const auto b_path = dir / "beta.csv";
  const auto bt = read_block(b_path, M, I * P);
  for (std::size_t m = 0; m < M; ++m) {
    Eigen::MatrixXd b(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(P));
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < P; ++j)
        b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cell(bt, m, i * P + j, b_path);
    out.beta.push_back(std::move(b));
  }

  const auto w_path = dir / "w.csv";
  const auto wt = read_block(w_path, M, I * T);
  for (std::size_t m = 0; m < M; ++m) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(T));
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t t = 0; t < T; ++t)
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = cell(wt, m, i * T + t, w_path);
    out.w.push_back(std::move(w));
  }

  const auto l_path = dir / "loglik.csv";
  const auto lt = read_block(l_path, M, I);
  out.loglik.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(I));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < I; ++i)
      out.loglik(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = cell(lt, m, i, l_path);
  return out;
}

}  // namespace bstc

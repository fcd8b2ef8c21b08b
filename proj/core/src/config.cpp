#include "bstc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bstc/errors.hpp"
#include "bstc/version.hpp"
#include "csv.hpp"

namespace bstc {

namespace {

double to_double(const std::string& key, const std::string& value) {
  const auto v = detail::parse_double(value);
  if (!v) throw InputError("invalid " + key + ": '" + value + "' is not a number");
  return *v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
  const auto v = detail::parse_int(value);
  if (!v || *v < 0) throw InputError("invalid " + key + ": '" + value + "' is not a non-negative integer");
  return static_cast<std::size_t>(*v);
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  const auto s = detail::trim(value);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw InputError("invalid " + key + ": '" + value + "' is not an unsigned 64-bit integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw InputError("invalid " + key + ": '" + value + "' is not a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& f : detail::split_fields(value)) out.push_back(to_double(key, f));
  return out;
}

std::string join(const double* v, std::size_t n) {
  std::string s;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) s += ',';
    s += format_double(v[k]);
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void apply_config_value(ChainConfig& c, const std::string& key, const std::string& value) {
  auto& h = c.priors;
  if (key == "iterations") c.iterations = to_count(key, value);
  else if (key == "burn_in") c.burn_in = to_count(key, value);
  else if (key == "thin") c.thin = to_count(key, value);
  else if (key == "seed") c.seed = to_seed(key, value);
  else if (key == "n_aux") c.n_aux = to_count(key, value);
  else if (key == "n_chains") c.n_chains = to_count(key, value);
  else if (key == "mh_step_rho") c.mh_step_rho = to_double(key, value);
  else if (key == "mh_step_xi") c.mh_step_xi = to_double(key, value);
  else if (key == "adapt") c.adapt = to_bool(key, value);
  else if (key == "target_acceptance") c.target_acceptance = to_double(key, value);
  else if (key == "reorder") c.reorder = to_bool(key, value);
  else if (key == "init") {
    if (value == "default") c.init = InitScheme::Default;
    else if (value == "prior") c.init = InitScheme::Prior;
    else throw InputError("invalid init: '" + value + "' (expected default or prior)");
  } else if (key == "a_sigma2") h.a_sigma2 = to_double(key, value);
  else if (key == "b_sigma2") h.b_sigma2 = to_double(key, value);
  else if (key == "a_tau2") h.a_tau2 = to_double(key, value);
  else if (key == "b_tau2") h.b_tau2 = to_double(key, value);
  else if (key == "alpha_rho") h.alpha_rho = to_double(key, value);
  else if (key == "beta_rho") h.beta_rho = to_double(key, value);
  else if (key == "a_alpha") h.a_alpha = to_double(key, value);
  else if (key == "b_alpha") h.b_alpha = to_double(key, value);
  else if (key == "a_xi") h.a_xi = to_double(key, value);
  else if (key == "b_xi") h.b_xi = to_double(key, value);
  else if (key == "mu0") {
    const auto v = to_list(key, value);
    h.mu0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else if (key == "sigma0") {
    // Row-major P x P entries.
    const auto v = to_list(key, value);
    const auto P = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (static_cast<std::size_t>(P * P) != v.size()) throw InputError("invalid sigma0: entry count is not a square");
    h.Sigma0 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), P, P);
  } else {
    throw InputError("unknown config key '" + key + "'");
  }
}

ChainConfig read_config(const std::filesystem::path& path, ChainConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    if (key.empty()) throw InputError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    apply_config_value(base, key, value);
  }
  return base;
}

std::vector<std::pair<std::string, std::string>> config_entries(const ChainConfig& c) {
  const auto& h = c.priors;
  std::vector<std::pair<std::string, std::string>> e = {
      {"iterations", std::to_string(c.iterations)},
      {"burn_in", std::to_string(c.burn_in)},
      {"thin", std::to_string(c.thin)},
      {"seed", std::to_string(c.seed)},
      {"n_aux", std::to_string(c.n_aux)},
      {"n_chains", std::to_string(c.n_chains)},
      {"mh_step_rho", format_double(c.mh_step_rho)},
      {"mh_step_xi", format_double(c.mh_step_xi)},
      {"adapt", c.adapt ? "true" : "false"},
      {"target_acceptance", format_double(c.target_acceptance)},
      {"reorder", c.reorder ? "true" : "false"},
      {"init", c.init == InitScheme::Default ? "default" : "prior"},
      {"a_sigma2", format_double(h.a_sigma2)},
      {"b_sigma2", format_double(h.b_sigma2)},
      {"a_tau2", format_double(h.a_tau2)},
      {"b_tau2", format_double(h.b_tau2)},
      {"alpha_rho", format_double(h.alpha_rho)},
      {"beta_rho", format_double(h.beta_rho)},
      {"a_alpha", format_double(h.a_alpha)},
      {"b_alpha", format_double(h.b_alpha)},
      {"a_xi", format_double(h.a_xi)},
      {"b_xi", format_double(h.b_xi)},
  };
  if (h.mu0.size() > 0) e.emplace_back("mu0", join(h.mu0.data(), static_cast<std::size_t>(h.mu0.size())));
  if (h.Sigma0.size() > 0) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = h.Sigma0;
    e.emplace_back("sigma0", join(rm.data(), static_cast<std::size_t>(rm.size())));
  }
  return e;
}

const char* library_version() { return BSTC_VERSION; }

}  // namespace bstc

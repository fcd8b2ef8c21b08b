#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "bstc/errors.hpp"
#include "bstc/version.hpp"

namespace bstc::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return hex.str();
}

Manifest::Manifest(std::string command, std::vector<std::string> args)
    : command_(std::move(command)), args_(std::move(args)), start_(std::chrono::steady_clock::now()) {}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  inputs_.emplace_back(role, path);
}

void Manifest::write(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["arguments"] = args_;
  j["version"] = library_version();
  if (has_seed_) j["seed"] = seed_;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_) cfg[k] = v;
  auto& inputs = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [role, p] : inputs_)
    inputs.push_back({{"role", role}, {"path", p.string()}, {"sha256", sha256_file(p)}});
  j["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw InputError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot move manifest into place: " + ec.message());
}

}  // namespace bstc::cli

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bstc/sampler.hpp"

namespace bstc {

/// Set one `key = value` entry. Unknown keys and malformed values throw
/// InputError naming the key.
void apply_config_value(ChainConfig& config, const std::string& key, const std::string& value);

/// Plain-text config: one `key = value` per line, `#` starts a comment.
/// Keys not mentioned keep the values already in `base`.
ChainConfig read_config(const std::filesystem::path& path, ChainConfig base = {});

/// Every key with its current value, in a fixed order; read back by
/// apply_config_value. The fixed partition is not included.
std::vector<std::pair<std::string, std::string>> config_entries(const ChainConfig& config);

std::string format_double(double v);

}  // namespace bstc

#pragma once

#include <cstdint>
#include <string>

namespace stargraph {

// 17 significant digits, round-trip safe
std::string fmt17(double v);

// FNV-1a 64-bit, used for config hashes in run manifests
std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace stargraph

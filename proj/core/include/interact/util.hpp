#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace interact {

/// FNV-1a 64-bit content hash; used for run manifests and config hashes.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

std::string to_hex(std::uint64_t value);

std::string read_text_file(const std::filesystem::path& path);
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace interact

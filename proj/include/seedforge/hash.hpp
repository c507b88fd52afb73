#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace seedforge::hash {

/// Lower-case hex SHA-256.
std::string sha256(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

/// SHA-256 over every regular file below `root`, in sorted relative-path
/// order, covering both the relative path and the content.
std::string sha256_tree(const std::filesystem::path& root);

}  // namespace seedforge::hash

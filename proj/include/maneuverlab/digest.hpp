#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mlab {

/// Lower-case hex SHA-256 of a byte string.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

/// Lower-case hex SHA-256 of a file's contents. Throws Error if unreadable.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

}  // namespace mlab

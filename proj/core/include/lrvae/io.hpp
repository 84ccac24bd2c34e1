#pragma once

#include <filesystem>
#include <string>

namespace lrvae {

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: parent directories are created, failures throw IoError.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace lrvae

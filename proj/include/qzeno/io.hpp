#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace qzeno {

// Shortest round-trip decimal form; stable across runs.
std::string format_real(double x);

// Throws std::runtime_error naming the path on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace qzeno

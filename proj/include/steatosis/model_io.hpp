#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "steatosis/cascade.hpp"

namespace steatosis {

inline constexpr int kFormatMajor = 1;
inline constexpr int kFormatMinor = 0;
inline constexpr std::string_view kToolVersion = "1.0.0";

std::string hex64(std::uint64_t v);

// Conventions a reader must share to reproduce predictions bit for bit.
nlohmann::json model_conventions();

nlohmann::json container_json(const CascadeModel& model);
// Throws ContainerError for undecodable content, a newer major version or
// mismatched conventions.
CascadeModel model_from_container(const nlohmann::json& j);

// Shortest round-trip encoding of every double.
std::string dump_json(const nlohmann::json& j);
// Writes to a sibling temporary file, then renames. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void save_model(const std::filesystem::path& path, const CascadeModel& model);
CascadeModel load_model(const std::filesystem::path& path);

}  // namespace steatosis

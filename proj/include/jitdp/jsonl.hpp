#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

namespace jitdp {

/// Reads one JSON value per non-blank line. Throws IoError when the file
/// cannot be opened and MalformedLine (with the 1-based line number) on a
/// parse failure.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& rows);

nlohmann::json read_json(const std::filesystem::path& path);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value);

}  // namespace jitdp

#include "jitdp/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "jitdp/error.hpp"

namespace jitdp {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<nlohmann::json> rows;
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedLine(path.filename().string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& rows) {
    auto out = open_out(path);
    for (const auto& row : rows) out << row.dump() << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw CorruptFile(path.filename().string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value) {
    auto out = open_out(path);
    out << value.dump(2) << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace jitdp

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lwf::io {

std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_jsonl_atomic(const std::filesystem::path& path, const std::vector<nlohmann::json>& lines);

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path) {
    std::vector<T> out;
    for (const auto& j : read_jsonl(path)) out.push_back(j.template get<T>());
    return out;
}

template <typename T>
void write_jsonl_as(const std::filesystem::path& path, const std::vector<T>& items) {
    std::vector<nlohmann::json> lines;
    lines.reserve(items.size());
    for (const auto& item : items) lines.emplace_back(item);
    write_jsonl_atomic(path, lines);
}

}  // namespace lwf::io

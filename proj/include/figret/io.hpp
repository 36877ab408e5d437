#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace figret {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// reader never observes a half-written file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Calls `fn(record, line_number)` for every non-blank line. Malformed JSON
/// raises ParseError naming the 1-based line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

/// Serializes records one per line (compact, trailing newline).
template <typename Range, typename ToJson>
std::string to_jsonl(const Range& records, ToJson&& to_json_fn) {
    std::string out;
    for (const auto& r : records) {
        out += to_json_fn(r).dump();
        out += '\n';
    }
    return out;
}

}  // namespace figret

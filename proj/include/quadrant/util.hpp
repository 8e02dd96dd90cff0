#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace quadrant::util {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool contains(std::string_view haystack, std::string_view needle);

/// Lowercased alphanumeric tokens, split on everything else.
std::vector<std::string> tokenize(std::string_view text);

/// Replace every occurrence of `from` (non-empty) in `text` with `to`.
std::string replace_all(std::string text, std::string_view from, std::string_view to);

/// Shortest round-trip decimal form ("0", "0.25", "1e-06"). Used wherever a
/// double feeds a digest or a stable text format.
std::string format_double(double v);

/// Fixed two-decimal form with a percent sign, e.g. 61.1 -> "61.10%".
std::string format_percent(double v);

/// First [+-]?digits run in the text, as written. nullopt when none.
std::optional<long long> first_integer_token(std::string_view text);

std::string iso8601_utc_now();

std::string read_file(const std::filesystem::path& path);

/// Write via temp file + rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

/// Run fn(i) for i in [0, n) on up to `workers` threads. Exceptions propagate
/// out of fn; callers that need per-item error ledgers catch inside fn.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace quadrant::util

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace vidloc {

std::string sha256_hex(std::string_view data);

// Throws Error(IoError) on failure.
std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames, so readers never observe
// a half-written artifact.
void write_file(const std::filesystem::path& path, std::string_view content);

// UTC ISO-8601 with seconds resolution, e.g. "2024-03-01T12:00:00Z".
std::string iso8601_utc(std::chrono::system_clock::time_point tp);

// Calls fn(i) for i in [0, n) on up to `workers` threads and returns once
// all calls finish. fn must not throw.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace vidloc

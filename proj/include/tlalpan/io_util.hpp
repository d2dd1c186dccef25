#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace tlalpan {

// SplitMix64 step; used to derive independent substream seeds so results do
// not depend on scheduling order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a 64-bit digest of a byte buffer.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::filesystem::path& p);

// Locale-independent float formatting (%.17g) so artifacts are byte-stable.
std::string format_double(double v);

// Writes to <path>.tmp then renames, so failed runs leave no partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    std::string to_json() const;     // array-of-objects with the same columns
    std::string to_plot() const;     // whitespace-separated, "# col col" header
    static CsvTable from_csv_file(const std::filesystem::path& p);
};

// Runs fn(i) for i in [0, n) on a small thread pool. Work is striped by
// index, results must be written to per-index slots by the caller; output is
// then independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tlalpan

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cimcs/types.hpp"

namespace cimcs {

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// FNV-1a 64-bit over a byte string; used to stamp configs into CSV headers.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/**
 * Instance bundle layout under `dir`:
 *   A.csv      row-major, one observation row per line
 *   y.csv      one value per line
 *   truth.csv  lines "x,xi" (only when ground truth is present)
 *   meta.json  {"N","M","a","alpha","nu","seed","rng"}
 */
void save_instance(const ProblemInstance& inst, const std::filesystem::path& dir);
ProblemInstance load_instance(const std::filesystem::path& dir);

/**
 * Minimal CSV table writer. `comment` lines are emitted first prefixed
 * with "# " (config hash + seed list per output contract), then the
 * column header, then rows.
 */
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& comments,
              const std::vector<std::string>& columns);
    ~CsvWriter();
    void row(const std::vector<std::string>& cells);
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }

private:
    std::string path_;
    std::string buf_;
    std::size_t ncols_;
};

// 8-bit portable graymap (P5 binary or P2 ascii in, P5 out), values in [0,1].
MatrixXd read_pgm(const std::filesystem::path& path);
void write_pgm(const MatrixXd& pixels, const std::filesystem::path& path);

}  // namespace cimcs

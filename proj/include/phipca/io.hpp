#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace phipca {

// Shortest decimal representation that round-trips to the same double,
// locale-independent.
std::string format_double(double v);

// Dense numeric matrix from CSV; a non-numeric first line is treated as a
// header and skipped. Throws ParseError on ragged rows or bad tokens.
Eigen::MatrixXd parse_csv_matrix(const std::string& path);

// One CSV row; every cell is already formatted.
using CsvRow = std::vector<std::string>;

void write_csv(const std::string& path, const CsvRow& header, const std::vector<CsvRow>& rows);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t file_digest(const std::string& path);

// Reproducibility record written next to every CLI command's outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string version;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;

    void stamp_start();
    void stamp_end();
    // Digests each listed output and writes <dir>/manifest.json.
    void write(const std::string& dir) const;
};

}  // namespace phipca

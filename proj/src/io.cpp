#include "phipca/io.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "phipca/common.hpp"

namespace phipca {

std::string format_double(double v) {
    std::array<char, 64> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw DomainError("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

namespace {

bool parse_cell(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

Eigen::MatrixXd parse_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open CSV file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_checked = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells = split_line(line);
        std::vector<double> row(cells.size());
        bool ok = true;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (!parse_cell(cells[j], row[j])) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            if (!header_checked && rows.empty()) {
                header_checked = true;  // header line, skip
                continue;
            }
            throw ParseError("'" + path + "' line " + std::to_string(lineno) +
                             ": non-numeric cell");
        }
        header_checked = true;
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("'" + path + "' line " + std::to_string(lineno) + ": expected " +
                             std::to_string(rows.front().size()) + " columns, got " +
                             std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("'" + path + "': no data rows");
    Eigen::MatrixXd x(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
    return x;
}

void write_csv(const std::string& path, const CsvRow& header, const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary: no platform newline translation
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    auto emit = [&out](const CsvRow& row) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << row[j];
        }
        out << '\n';
    };
    if (!header.empty()) emit(header);
    for (const CsvRow& row : rows) emit(row);
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot digest missing file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string contents = buf.str();
    return fnv1a64(contents.data(), contents.size());
}

namespace {
std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}
}  // namespace

void RunManifest::stamp_start() { started_at = utc_now(); }
void RunManifest::stamp_end() { finished_at = utc_now(); }

void RunManifest::write(const std::string& dir) const {
    namespace fs = std::filesystem;
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["version"] = version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    nlohmann::json outs = nlohmann::json::array();
    for (const std::string& name : outputs) {
        char hex[17];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(file_digest((fs::path(dir) / name).string())));
        outs.push_back({{"file", name}, {"fnv1a64", hex}});
    }
    j["outputs"] = outs;
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest in '" + dir + "'");
    out << j.dump(2) << '\n';
}

}  // namespace phipca

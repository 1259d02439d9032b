#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "voxmap/query.hpp"

namespace voxmap {

struct FrameTimings {
    double integrate_ms = 0.0;
    double publish_ms = 0.0;
    double query_ms = 0.0;
    uint64_t delta_bytes = 0;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
};

Aggregate aggregate(std::span<const double> values);

/// "12.34(56)": fixed two decimals, the parenthesized uncertainty is the
/// sample standard deviation expressed in units of the last shown digit.
std::string format_uncertainty(double mean, double stddev);

/// Per-frame timings plus end-of-run map statistics, written as a
/// line-delimited text report and a comma-separated table.
struct RunReport {
    std::string name;
    std::vector<FrameTimings> frames;
    uint64_t node_count = 0;
    uint64_t memory_bytes = 0;
    uint64_t full_map_bytes = 0;
    StateCounts states;

    Aggregate integrate() const;
    Aggregate publish() const;
    Aggregate query() const;
    Aggregate delta_bytes() const;

    void write_text(std::ostream& out) const;
    void write_csv(const std::filesystem::path& path) const;
    /// Inverse of write_csv for the per-frame table (lossless round-trip).
    static std::vector<FrameTimings> read_csv(const std::filesystem::path& path);
};

}  // namespace voxmap

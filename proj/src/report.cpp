#include "voxmap/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "voxmap/error.hpp"

namespace voxmap {

Aggregate aggregate(std::span<const double> values) {
    Aggregate a;
    if (values.empty()) return a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    if (values.size() < 2) return a;
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return a;
}

std::string format_uncertainty(double mean, double stddev) {
    char buf[64];
    const long long u = std::llround(stddev * 100.0);
    std::snprintf(buf, sizeof buf, "%.2f(%lld)", mean, u);
    return buf;
}

namespace {

Aggregate field_agg(const std::vector<FrameTimings>& frames, double FrameTimings::* field) {
    std::vector<double> v;
    v.reserve(frames.size());
    for (const auto& f : frames) v.push_back(f.*field);
    return aggregate(v);
}

}  // namespace

Aggregate RunReport::integrate() const { return field_agg(frames, &FrameTimings::integrate_ms); }
Aggregate RunReport::publish() const { return field_agg(frames, &FrameTimings::publish_ms); }
Aggregate RunReport::query() const { return field_agg(frames, &FrameTimings::query_ms); }

Aggregate RunReport::delta_bytes() const {
    std::vector<double> v;
    v.reserve(frames.size());
    for (const auto& f : frames) v.push_back(static_cast<double>(f.delta_bytes));
    return aggregate(v);
}

void RunReport::write_text(std::ostream& out) const {
    const Aggregate ig = integrate(), pb = publish(), qr = query(), db = delta_bytes();
    if (!name.empty()) out << "run " << name << "\n";
    out << "frames " << frames.size() << "\n";
    out << "integrate_ms " << format_uncertainty(ig.mean, ig.stddev) << "\n";
    out << "publish_ms " << format_uncertainty(pb.mean, pb.stddev) << "\n";
    out << "query_ms " << format_uncertainty(qr.mean, qr.stddev) << "\n";
    char buf[64];
    auto full = [&](const char* key, const Aggregate& a) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g", a.mean, a.stddev);
        out << key << " " << buf << "\n";
    };
    full("integrate_ms_mean_std", ig);
    full("publish_ms_mean_std", pb);
    full("query_ms_mean_std", qr);
    full("delta_bytes_mean_std", db);
    out << "node_count " << node_count << "\n";
    out << "memory_bytes " << memory_bytes << "\n";
    out << "full_map_bytes " << full_map_bytes << "\n";
    out << "voxels_unknown " << states.unknown << "\n";
    out << "voxels_free " << states.free << "\n";
    out << "voxels_occupied " << states.occupied << "\n";
}

void RunReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report csv: " + path.string());
    out << "frame,integrate_ms,publish_ms,query_ms,delta_bytes\n";
    char buf[160];
    for (size_t i = 0; i < frames.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%llu\n", i, frames[i].integrate_ms,
                      frames[i].publish_ms, frames[i].query_ms,
                      static_cast<unsigned long long>(frames[i].delta_bytes));
        out << buf;
    }
}

std::vector<FrameTimings> RunReport::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report csv: " + path.string());
    std::vector<FrameTimings> frames;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty report csv: " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        FrameTimings t;
        size_t idx = 0;
        unsigned long long bytes = 0;
        if (std::sscanf(line.c_str(), "%zu,%lg,%lg,%lg,%llu", &idx, &t.integrate_ms, &t.publish_ms,
                        &t.query_ms, &bytes) != 5)
            throw IoError("bad report csv line: " + line);
        t.delta_bytes = bytes;
        frames.push_back(t);
    }
    return frames;
}

}  // namespace voxmap

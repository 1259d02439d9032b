#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "voxmap/integrate.hpp"
#include "voxmap/map.hpp"
#include "voxmap/payload.hpp"

namespace voxmap {

/// Label id -> name table plus the scored subset and the ignore label.
///
/// File format, one entry per line:
///   ignore <id>
///   eval <id>,<id>,...
///   <id>\t<name>
struct LabelSet {
    std::map<uint16_t, std::string> names;
    std::vector<uint16_t> eval_subset;
    uint16_t ignore_label = 0;

    static LabelSet parse(std::istream& in);
    static LabelSet load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    void validate() const;  // ignore label must not be scored

    std::string name_of(uint16_t id) const;
};

/// Label remapping (class grouping). Ids without an entry map to themselves.
/// File format: `from_id\tto_id` per line.
struct RemapTable {
    std::unordered_map<uint16_t, uint16_t> mapping;

    static RemapTable load(const std::filesystem::path& path);
    uint16_t apply(uint16_t id) const {
        auto it = mapping.find(id);
        return it == mapping.end() ? id : it->second;
    }
    void apply(std::span<uint16_t> labels) const {
        for (auto& l : labels) l = apply(l);
    }
};

/// Row = ground truth class (evaluation subset order), column = prediction.
/// The extra last column collects predictions outside the subset; it counts
/// toward the true class's false negatives.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(const LabelSet& labels);

    size_t class_count() const { return classes_.size(); }
    const std::vector<uint16_t>& classes() const { return classes_; }

    void add(uint16_t ground_truth, uint16_t predicted);
    /// Throws LengthMismatchError if the sequences differ in length.
    void accumulate(std::span<const uint16_t> ground_truth, std::span<const uint16_t> predicted);
    /// Entrywise addition; merging equals sequential accumulation.
    void merge(const ConfusionMatrix& other);

    uint64_t at(size_t row, size_t col) const { return cells_[row * (classes_.size() + 1) + col]; }
    uint64_t true_positive(size_t c) const;
    uint64_t false_positive(size_t c) const;
    uint64_t false_negative(size_t c) const;
    uint64_t total() const;

private:
    std::vector<uint16_t> classes_;
    std::unordered_map<uint16_t, size_t> index_;
    uint16_t ignore_ = 0;
    std::vector<uint64_t> cells_;  // C x (C+1)
};

struct IouResult {
    double miou_percent = 0.0;         // [0, 100]
    std::vector<double> per_class;     // [0, 1] each, evaluation-subset order
};

/// IoU_c = TP / (TP + FP + FN), 0 when the denominator is 0; the mean is
/// taken over the whole evaluation subset and reported in percent.
IouResult mean_iou(const ConfusionMatrix& cm);

/// Label with the strictly maximal count. Ties go to `fallback` when it is
/// among the tied labels, otherwise to the smallest tied id. Empty semantics
/// return the fallback (or nullopt without one).
std::optional<uint16_t> voxel_top_label(const LeafPayload& payload,
                                        std::optional<uint16_t> fallback);

/// Map-accumulated relabeling: each point gets the top label of its leaf
/// voxel, falling back to its own network label (slot `network_slot`) on a
/// tie or when the voxel is unlabeled. Out-of-map points keep their network
/// label. The frame is expected to be integrated already.
std::vector<uint16_t> relabel_frame(const OccupancyMap& map, const ScanFrame& frame,
                                    uint8_t network_slot);

}  // namespace voxmap

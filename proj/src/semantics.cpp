#include "voxmap/semantics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "voxmap/error.hpp"

namespace voxmap {

namespace {

uint16_t parse_label_id(const std::string& tok, const std::string& context) {
    try {
        const unsigned long v = std::stoul(tok);
        if (v > 0xffff) throw std::out_of_range("label");
        return static_cast<uint16_t>(v);
    } catch (const std::exception&) {
        throw IoError("bad label id '" + tok + "' in " + context);
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

LabelSet LabelSet::parse(std::istream& in) {
    LabelSet ls;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = "label set line " + std::to_string(lineno);
        if (line.rfind("ignore", 0) == 0 && (line.size() == 6 || std::isspace(line[6]))) {
            ls.ignore_label = parse_label_id(trim(line.substr(6)), where);
        } else if (line.rfind("eval", 0) == 0 && (line.size() == 4 || std::isspace(line[4]))) {
            std::stringstream ss(trim(line.substr(4)));
            std::string tok;
            while (std::getline(ss, tok, ','))
                ls.eval_subset.push_back(parse_label_id(trim(tok), where));
        } else {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw IoError("missing tab separator in " + where);
            ls.names[parse_label_id(trim(line.substr(0, tab)), where)] = trim(line.substr(tab + 1));
        }
    }
    ls.validate();
    return ls;
}

LabelSet LabelSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label set file: " + path.string());
    return parse(in);
}

void LabelSet::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write label set file: " + path.string());
    out << "ignore " << ignore_label << "\n";
    out << "eval ";
    for (size_t i = 0; i < eval_subset.size(); ++i) out << (i ? "," : "") << eval_subset[i];
    out << "\n";
    for (const auto& [id, name] : names) out << id << "\t" << name << "\n";
}

void LabelSet::validate() const {
    if (std::find(eval_subset.begin(), eval_subset.end(), ignore_label) != eval_subset.end())
        throw IoError("ignore label is part of the evaluation subset");
}

std::string LabelSet::name_of(uint16_t id) const {
    auto it = names.find(id);
    return it == names.end() ? "class_" + std::to_string(id) : it->second;
}

RemapTable RemapTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open remap file: " + path.string());
    RemapTable rt;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = "remap line " + std::to_string(lineno);
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw IoError("missing tab separator in " + where);
        rt.mapping[parse_label_id(trim(line.substr(0, tab)), where)] =
            parse_label_id(trim(line.substr(tab + 1)), where);
    }
    return rt;
}

ConfusionMatrix::ConfusionMatrix(const LabelSet& labels)
    : classes_(labels.eval_subset), ignore_(labels.ignore_label) {
    for (size_t i = 0; i < classes_.size(); ++i) index_[classes_[i]] = i;
    cells_.assign(classes_.size() * (classes_.size() + 1), 0);
}

void ConfusionMatrix::add(uint16_t ground_truth, uint16_t predicted) {
    if (ground_truth == ignore_) return;
    auto git = index_.find(ground_truth);
    if (git == index_.end()) return;  // only subset classes are scored
    auto pit = index_.find(predicted);
    const size_t col = pit == index_.end() ? classes_.size() : pit->second;
    ++cells_[git->second * (classes_.size() + 1) + col];
}

void ConfusionMatrix::accumulate(std::span<const uint16_t> ground_truth,
                                 std::span<const uint16_t> predicted) {
    if (ground_truth.size() != predicted.size())
        throw LengthMismatchError("ground truth and prediction lengths differ");
    for (size_t i = 0; i < ground_truth.size(); ++i) add(ground_truth[i], predicted[i]);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) throw LengthMismatchError("confusion matrices differ in shape");
    for (size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
}

uint64_t ConfusionMatrix::true_positive(size_t c) const { return at(c, c); }

uint64_t ConfusionMatrix::false_positive(size_t c) const {
    uint64_t col = 0;
    for (size_t r = 0; r < classes_.size(); ++r) col += at(r, c);
    return col - at(c, c);
}

uint64_t ConfusionMatrix::false_negative(size_t c) const {
    uint64_t row = 0;
    for (size_t k = 0; k <= classes_.size(); ++k) row += at(c, k);
    return row - at(c, c);
}

uint64_t ConfusionMatrix::total() const {
    uint64_t t = 0;
    for (uint64_t v : cells_) t += v;
    return t;
}

IouResult mean_iou(const ConfusionMatrix& cm) {
    IouResult res;
    res.per_class.reserve(cm.class_count());
    double sum = 0.0;
    for (size_t c = 0; c < cm.class_count(); ++c) {
        const uint64_t tp = cm.true_positive(c);
        const uint64_t denom = tp + cm.false_positive(c) + cm.false_negative(c);
        const double iou = denom == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(denom);
        res.per_class.push_back(iou);
        sum += iou;
    }
    res.miou_percent = cm.class_count() == 0 ? 0.0 : 100.0 * sum / static_cast<double>(cm.class_count());
    return res;
}

std::optional<uint16_t> voxel_top_label(const LeafPayload& payload,
                                        std::optional<uint16_t> fallback) {
    if (payload.semantics.empty()) return fallback;
    uint32_t max_count = 0;
    for (const auto& lc : payload.semantics) max_count = std::max(max_count, lc.count);
    std::optional<uint16_t> smallest_tied;
    bool fallback_tied = false;
    for (const auto& lc : payload.semantics) {
        if (lc.count != max_count) continue;
        if (!smallest_tied) smallest_tied = lc.label;  // list is sorted ascending
        if (fallback && lc.label == *fallback) fallback_tied = true;
    }
    return fallback_tied ? fallback : smallest_tied;
}

std::vector<uint16_t> relabel_frame(const OccupancyMap& map, const ScanFrame& frame,
                                    uint8_t network_slot) {
    if (network_slot >= frame.label_slots)
        throw UnknownSlotError("network slot " + std::to_string(network_slot) + " not in frame");
    std::vector<uint16_t> out;
    out.reserve(frame.points.size());
    for (const PointRecord& pt : frame.points) {
        const uint16_t net = pt.labels[network_slot];
        const Vec3 w = frame.pose.apply(pt.position);
        if (!map.contains(w)) {
            out.push_back(net);
            continue;
        }
        const auto payload = map.get_payload(map.code_from_point(w, 0));
        if (!payload) {
            out.push_back(net);
            continue;
        }
        out.push_back(voxel_top_label(*payload, net).value_or(net));
    }
    return out;
}

}  // namespace voxmap

#include "gazekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "gazekit/gaze_object_assign.hpp"
#include "gazekit/ingest.hpp"
#include "gazekit/prompt_codec.hpp"

namespace gazekit {

void validate(const MetricConfig& cfg) {
    if (cfg.heatmap_grid < 8) throw InvalidInput("heatmap_grid must be at least 8");
    if (!(cfg.heatmap_sigma > 0)) throw InvalidInput("heatmap_sigma must be positive");
    if (!(cfg.iou_threshold > 0 && cfg.iou_threshold < 1))
        throw InvalidInput("iou_threshold must lie in (0,1)");
    if (cfg.gaze_box_margin < 1 || cfg.gaze_box_margin > 499)
        throw InvalidInput("gaze_box_margin must lie in [1,499]");
}

Grid<double> build_pred_heatmap(const GazePoint& p, const MetricConfig& cfg) {
    validate(cfg);
    validate(p);
    const int g = cfg.heatmap_grid;
    const double px = p.x * g, py = p.y * g;
    const double denom = 2.0 * cfg.heatmap_sigma * cfg.heatmap_sigma;
    Grid<double> out(g, g);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x) {
            const double dx = x - px, dy = y - py;
            out.at(x, y) = std::exp(-(dx * dx + dy * dy) / denom);
        }
    return out;
}

std::pair<int, int> point_cell(const GazePoint& p, int width, int height) {
    validate(p);
    const int cx = std::clamp(static_cast<int>(std::floor(p.x * width)), 0, width - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(p.y * height)), 0, height - 1);
    return {cx, cy};
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw InvalidInput("scores and labels differ in length");
    for (double s : scores)
        if (!std::isfinite(s)) throw InvalidInput("non-finite score");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of 1-based average ranks of the positives (Mann-Whitney U).
    double pos_rank_sum = 0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("AUC needs both positive and negative cells");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

double auc(const Grid<double>& heatmap, std::span<const GazePoint> gt_points) {
    if (gt_points.empty()) throw InvalidInput("AUC needs at least one ground-truth point");
    std::vector<std::uint8_t> labels(heatmap.count(), 0);
    for (const auto& p : gt_points) {
        const auto [cx, cy] = point_cell(p, heatmap.width(), heatmap.height());
        labels[static_cast<std::size_t>(cy) * static_cast<std::size_t>(heatmap.width()) +
               static_cast<std::size_t>(cx)] = 1;
    }
    return roc_auc(heatmap.values(), labels);
}

double l2_dist(const GazePoint& a, const GazePoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double min_dist(const GazePoint& pred, std::span<const GazePoint> gts) {
    if (gts.empty()) throw InvalidInput("min_dist needs at least one ground-truth point");
    double best = l2_dist(pred, gts.front());
    for (const auto& g : gts.subspan(1)) best = std::min(best, l2_dist(pred, g));
    return best;
}

double angle_error(const GazePoint& eye, const GazePoint& pred, const GazePoint& gt) {
    const double ax = pred.x - eye.x, ay = pred.y - eye.y;
    const double bx = gt.x - eye.x, by = gt.y - eye.y;
    if ((ax == 0 && ay == 0) || (bx == 0 && by == 0))
        throw UndefinedMetric("zero-length gaze vector");
    // atan2 of (|cross|, dot) is the arccos of the normalized dot product
    // without its loss of precision near 0 and 180 degrees.
    const double cross = ax * by - ay * bx;
    const double dot = ax * bx + ay * by;
    return std::atan2(std::abs(cross), dot) * 180.0 / std::numbers::pi;
}

double average_precision(std::span<const std::uint8_t> hits, std::size_t num_gt) {
    if (num_gt == 0) throw UndefinedMetric("average precision needs at least one ground truth");
    const std::size_t n = hits.size();
    std::vector<double> recall(n), precision(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (hits[i]) ++tp;
        recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    // Precision envelope, then sum over recall steps.
    for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0, prev_recall = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (recall[i] != prev_recall) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    return ap;
}

double ap_inout(std::span<const InOutItem> items) {
    std::vector<InOutItem> ranked(items.begin(), items.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const InOutItem& a, const InOutItem& b) {
        if (a.out_score != b.out_score) return a.out_score > b.out_score;
        return !a.is_out && b.is_out;
    });
    std::size_t positives = 0, seen = 0;
    double sum = 0;
    for (const auto& it : ranked) {
        ++seen;
        if (it.is_out) {
            ++positives;
            sum += static_cast<double>(positives) / static_cast<double>(seen);
        }
    }
    if (positives == 0) throw UndefinedMetric("AP needs at least one out-of-frame sample");
    return sum / static_cast<double>(positives);
}

ApObResult ap_ob(std::span<const Prediction> preds, std::span<const AnnotatedSample> gts,
                 std::span<const std::string> vocabulary, const MetricConfig& cfg) {
    validate(cfg);
    const std::set<std::string> vocab(vocabulary.begin(), vocabulary.end());
    auto admitted = [&](const std::string& c) { return vocab.empty() || vocab.contains(c); };

    struct Gt {
        PixelBox box;
        bool matched = false;
    };
    // class -> sample_id -> ground-truth boxes
    std::map<std::string, std::map<std::string, std::vector<Gt>>> gt_index;
    std::map<std::string, std::size_t> gt_count;
    for (const auto& s : gts) {
        if (!s.in_frame || !s.gazed_object || !admitted(s.gazed_object->class_label)) continue;
        const auto& obj = *s.gazed_object;
        gt_index[obj.class_label][s.sample_id].push_back(
            {bin_extent(norm_box(obj.bbox, s.image_size)), false});
        ++gt_count[obj.class_label];
    }

    struct Cand {
        double confidence;
        const std::string* sample_id;
        NormBox box;
    };
    std::map<std::string, std::vector<Cand>> by_class;
    for (const auto& p : preds) {
        const auto box = object_box_of(p);
        if (!box || p.out_of_frame || !admitted(*p.class_label)) continue;
        by_class[*p.class_label].push_back({p.confidence.value_or(1.0), &p.sample_id, *box});
    }

    ApObResult result;
    for (auto& [cls, num_gt] : gt_count) {
        auto& cands = by_class[cls];
        // Deterministic total order: confidence, then sample id, then box.
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.confidence != b.confidence) return a.confidence > b.confidence;
            if (*a.sample_id != *b.sample_id) return *a.sample_id < *b.sample_id;
            return std::tie(a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
                   std::tie(b.box.x1, b.box.y1, b.box.x2, b.box.y2);
        });
        auto& per_sample = gt_index[cls];
        std::vector<std::uint8_t> hits;
        hits.reserve(cands.size());
        for (const auto& c : cands) {
            bool hit = false;
            if (auto it = per_sample.find(*c.sample_id); it != per_sample.end()) {
                Gt* best = nullptr;
                double best_iou = -1;
                for (auto& g : it->second) {
                    const double v = iou(bin_extent(c.box), g.box);
                    if (!g.matched && v > best_iou) {
                        best_iou = v;
                        best = &g;
                    }
                }
                if (best && best_iou > cfg.iou_threshold) {
                    best->matched = true;
                    hit = true;
                }
            }
            hits.push_back(hit ? 1 : 0);
        }
        result.per_class[cls] = average_precision(hits, num_gt);
    }
    if (!result.per_class.empty()) {
        double sum = 0;
        for (const auto& [cls, ap] : result.per_class) sum += ap;
        result.mean = sum / static_cast<double>(result.per_class.size());
    }
    return result;
}

// --- accumulator ----------------------------------------------------------

MetricAccumulator::MetricAccumulator(MetricConfig cfg) : cfg_(cfg) { validate(cfg_); }

void MetricAccumulator::add_unknown(const Prediction& pred) {
    ++counts_.unknown_ids;
    warnings_.push_back("prediction for unknown sample_id '" + pred.sample_id + "'");
}

void MetricAccumulator::add(const Prediction& pred, const AnnotatedSample& sample) {
    ++counts_.predictions;
    seen_.push_back({sample.sample_id, sample.in_frame});
    if (pred.task == Task::PersonDetection) return;
    if (pred.task == Task::GazeObject) any_object_task_ = true;

    const double out_score = pred.out_score.value_or(pred.out_of_frame ? 1.0 : 0.0);
    inout_.push_back({sample.sample_id, {out_score, !sample.in_frame}});
    if (pred.class_label) object_preds_.push_back(pred);

    if (!sample.in_frame || sample.gaze_points.empty() || pred.task == Task::GazeInOut) return;
    if (pred.out_of_frame) {
        ++counts_.predicted_out;
        return;
    }
    const auto box = gaze_box_of(pred);
    if (!box) {
        ++counts_.missing_box;
        return;
    }
    PromptConfig decode;
    decode.lambda_margin = cfg_.gaze_box_margin;
    const GazePoint p = gaze_box_to_point(*box, decode);
    const GazePoint gt = centroid(sample.gaze_points);

    GazeTerm term;
    term.key = sample.sample_id + '\x1f' + std::string(task_name(pred.task));
    term.dist = l2_dist(p, gt);
    term.min_dist = min_dist(p, sample.gaze_points);
    try {
        term.auc = auc(build_pred_heatmap(p, cfg_), sample.gaze_points);
        term.has_auc = true;
    } catch (const UndefinedMetric&) {
    }
    try {
        term.angle = angle_error(sample.eye_point, p, gt);
        term.has_angle = true;
    } catch (const UndefinedMetric&) {
    }
    gaze_.push_back(std::move(term));
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
    gaze_.insert(gaze_.end(), other.gaze_.begin(), other.gaze_.end());
    inout_.insert(inout_.end(), other.inout_.begin(), other.inout_.end());
    object_preds_.insert(object_preds_.end(), other.object_preds_.begin(), other.object_preds_.end());
    seen_.insert(seen_.end(), other.seen_.begin(), other.seen_.end());
    warnings_.insert(warnings_.end(), other.warnings_.begin(), other.warnings_.end());
    counts_.predictions += other.counts_.predictions;
    counts_.unknown_ids += other.counts_.unknown_ids;
    counts_.predicted_out += other.counts_.predicted_out;
    counts_.missing_box += other.counts_.missing_box;
    any_object_task_ = any_object_task_ || other.any_object_task_;
}

MetricReport MetricAccumulator::finalize(std::span<const AnnotatedSample> all_samples,
                                         std::span<const std::string> vocabulary) const {
    MetricReport r;
    r.counts = counts_;
    r.warnings = warnings_;
    std::sort(r.warnings.begin(), r.warnings.end());

    std::map<std::string, bool> distinct;
    for (const auto& s : seen_) distinct.emplace(s.sample_id, s.in_frame);
    r.counts.samples = distinct.size();
    for (const auto& [id, in] : distinct) (in ? r.counts.in_frame : r.counts.out_frame)++;

    auto terms = gaze_;
    std::stable_sort(terms.begin(), terms.end(),
                     [](const GazeTerm& a, const GazeTerm& b) { return a.key < b.key; });
    r.counts.gaze_evaluated = terms.size();
    if (!terms.empty()) {
        double auc_sum = 0, dist_sum = 0, min_sum = 0, angle_sum = 0;
        std::size_t auc_n = 0, angle_n = 0;
        for (const auto& t : terms) {
            dist_sum += t.dist;
            min_sum += t.min_dist;
            if (t.has_auc) {
                auc_sum += t.auc;
                ++auc_n;
            }
            if (t.has_angle) {
                angle_sum += t.angle;
                ++angle_n;
            }
        }
        const auto n = static_cast<double>(terms.size());
        r.dist = dist_sum / n;
        r.min_dist = min_sum / n;
        if (auc_n) r.auc = auc_sum / static_cast<double>(auc_n);
        if (angle_n) r.angle_deg = angle_sum / static_cast<double>(angle_n);
        r.counts.auc_undefined = terms.size() - auc_n;
        r.counts.angle_undefined = terms.size() - angle_n;
    }

    auto inout = inout_;
    std::stable_sort(inout.begin(), inout.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<InOutItem> items;
    items.reserve(inout.size());
    for (const auto& [id, it] : inout) items.push_back(it);
    if (std::any_of(items.begin(), items.end(), [](const InOutItem& i) { return i.is_out; }))
        r.ap_inout = ap_inout(items);

    if (any_object_task_) {
        auto res = ap_ob(object_preds_, all_samples, vocabulary, cfg_);
        r.per_class_ap = std::move(res.per_class);
        r.ap_ob = res.mean;
    }
    return r;
}

MetricReport evaluate(std::span<const Prediction> preds, const DatasetManifest& manifest,
                      const MetricConfig& cfg) {
    std::map<std::string, const AnnotatedSample*> index;
    for (const auto& s : manifest.samples) index.emplace(s.sample_id, &s);
    MetricAccumulator acc(cfg);
    for (const auto& p : preds) {
        auto it = index.find(p.sample_id);
        if (it == index.end())
            acc.add_unknown(p);
        else
            acc.add(p, *it->second);
    }
    return acc.finalize(manifest.samples, manifest.vocabulary);
}

// --- output ---------------------------------------------------------------

namespace {

nlohmann::json opt(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string fmt(const std::optional<double>& v, int precision) {
    if (!v) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << *v;
    return os.str();
}

}  // namespace

nlohmann::json report_to_json(const MetricReport& r) {
    nlohmann::json j;
    j["auc"] = opt(r.auc);
    j["dist"] = opt(r.dist);
    j["min_dist"] = opt(r.min_dist);
    j["angle_deg"] = opt(r.angle_deg);
    j["ap_ob"] = opt(r.ap_ob);
    j["ap_inout"] = opt(r.ap_inout);
    j["per_class_ap"] = r.per_class_ap;
    const auto& c = r.counts;
    j["counts"] = {{"samples", c.samples},
                   {"in_frame", c.in_frame},
                   {"out_frame", c.out_frame},
                   {"predictions", c.predictions},
                   {"unknown_ids", c.unknown_ids},
                   {"gaze_evaluated", c.gaze_evaluated},
                   {"predicted_out", c.predicted_out},
                   {"missing_box", c.missing_box},
                   {"auc_undefined", c.auc_undefined},
                   {"angle_undefined", c.angle_undefined}};
    j["warnings"] = r.warnings;
    return j;
}

std::string report_to_table(const MetricReport& r, const std::string& label) {
    const std::vector<std::pair<std::string, std::string>> cols{
        {"AUC", fmt(r.auc, 3)},      {"Dist.", fmt(r.dist, 3)},   {"M. Dist.", fmt(r.min_dist, 3)},
        {"Angle", fmt(r.angle_deg, 1)}, {"AP_ob", fmt(r.ap_ob, 3)}, {"AP", fmt(r.ap_inout, 3)}};
    const std::size_t first = std::max<std::size_t>(label.size(), 6);
    std::ostringstream head, row;
    head << std::left << std::setw(static_cast<int>(first)) << "Method";
    row << std::left << std::setw(static_cast<int>(first)) << label;
    for (const auto& [name, value] : cols) {
        const int w = static_cast<int>(std::max(name.size(), value.size())) + 2;
        head << std::right << std::setw(w) << name;
        row << std::right << std::setw(w) << value;
    }
    std::ostringstream out;
    out << head.str() << '\n' << row.str() << '\n';
    out << "samples=" << r.counts.samples << " in_frame=" << r.counts.in_frame
        << " out_frame=" << r.counts.out_frame << '\n';
    return out.str();
}

std::string report_csv_header() {
    return "dataset,predictor,auc,dist,min_dist,angle_deg,ap_ob,ap_inout,samples,in_frame,out_frame";
}

std::string report_to_csv_row(const MetricReport& r, const std::string& dataset,
                              const std::string& predictor) {
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string();
        std::ostringstream os;
        os << std::setprecision(17) << *v;
        return os.str();
    };
    std::ostringstream os;
    os << dataset << ',' << predictor << ',' << cell(r.auc) << ',' << cell(r.dist) << ','
       << cell(r.min_dist) << ',' << cell(r.angle_deg) << ',' << cell(r.ap_ob) << ','
       << cell(r.ap_inout) << ',' << r.counts.samples << ',' << r.counts.in_frame << ','
       << r.counts.out_frame;
    return os.str();
}

}  // namespace gazekit

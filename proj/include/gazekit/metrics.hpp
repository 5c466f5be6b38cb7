#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazekit/core.hpp"
#include "gazekit/grid.hpp"
#include "json.hpp"

namespace gazekit {

struct DatasetManifest;

enum class ApInterpolation { AllPoints };

struct MetricConfig {
    int heatmap_grid = 64;
    double heatmap_sigma = 3.0;  // in grid cells
    double iou_threshold = 0.5;
    ApInterpolation ap_interpolation = ApInterpolation::AllPoints;
    // Margin used to decode gaze boxes back into points; must match the
    // margin the boxes were produced with.
    int gaze_box_margin = 20;
};

void validate(const MetricConfig& cfg);

// --- heatmap AUC ----------------------------------------------------------

/// Isotropic Gaussian centered at p * G in cell-index coordinates.
Grid<double> build_pred_heatmap(const GazePoint& p, const MetricConfig& cfg = {});

/// Cell containing a normalized point on a width x height grid.
std::pair<int, int> point_cell(const GazePoint& p, int width, int height);

/// Rank-based ROC area with average ranks for ties. Throws UndefinedMetric
/// if every label is the same.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Cells containing any ground-truth point are positives, all others negatives.
double auc(const Grid<double>& heatmap, std::span<const GazePoint> gt_points);

// --- distances ------------------------------------------------------------

double l2_dist(const GazePoint& a, const GazePoint& b);
double min_dist(const GazePoint& pred, std::span<const GazePoint> gts);

/// Angle in degrees between (pred - eye) and (gt - eye). Throws
/// UndefinedMetric when either vector has zero length.
double angle_error(const GazePoint& eye, const GazePoint& pred, const GazePoint& gt);

// --- average precision ----------------------------------------------------

struct InOutItem {
    double out_score = 0;
    bool is_out = false;
};

/// AP of ranking out-of-frame samples first. Equal scores put positives after
/// negatives. Throws UndefinedMetric without positives.
double ap_inout(std::span<const InOutItem> items);

/// Area under the all-points interpolated precision/recall curve. `hits` is
/// the TP flag of each ranked prediction; `num_gt` the number of ground truths.
double average_precision(std::span<const std::uint8_t> hits, std::size_t num_gt);

struct ApObResult {
    std::map<std::string, double> per_class;
    std::optional<double> mean;  // absent when no class has ground truth
};

/// Object-level AP at IoU > cfg.iou_threshold, compared in bin space. An
/// empty vocabulary admits every class.
ApObResult ap_ob(std::span<const Prediction> preds, std::span<const AnnotatedSample> gts,
                 std::span<const std::string> vocabulary, const MetricConfig& cfg = {});

// --- aggregate evaluation -------------------------------------------------

struct MetricCounts {
    std::size_t samples = 0;        // distinct annotated samples with a prediction
    std::size_t in_frame = 0;
    std::size_t out_frame = 0;
    std::size_t predictions = 0;    // predictions matched to a sample
    std::size_t unknown_ids = 0;
    std::size_t gaze_evaluated = 0; // predictions contributing to AUC/Dist
    std::size_t predicted_out = 0;  // in-frame samples predicted out of frame
    std::size_t missing_box = 0;
    std::size_t auc_undefined = 0;
    std::size_t angle_undefined = 0;

    bool operator==(const MetricCounts&) const = default;
};

struct MetricReport {
    std::optional<double> auc;
    std::optional<double> dist;
    std::optional<double> min_dist;
    std::optional<double> angle_deg;
    std::optional<double> ap_inout;
    std::optional<double> ap_ob;
    std::map<std::string, double> per_class_ap;
    MetricCounts counts;
    std::vector<std::string> warnings;
};

/// Per-prediction terms; merging concatenates and finalize sums in a
/// canonical order, so any sharding gives bit-identical results.
class MetricAccumulator {
public:
    explicit MetricAccumulator(MetricConfig cfg = {});

    void add(const Prediction& pred, const AnnotatedSample& sample);
    void add_unknown(const Prediction& pred);
    void merge(const MetricAccumulator& other);

    MetricReport finalize(std::span<const AnnotatedSample> all_samples,
                          std::span<const std::string> vocabulary) const;

private:
    struct GazeTerm {
        std::string key;
        double auc = 0, dist = 0, min_dist = 0, angle = 0;
        bool has_auc = false, has_angle = false;
    };
    struct SampleSeen {
        std::string sample_id;
        bool in_frame = true;
    };

    MetricConfig cfg_;
    std::vector<GazeTerm> gaze_;
    std::vector<std::pair<std::string, InOutItem>> inout_;
    std::vector<Prediction> object_preds_;
    std::vector<SampleSeen> seen_;
    std::vector<std::string> warnings_;
    MetricCounts counts_;
    bool any_object_task_ = false;
};

MetricReport evaluate(std::span<const Prediction> preds, const DatasetManifest& manifest,
                      const MetricConfig& cfg = {});

// --- report output --------------------------------------------------------

nlohmann::json report_to_json(const MetricReport& report);
/// Aligned text table; columns AUC, Dist., M. Dist., Angle, AP_ob, AP.
std::string report_to_table(const MetricReport& report, const std::string& label);
std::string report_csv_header();
std::string report_to_csv_row(const MetricReport& report, const std::string& dataset,
                              const std::string& predictor);

}  // namespace gazekit

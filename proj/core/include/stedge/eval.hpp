#pragma once

// Boundary evaluation: NMS thinning, tolerance-radius matching, ODS/OIS/AP.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stedge/image.hpp"

namespace stedge::eval {

/// Matching radius as a fraction of the image diagonal.
inline constexpr double kDefaultMaxDistFrac = 0.0075;
inline constexpr int kDefaultThresholds = 99;

struct PRPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

struct MetricsReport {
    double ods = 0.0;
    double ods_threshold = 0.0;
    double ois = 0.0;
    double ap = 0.0;
    std::vector<PRPoint> curve;
};

/// Counts produced by matching one predicted map against one ground truth.
struct MatchCounts {
    std::size_t matched_pred = 0;  // precision numerator
    std::size_t total_pred = 0;
    std::size_t matched_gt = 0;    // recall numerator
    std::size_t total_gt = 0;

    MatchCounts& operator+=(const MatchCounts& o) noexcept {
        matched_pred += o.matched_pred;
        total_pred += o.total_pred;
        matched_gt += o.matched_gt;
        total_gt += o.total_gt;
        return *this;
    }
};

double f_measure(double precision, double recall) noexcept;

/// Precision/recall/F from pooled counts; an empty prediction set has precision 0.
PRPoint pr_from_counts(const MatchCounts& counts, double threshold) noexcept;

/// Thins a probability map: orientation from the Hessian of the Gaussian-smoothed
/// map (sigma = 1, Sobel derivatives), then each pixel is kept only if its smoothed
/// value is a maximum among its two neighbours across the edge. Ties go to the
/// lexicographically smallest (row, column). Survivors keep their probability.
/// Passes repeat until nothing changes, so the result is a fixed point.
EdgeProbMap nms_thin(const EdgeProbMap& prob);

/// Greedy shortest-pair-first one-to-one matching within
/// max_dist_frac * image diagonal.
MatchCounts match_edges(const BinaryEdgeMap& pred, const BinaryEdgeMap& gt,
                        double max_dist_frac = kDefaultMaxDistFrac);

/// Pixels predicted at threshold t: prob >= t and prob > 0.
BinaryEdgeMap binarize_at(const EdgeProbMap& prob, double threshold);

/// Pooled precision/recall over a dataset at one threshold.
PRPoint pr_at_threshold(std::span<const EdgeProbMap> probs, std::span<const BinaryEdgeMap> gts, double threshold,
                        double max_dist_frac = kDefaultMaxDistFrac);

/// Evenly spaced thresholds k / (n + 1), k = 1..n.
std::vector<double> default_thresholds(int num_thresholds = kDefaultThresholds);

/// ODS, OIS and AP over the given thresholds. Probability maps are expected to be thinned.
MetricsReport ods_ois_ap(std::span<const EdgeProbMap> probs, std::span<const BinaryEdgeMap> gts,
                         int num_thresholds = kDefaultThresholds, double max_dist_frac = kDefaultMaxDistFrac);

MetricsReport ods_ois_ap(std::span<const EdgeProbMap> probs, std::span<const BinaryEdgeMap> gts,
                         std::span<const double> thresholds, double max_dist_frac = kDefaultMaxDistFrac);

/// Area under the monotone precision envelope, trapezoidal over recall from 0 to the
/// largest recall reached. The envelope is held flat down to recall 0.
/// Points without predictions are ignored.
double average_precision(std::span<const PRPoint> curve);

/// Best pooled F over binary prediction sets (e.g. one per detector setting).
/// Returns the F and the index of the winning set.
std::pair<double, std::size_t> best_binary_f(std::span<const std::vector<BinaryEdgeMap>> candidates,
                                             std::span<const BinaryEdgeMap> gts,
                                             double max_dist_frac = kDefaultMaxDistFrac);

/// {ods, ois, ap, ods_threshold, curve: [{t, p, r, f}]}.
std::string report_to_json(const MetricsReport& report);
void write_curve_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace stedge::eval

#include "stedge/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "stedge/imgproc.hpp"

namespace stedge::eval {

namespace {

void check_dataset(std::span<const EdgeProbMap> probs, std::span<const BinaryEdgeMap> gts) {
    if (probs.empty()) throw std::invalid_argument("evaluation: empty dataset");
    if (probs.size() != gts.size()) throw std::invalid_argument("evaluation: prediction/ground-truth count mismatch");
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!probs[i].same_shape(gts[i])) {
            throw std::invalid_argument("evaluation: shape mismatch at image " + std::to_string(i));
        }
    }
}

}  // namespace

double f_measure(double precision, double recall) noexcept {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

PRPoint pr_from_counts(const MatchCounts& c, double threshold) noexcept {
    PRPoint p;
    p.threshold = threshold;
    p.precision = c.total_pred > 0 ? static_cast<double>(c.matched_pred) / c.total_pred : 0.0;
    p.recall = c.total_gt > 0 ? static_cast<double>(c.matched_gt) / c.total_gt : 0.0;
    p.f_measure = f_measure(p.precision, p.recall);
    return p;
}

namespace {

EdgeProbMap thin_once(const EdgeProbMap& prob) {
    const int h = prob.height();
    const int w = prob.width();
    const FloatMap smooth = imgproc::gaussian_blur(prob, 7, 1.0);
    const imgproc::GradientField first = imgproc::sobel(smooth);
    const imgproc::GradientField second_x = imgproc::sobel(first.gx);
    const imgproc::GradientField second_y = imgproc::sobel(first.gy);

    EdgeProbMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = prob(y, x);
            if (v <= 0.0) continue;
            const double hxx = second_x.gx(y, x);
            const double hyy = second_y.gy(y, x);
            const double hxy = 0.5 * (second_x.gy(y, x) + second_y.gx(y, x));
            // Across-edge direction: eigenvector of the smaller Hessian eigenvalue.
            double angle = 0.5 * std::atan2(2.0 * hxy, hxx - hyy) + 0.5 * std::numbers::pi;
            angle = std::fmod(angle, std::numbers::pi);
            if (angle < 0.0) angle += std::numbers::pi;
            const double deg = angle * 180.0 / std::numbers::pi;
            int dy, dx;
            if (deg < 22.5 || deg >= 157.5) {
                dy = 0, dx = 1;
            } else if (deg < 67.5) {
                dy = 1, dx = 1;
            } else if (deg < 112.5) {
                dy = 1, dx = 0;
            } else {
                dy = 1, dx = -1;
            }
            const double s = smooth(y, x);
            bool keep = true;
            for (int sign : {-1, 1}) {
                const int ny = y + sign * dy;
                const int nx = x + sign * dx;
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const double ns = smooth(ny, nx);
                if (ns > s || (ns == s && std::tie(ny, nx) < std::tie(y, x))) {
                    keep = false;
                    break;
                }
            }
            if (keep) out(y, x) = v;
        }
    }
    return out;
}

}  // namespace

EdgeProbMap nms_thin(const EdgeProbMap& prob) {
    // Each pass only removes pixels, so this stops after at most one pass per pixel.
    EdgeProbMap cur = thin_once(prob);
    for (;;) {
        EdgeProbMap next = thin_once(cur);
        if (next == cur) return cur;
        cur = std::move(next);
    }
}

MatchCounts match_edges(const BinaryEdgeMap& pred, const BinaryEdgeMap& gt, double max_dist_frac) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("match_edges: dimension mismatch");
    const int h = pred.height();
    const int w = pred.width();
    const double max_dist = max_dist_frac * std::hypot(static_cast<double>(h), static_cast<double>(w));
    const double max_d2 = max_dist * max_dist;
    const int radius = static_cast<int>(std::floor(max_dist));

    MatchCounts counts;
    counts.total_pred = count_true(pred);
    counts.total_gt = count_true(gt);
    if (counts.total_pred == 0 || counts.total_gt == 0) return counts;

    struct Pair {
        int d2;
        std::int32_t p, g;
    };
    std::vector<Pair> pairs;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!pred(y, x)) continue;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= w || !gt(yy, xx)) continue;
                    const int d2 = dy * dy + dx * dx;
                    if (d2 > max_d2) continue;
                    pairs.push_back({d2, y * w + x, yy * w + xx});
                }
            }
        }
    }
    // Ties are ordered by the unordered pixel pair, so swapping pred and gt
    // replays the same sequence of candidate pairs.
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tuple(a.d2, std::min(a.p, a.g), std::max(a.p, a.g), a.p) <
               std::tuple(b.d2, std::min(b.p, b.g), std::max(b.p, b.g), b.p);
    });
    std::vector<std::uint8_t> used_pred(pred.size(), 0);
    std::vector<std::uint8_t> used_gt(gt.size(), 0);
    std::size_t matched = 0;
    for (const Pair& pr : pairs) {
        if (used_pred[pr.p] || used_gt[pr.g]) continue;
        used_pred[pr.p] = 1;
        used_gt[pr.g] = 1;
        ++matched;
    }
    counts.matched_pred = matched;
    counts.matched_gt = matched;
    return counts;
}

BinaryEdgeMap binarize_at(const EdgeProbMap& prob, double threshold) {
    BinaryEdgeMap out(prob.height(), prob.width(), 0);
    for (std::size_t i = 0; i < prob.size(); ++i) {
        out[i] = (prob[i] > 0.0 && prob[i] >= threshold) ? 1 : 0;
    }
    return out;
}

PRPoint pr_at_threshold(std::span<const EdgeProbMap> probs, std::span<const BinaryEdgeMap> gts, double threshold,
                        double max_dist_frac) {
    check_dataset(probs, gts);
    MatchCounts pooled;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        pooled += match_edges(binarize_at(probs[i], threshold), gts[i], max_dist_frac);
    }
    return pr_from_counts(pooled, threshold);
}

std::vector<double> default_thresholds(int num_thresholds) {
    if (num_thresholds < 1) throw std::invalid_argument("default_thresholds: need at least one threshold");
    std::vector<double> t(num_thresholds);
    for (int k = 1; k <= num_thresholds; ++k) t[k - 1] = static_cast<double>(k) / (num_thresholds + 1);
    return t;
}

double average_precision(std::span<const PRPoint> curve) {
    std::vector<std::pair<double, double>> pts;  // (recall, precision)
    for (const PRPoint& p : curve) {
        if (p.precision > 0.0 || p.recall > 0.0) pts.emplace_back(p.recall, p.precision);
    }
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second > b.second);
    });
    // One point per recall, keeping the best precision.
    pts.erase(std::unique(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
              pts.end());
    // Precision envelope: best precision achievable at this recall or higher.
    for (std::size_t i = pts.size() - 1; i-- > 0;) {
        pts[i].second = std::max(pts[i].second, pts[i + 1].second);
    }
    // The envelope extends flat to recall 0.
    if (pts.front().first > 0.0) pts.insert(pts.begin(), {0.0, pts.front().second});
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        area += (pts[i].first - pts[i - 1].first) * 0.5 * (pts[i].second + pts[i - 1].second);
    }
    return area;
}

MetricsReport ods_ois_ap(std::span<const EdgeProbMap> probs, std::span<const BinaryEdgeMap> gts,
                         std::span<const double> thresholds, double max_dist_frac) {
    check_dataset(probs, gts);
    if (thresholds.empty()) throw std::invalid_argument("ods_ois_ap: no thresholds");
    const std::size_t n_img = probs.size();
    const std::size_t n_t = thresholds.size();

    // counts[i][k]: image i at threshold k.
    std::vector<std::vector<MatchCounts>> counts(n_img, std::vector<MatchCounts>(n_t));
    for (std::size_t i = 0; i < n_img; ++i) {
        for (std::size_t k = 0; k < n_t; ++k) {
            counts[i][k] = match_edges(binarize_at(probs[i], thresholds[k]), gts[i], max_dist_frac);
        }
    }

    MetricsReport report;
    report.curve.reserve(n_t);
    for (std::size_t k = 0; k < n_t; ++k) {
        MatchCounts pooled;
        for (std::size_t i = 0; i < n_img; ++i) pooled += counts[i][k];
        report.curve.push_back(pr_from_counts(pooled, thresholds[k]));
        if (report.curve.back().f_measure > report.ods) {
            report.ods = report.curve.back().f_measure;
            report.ods_threshold = thresholds[k];
        }
    }

    MatchCounts best_pooled;
    for (std::size_t i = 0; i < n_img; ++i) {
        std::size_t best_k = 0;
        double best_f = -1.0;
        for (std::size_t k = 0; k < n_t; ++k) {
            const double f = pr_from_counts(counts[i][k], thresholds[k]).f_measure;
            if (f > best_f) {
                best_f = f;
                best_k = k;
            }
        }
        best_pooled += counts[i][best_k];
    }
    report.ois = pr_from_counts(best_pooled, 0.0).f_measure;
    report.ap = average_precision(report.curve);
    return report;
}

MetricsReport ods_ois_ap(std::span<const EdgeProbMap> probs, std::span<const BinaryEdgeMap> gts, int num_thresholds,
                         double max_dist_frac) {
    const std::vector<double> t = default_thresholds(num_thresholds);
    return ods_ois_ap(probs, gts, std::span<const double>(t), max_dist_frac);
}

std::pair<double, std::size_t> best_binary_f(std::span<const std::vector<BinaryEdgeMap>> candidates,
                                             std::span<const BinaryEdgeMap> gts, double max_dist_frac) {
    double best = -1.0;
    std::size_t best_index = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (candidates[c].size() != gts.size()) {
            throw std::invalid_argument("best_binary_f: candidate set size mismatch");
        }
        MatchCounts pooled;
        for (std::size_t i = 0; i < gts.size(); ++i) pooled += match_edges(candidates[c][i], gts[i], max_dist_frac);
        const double f = pr_from_counts(pooled, 0.0).f_measure;
        if (f > best) {
            best = f;
            best_index = c;
        }
    }
    return {std::max(best, 0.0), best_index};
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["ods"] = report.ods;
    j["ois"] = report.ois;
    j["ap"] = report.ap;
    j["ods_threshold"] = report.ods_threshold;
    auto& curve = j["curve"] = nlohmann::json::array();
    for (const PRPoint& p : report.curve) {
        curve.push_back({{"t", p.threshold}, {"p", p.precision}, {"r", p.recall}, {"f", p.f_measure}});
    }
    return j.dump(2);
}

void write_curve_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_curve_csv: cannot open " + path.string());
    os << "threshold,precision,recall,f\n";
    os.precision(17);
    for (const PRPoint& p : report.curve) {
        os << p.threshold << ',' << p.precision << ',' << p.recall << ',' << p.f_measure << '\n';
    }
}

}  // namespace stedge::eval

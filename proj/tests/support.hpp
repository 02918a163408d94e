#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <stdexcept>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "stedge/image.hpp"

namespace stedge::fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("stedge_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline Image random_image(std::mt19937_64& rng, int h, int w, int c) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w, c);
    for (double& v : img.values()) v = u(rng);
    return img;
}

inline EdgeProbMap random_prob(std::mt19937_64& rng, int h, int w, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    EdgeProbMap m(h, w);
    for (double& v : m.values()) v = u(rng);
    return m;
}

inline BinaryEdgeMap random_binary(std::mt19937_64& rng, int h, int w, double density) {
    std::bernoulli_distribution b(density);
    BinaryEdgeMap m(h, w, 0);
    for (auto& v : m.values()) v = b(rng) ? 1 : 0;
    return m;
}

/// Vertical step: columns < step_col are `lo`, the rest `hi`.
inline Image step_image(int h, int w, int step_col, double lo, double hi, int channels = 1) {
    Image img(h, w, channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) img.at(y, x, c) = x < step_col ? lo : hi;
        }
    }
    return img;
}

/// Component sizes by breadth-first flood fill (8-connectivity), sorted ascending.
inline std::vector<std::size_t> flood_fill_sizes(const BinaryEdgeMap& bin) {
    const int h = bin.height();
    const int w = bin.width();
    std::vector<std::uint8_t> seen(bin.size(), 0);
    std::vector<std::size_t> sizes;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (!bin(sy, sx) || seen[static_cast<std::size_t>(sy) * w + sx]) continue;
            std::vector<std::pair<int, int>> queue{{sy, sx}};
            seen[static_cast<std::size_t>(sy) * w + sx] = 1;
            for (std::size_t head = 0; head < queue.size(); ++head) {
                const auto [y, x] = queue[head];
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy;
                        const int xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w || !bin(yy, xx)) continue;
                        auto& s = seen[static_cast<std::size_t>(yy) * w + xx];
                        if (s) continue;
                        s = 1;
                        queue.emplace_back(yy, xx);
                    }
                }
            }
            sizes.push_back(queue.size());
        }
    }
    std::sort(sizes.begin(), sizes.end());
    return sizes;
}

/// Maximum-cardinality bipartite matching between edge pixels within
/// `max_dist` (Euclidean), by bitmask dynamic programming over gt pixels.
inline std::size_t optimal_match_count(const BinaryEdgeMap& pred, const BinaryEdgeMap& gt, double max_dist) {
    std::vector<std::pair<int, int>> p, g;
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (pred(y, x)) p.emplace_back(y, x);
            if (gt(y, x)) g.emplace_back(y, x);
        }
    }
    if (g.size() > 20) throw std::invalid_argument("optimal_match_count: too many gt pixels");
    const std::size_t full = std::size_t{1} << g.size();
    std::vector<int> best(full, -1);
    best[0] = 0;
    for (const auto& [py, px] : p) {
        std::vector<int> next = best;
        for (std::size_t mask = 0; mask < full; ++mask) {
            if (best[mask] < 0) continue;
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (mask & (std::size_t{1} << j)) continue;
                const double d = std::hypot(double(py - g[j].first), double(px - g[j].second));
                if (d > max_dist) continue;
                const std::size_t m2 = mask | (std::size_t{1} << j);
                next[m2] = std::max(next[m2], best[mask] + 1);
            }
        }
        best = std::move(next);
    }
    return static_cast<std::size_t>(*std::max_element(best.begin(), best.end()));
}

/// ODS, OIS and AP from brute-force enumeration.
struct MetricsOracle {
    double ods = 0.0;
    double ois = 0.0;
    double ap = 0.0;
};

inline double f_from_counts(double tp, double n_pred, double n_gt) {
    const double p = n_pred > 0 ? tp / n_pred : 0.0;
    const double r = n_gt > 0 ? tp / n_gt : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

// Every distinct probability serves as a threshold. Valid only when the
// matching radius is below one pixel (8x8 maps at the default fraction), where
// a prediction can match only the gt pixel under it.
inline MetricsOracle enumerate_metrics(const std::vector<EdgeProbMap>& probs, const std::vector<BinaryEdgeMap>& gts) {
    std::set<double> values;
    for (const auto& p : probs)
        for (double v : p.values())
            if (v > 0) values.insert(v);
    struct Counts {
        double tp = 0, np = 0, ng = 0;
    };
    auto counts = [&](std::size_t i, double t) {
        Counts c;
        for (std::size_t k = 0; k < probs[i].size(); ++k) {
            const bool pred = probs[i][k] >= t;
            c.np += pred;
            c.ng += gts[i][k];
            c.tp += pred && gts[i][k];
        }
        return c;
    };
    MetricsOracle o;
    std::vector<std::pair<double, double>> pr;  // (recall, precision)
    for (double t : values) {
        Counts pooled;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const Counts c = counts(i, t);
            pooled.tp += c.tp;
            pooled.np += c.np;
            pooled.ng += c.ng;
        }
        o.ods = std::max(o.ods, f_from_counts(pooled.tp, pooled.np, pooled.ng));
        pr.emplace_back(pooled.tp / pooled.ng, pooled.np > 0 ? pooled.tp / pooled.np : 0.0);
    }
    Counts best_sum;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        Counts best;
        double best_f = -1;
        for (double t : values) {
            const Counts c = counts(i, t);
            const double f = f_from_counts(c.tp, c.np, c.ng);
            if (f > best_f) best_f = f, best = c;
        }
        best_sum.tp += best.tp;
        best_sum.np += best.np;
        best_sum.ng += best.ng;
    }
    o.ois = f_from_counts(best_sum.tp, best_sum.np, best_sum.ng);
    // Envelope: P(r) = max precision at recall >= r, held flat to recall 0.
    std::map<double, double> best_at;
    for (const auto& [r, p] : pr) best_at[r] = std::max(best_at[r], p);
    std::vector<std::pair<double, double>> env(best_at.begin(), best_at.end());
    for (std::size_t i = env.size() - 1; i-- > 0;) env[i].second = std::max(env[i].second, env[i + 1].second);
    double prev_r = 0.0, prev_p = env.front().second;
    for (const auto& [r, p] : env) {
        o.ap += (r - prev_r) * 0.5 * (p + prev_p);
        prev_r = r;
        prev_p = p;
    }
    return o;
}

/// Periodic forward-difference operator as an explicit matrix.
inline Eigen::MatrixXd difference_matrix(int h, int w, bool horizontal) {
    const int n = h * w;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int p = y * w + x;
            const int q = horizontal ? y * w + (x + 1) % w : ((y + 1) % h) * w + x;
            d(p, q) += 1.0;
            d(p, p) -= 1.0;
        }
    }
    return d;
}

inline Eigen::VectorXd as_vector(const FloatMap& m) {
    Eigen::VectorXd v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = m[i];
    return v;
}

/// argmin_S |S - I|^2 + beta (|Dx S - h|^2 + |Dy S - v|^2) by a dense solve of the normal equations.
inline Eigen::VectorXd dense_s_solve(const FloatMap& in, const FloatMap& hh, const FloatMap& vv, double beta) {
    const int h = in.height(), w = in.width();
    const Eigen::MatrixXd dx = difference_matrix(h, w, true);
    const Eigen::MatrixXd dy = difference_matrix(h, w, false);
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(h * w, h * w) + beta * (dx.transpose() * dx + dy.transpose() * dy);
    const Eigen::VectorXd b = as_vector(in) + beta * (dx.transpose() * as_vector(hh) + dy.transpose() * as_vector(vv));
    return a.ldlt().solve(b);
}

}  // namespace stedge::fixtures

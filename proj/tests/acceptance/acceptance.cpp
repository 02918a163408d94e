// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   stedge_acceptance --work-dir DIR [--only 1,2,...] [--known-failures 5,7]
//
// With --known-failures the exit status is 0 only when exactly the listed
// criteria fail; an unexpected failure or an unexpected pass both exit 1.
// Criteria 4, 5 and 8 share one synthetic corpus and one self-training run.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>

#include "stedge/eval.hpp"
#include "stedge/imgproc.hpp"
#include "stedge/io.hpp"
#include "stedge/log.hpp"
#include "stedge/losses.hpp"
#include "stedge/model.hpp"
#include "stedge/selftrain.hpp"
#include "stedge/smoothing.hpp"
#include "stedge/synth.hpp"
#include "stedge_cli/commands.hpp"
#include "support.hpp"

namespace {

using namespace stedge;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Gradients of the total loss through the tiny backbone.

Outcome gradient_check() {
    model::BackboneConfig bc;
    bc.num_blocks = 3;
    bc.base_channels = 4;
    bc.input_height = bc.input_width = 16;
    losses::LossConfig lc;
    lc.delta = {0.3, 0.3, 1.3};
    lc.mu = 1.0;

    std::mt19937_64 rng(101);
    model::NetworkParams params = model::NetworkParams::initialize(bc, 5);
    const Image x = fixtures::random_image(rng, 16, 16, 3);
    const Image xp = smoothing::perturb(x);
    const BinaryEdgeMap label = fixtures::random_binary(rng, 16, 16, 0.2);

    auto loss_at = [&](const model::NetworkParams& p) {
        return losses::total_loss(model::forward(p, x).maps, model::forward(p, xp).maps, label, lc).loss;
    };
    const auto lx = model::forward(params, x).maps;
    const auto lxp = model::forward(params, xp).maps;
    const losses::MultiPairLoss tl = losses::total_loss(lx, lxp, label, lc);
    std::vector<double> grad = model::backward(params, x, tl.grads_first);
    const std::vector<double> grad_p = model::backward(params, xp, tl.grads_second);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += grad_p[k];

    std::uniform_int_distribution<std::size_t> pick(0, params.parameter_count() - 1);
    const double h = 1e-4;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = pick(rng);
        const double saved = params.values()[k];
        params.values()[k] = saved + h;
        const double up = loss_at(params);
        params.values()[k] = saved - h;
        const double down = loss_at(params);
        params.values()[k] = saved;
        const double fd = (up - down) / (2 * h);
        const double scale = std::max({std::abs(fd), std::abs(grad[k]), 1e-10});
        worst = std::max(worst, std::abs(fd - grad[k]) / scale);
    }
    return {worst < 1e-3, format("max relative error %.2e over 50 coordinates (limit 1e-3)", worst)};
}

// ---------------------------------------------------------------------------
// 2. Loss formulas on 4x4 fixtures, against values written out term by term.

Outcome loss_fixtures() {
    BinaryEdgeMap label(4, 4, 0);
    for (int i = 0; i < 4; ++i) label(i, i) = 1;
    label(0, 3) = 1;  // 5 positives, 11 negatives
    EdgeProbMap pred(4, 4), pred_p(4, 4), pred2(4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            const int i = 4 * y + x;
            pred(y, x) = 0.05 + 0.055 * i;
            pred_p(y, x) = 0.9 - 0.05 * i;
            pred2(y, x) = 0.5 + 0.02 * (i % 5);
        }
    }
    const double lambda = 1.1;
    const double alpha = lambda * 5.0 / 16.0;
    const double beta = 11.0 / 16.0;
    auto hand_wce = [&](const EdgeProbMap& p) {
        double s = 0.0;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) s += label(y, x) ? -beta * std::log(p(y, x)) : -alpha * std::log(1 - p(y, x));
        return s;
    };
    auto hand_mlc = [](const EdgeProbMap& a, const EdgeProbMap& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return s;
    };

    std::vector<std::string> failed;
    double worst = 0.0;
    auto check = [&](const char* name, double got, double want) {
        const double err = std::abs(got - want);
        worst = std::max(worst, err);
        if (!(err <= 1e-9)) failed.push_back(name);
    };
    const losses::ClassWeights w = losses::class_weights(label, lambda);
    check("alpha", w.alpha, alpha);
    check("beta", w.beta, beta);
    check("wce_block", losses::wce_block(pred, label, w).loss, hand_wce(pred));
    check("mlc_block", losses::mlc_block(pred, pred_p).loss, hand_mlc(pred, pred_p));

    const losses::LossConfig cfg{lambda, {0.7, 1.3}, 0.8};
    const std::vector<EdgeProbMap> preds{pred, pred2};
    const std::vector<EdgeProbMap> perturbed{pred_p, pred};
    const double wce = 0.7 * hand_wce(pred) + 1.3 * hand_wce(pred2);
    const double mlc = 0.7 * hand_mlc(pred, pred_p) + 1.3 * hand_mlc(pred2, pred);
    check("wce_multi_layer", losses::wce_multi_layer(preds, label, cfg).loss, wce);
    check("mlc_multi_layer", losses::mlc_multi_layer(preds, perturbed, cfg).loss, mlc);
    check("total_loss", losses::total_loss(preds, perturbed, label, cfg).loss, wce + 0.8 * mlc);

    std::string detail = format("max abs error %.1e over 7 quantities (limit 1e-9)", worst);
    for (const auto& f : failed) detail += "; mismatch in " + f;
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------
// 3. Post-processing invariants.

Outcome post_processing() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> density(0.1, 0.7);
    int subset_fail = 0, small_fail = 0, idem_fail = 0;
    std::size_t kept = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const EdgeProbMap pred = fixtures::random_prob(rng, 64, 64);
        const BinaryEdgeMap c = fixtures::random_binary(rng, 64, 64, density(rng));
        const BinaryEdgeMap out = selftrain::post_process(pred, c);
        kept += count_true(out);
        subset_fail += !is_subset(out, c);
        const auto sizes = fixtures::flood_fill_sizes(out);
        small_fail += !sizes.empty() && sizes.front() < 30;
        const BinaryEdgeMap once = imgproc::connectivity_filter(c, 30);
        idem_fail += imgproc::connectivity_filter(once, 30) != once || imgproc::connectivity_filter(out, 30) != out;
    }
    return {subset_fail + small_fail + idem_fail == 0,
            format("100 pairs, %zu pixels kept; not subset %d, small components %d, filter not idempotent %d",
                   kept, subset_fail, small_fail, idem_fail)};
}

// ---------------------------------------------------------------------------
// Shared corpus and runs for criteria 4, 5 and 8.

struct Corpus {
    std::vector<selftrain::Sample> train;
    std::vector<selftrain::Sample> test;
    std::vector<BinaryEdgeMap> test_gt;
    fs::path train_dir;
};

cli::RunConfig run_config(const Corpus& corpus, const fs::path& out, double mu) {
    cli::RunConfig cfg;
    cfg.dataset_dir = corpus.train_dir;
    cfg.output_dir = out;
    auto& t = cfg.train;
    t.backbone.num_blocks = 3;
    t.backbone.base_channels = 4;
    t.backbone.input_height = t.backbone.input_width = 128;
    t.loss.delta = {0.3, 0.3, 1.3};
    t.loss.mu = mu;
    t.adam.learning_rate = 3e-3;
    t.batch_size = 8;
    t.epochs_phase1 = 20;
    t.epochs_per_round = 2;
    t.termination_pct = 2.0;
    t.max_rounds = 10;
    t.seed = 7;
    t.workers = 1;
    return cfg;
}

Corpus make_corpus(const fs::path& dir) {
    const synth::SynthConfig sc;  // 128 x 128
    cli::cmd_synth(dir / "train", 200, 11, sc);
    cli::cmd_synth(dir / "test", 50, 12, sc);
    Corpus c;
    c.train_dir = dir / "train" / "images";
    c.train = selftrain::load_dataset(c.train_dir);
    c.test = selftrain::load_dataset(dir / "test" / "images");
    for (const auto& s : c.test) c.test_gt.push_back(io::read_binary_map(dir / "test" / "gt" / (s.id + ".png")));
    return c;
}

struct Scored {
    double ods = 0.0;
    double ois = 0.0;
    double ap = 0.0;
    double threshold = 0.0;
    std::size_t edge_pixels = 0;  // thinned predictions at the ODS threshold
};

Scored score(const model::NetworkParams& params, const Corpus& c) {
    std::vector<EdgeProbMap> maps = selftrain::predict_fused(params, c.test, 1);
    for (auto& m : maps) m = eval::nms_thin(m);
    const eval::MetricsReport r = eval::ods_ois_ap(maps, c.test_gt);
    Scored s{r.ods, r.ois, r.ap, r.ods_threshold, 0};
    for (const auto& m : maps) s.edge_pixels += count_true(eval::binarize_at(m, r.ods_threshold));
    return s;
}

// Best pooled F over a sweep of hysteresis thresholds and three pre-filters:
// none, the 5x5 Gaussian, and the blur plus bilateral filter of the labeler.
std::pair<double, std::string> best_canny(const Corpus& c) {
    const selftrain::LabelingConfig lc;
    const char* names[] = {"raw", "gaussian", "gaussian+bilateral"};
    double best = 0.0;
    std::string where;
    for (int variant = 0; variant < 3; ++variant) {
        std::vector<imgproc::GradientField> fields;
        for (const auto& s : c.test) {
            const Image pre = variant == 0   ? s.image
                              : variant == 1 ? imgproc::gaussian_blur(s.image, 5)
                                             : selftrain::blur_for_canny(s.image, lc);
            fields.push_back(imgproc::sobel(imgproc::to_grayscale(pre).channel(0)));
        }
        for (int high = 10; high <= 400; high += 10) {
            for (double ratio : {0.25, 0.5, 0.75, 1.0}) {
                const auto th = imgproc::CannyThresholds::from_255(ratio * high, high);
                eval::MatchCounts pooled;
                for (std::size_t i = 0; i < fields.size(); ++i) {
                    pooled += eval::match_edges(imgproc::canny(fields[i], th), c.test_gt[i]);
                }
                const double f = eval::pr_from_counts(pooled, 0.0).f_measure;
                if (f > best) {
                    best = f;
                    where = format("%s, (%g, %d)/255", names[variant], ratio * high, high);
                }
            }
        }
    }
    return {best, where};
}

struct SharedRuns {
    Corpus corpus;
    selftrain::SelfTrainResult with_consistency;  // mu = 1, via cmd_selftrain
    fs::path run_dir;
    double seconds = 0.0;
};

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 4. Upper bound and termination of the self-training loop.

Outcome termination(const SharedRuns& runs) {
    const auto& r = runs.with_consistency;
    const std::size_t bound = r.store.upper_bound_edges();
    bool within = true;
    std::string counts;
    for (std::size_t n : r.state.edge_counts) {
        within = within && n <= bound;
        counts += (counts.empty() ? "" : " ") + std::to_string(n);
    }
    const int rounds = static_cast<int>(r.state.edge_counts.size()) - 1;
    const bool halted = r.terminated_by_rule && rounds <= 10;
    return {within && halted, format("N_edge per round [%s], upper bound %zu, %d rounds, %s, %.0f s", counts.c_str(),
                                     bound, rounds, r.terminated_by_rule ? "halted by the 2% rule" : "hit the round cap",
                                     runs.seconds)};
}

// ---------------------------------------------------------------------------
// 5. Ordering: Canny < phase one < self-trained, consistency >= none.

Outcome ordering(const SharedRuns& runs, const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();
    const Corpus& c = runs.corpus;
    const auto [canny_f, canny_where] = best_canny(c);
    const Scored phase_one = score(runs.with_consistency.phase_one_params, c);
    const Scored mu1 = score(runs.with_consistency.params, c);

    cli::RunConfig cfg = run_config(c, work / "run_mu0", 0.0);
    const selftrain::SelfTrainResult no_consistency = selftrain::self_train(c.train, cfg.train);
    const Scored mu0 = score(no_consistency.params, c);

    const bool a = phase_one.ods > canny_f;
    const bool b = mu1.ods >= phase_one.ods + 0.02;
    const bool d = mu1.ods >= mu0.ods - 0.005;
    const bool e = mu1.edge_pixels < mu0.edge_pixels;
    std::printf("    best fixed-threshold Canny  ODS %.4f (%s)\n", canny_f, canny_where.c_str());
    std::printf("    phase one                   ODS %.4f OIS %.4f AP %.4f\n", phase_one.ods, phase_one.ois,
                phase_one.ap);
    std::printf("    self-trained, mu = 1        ODS %.4f OIS %.4f AP %.4f, %zu edge pixels at t = %.2f, %zu rounds\n",
                mu1.ods, mu1.ois, mu1.ap, mu1.edge_pixels, mu1.threshold,
                runs.with_consistency.state.edge_counts.size() - 1);
    std::printf("    self-trained, mu = 0        ODS %.4f OIS %.4f AP %.4f, %zu edge pixels at t = %.2f, %zu rounds\n",
                mu0.ods, mu0.ois, mu0.ap, mu0.edge_pixels, mu0.threshold,
                no_consistency.state.edge_counts.size() - 1);
    std::printf("    [%s] phase one > Canny\n", a ? "ok" : "not met");
    std::printf("    [%s] mu = 1 >= phase one + 0.02\n", b ? "ok" : "not met");
    std::printf("    [%s] mu = 1 >= mu = 0 - 0.005\n", d ? "ok" : "not met");
    std::printf("    [%s] mu = 1 predicts fewer edge pixels than mu = 0\n", e ? "ok" : "not met");
    return {a && b && d && e, format("%d of 4 sub-checks met, %.0f s plus the shared run", a + b + d + e, since(t0))};
}

// ---------------------------------------------------------------------------
// 6. Evaluation harness against enumeration and optimal matching.

EdgeProbMap grid_prob(std::mt19937_64& rng, double density) {
    std::bernoulli_distribution on(density);
    std::uniform_int_distribution<int> level(1, 98);
    EdgeProbMap p(8, 8, 0.0);
    for (double& v : p.values())
        if (on(rng)) v = level(rng) / 100.0 + 0.005;
    return p;
}

Outcome harness() {
    double worst = 0.0;
    int fixtures_checked = 0;
    auto compare = [&](const std::vector<EdgeProbMap>& probs, const std::vector<BinaryEdgeMap>& gts) {
        std::set<double> values;
        for (const auto& p : probs)
            for (double v : p.values())
                if (v > 0) values.insert(v);
        const std::vector<double> thresholds(values.begin(), values.end());
        const eval::MetricsReport r = eval::ods_ois_ap(probs, gts, std::span<const double>(thresholds));
        const fixtures::MetricsOracle o = fixtures::enumerate_metrics(probs, gts);
        worst = std::max({worst, std::abs(r.ods - o.ods), std::abs(r.ois - o.ois), std::abs(r.ap - o.ap)});
        ++fixtures_checked;
    };

    // Hand-built pair: a diagonal and a vertical bar, scored by a ramp and a
    // shifted copy with one spurious response.
    {
        BinaryEdgeMap g1(8, 8, 0), g2(8, 8, 0);
        EdgeProbMap p1(8, 8, 0.0), p2(8, 8, 0.0);
        for (int i = 0; i < 8; ++i) {
            g1(i, i) = 1;
            g2(i, 3) = 1;
            p1(i, i) = 0.9 - 0.1 * i;
            p1(i, 7 - i) = std::max(p1(i, 7 - i), 0.35);
            p2(i, i % 2 == 0 ? 3 : 4) = 0.25 + 0.08 * i;
        }
        p2(0, 0) = 0.95;
        compare({p1, p2}, {g1, g2});
    }
    std::mt19937_64 rng(606);
    for (int seed = 0; seed < 20; ++seed) {
        std::vector<EdgeProbMap> probs;
        std::vector<BinaryEdgeMap> gts;
        for (int i = 0; i < 2; ++i) {
            gts.push_back(fixtures::random_binary(rng, 8, 8, 0.25));
            probs.push_back(grid_prob(rng, 0.5));
        }
        compare(probs, gts);
    }

    int mismatches = 0;
    std::uniform_int_distribution<int> count(0, 12), coord(0, 15);
    for (int trial = 0; trial < 200; ++trial) {
        BinaryEdgeMap pred(16, 16, 0), gt(16, 16, 0);
        for (int k = count(rng); k > 0; --k) pred(coord(rng), coord(rng)) = 1;
        for (int k = count(rng); k > 0; --k) gt(coord(rng), coord(rng)) = 1;
        const double radius = eval::kDefaultMaxDistFrac * std::hypot(16.0, 16.0);
        mismatches += eval::match_edges(pred, gt).matched_pred != fixtures::optimal_match_count(pred, gt, radius);
    }
    return {worst <= 1e-12 && mismatches == 0,
            format("%d fixtures, max |diff| %.1e (limit 1e-12); greedy != optimal on %d of 200 instances",
                   fixtures_checked, worst, mismatches)};
}

// ---------------------------------------------------------------------------
// 7. L0 smoothing solver.

Outcome l0_solver() {
    // Fixed point.
    double fixed = 0.0;
    for (const auto& [size, col] : {std::pair{8, 4}, std::pair{64, 23}}) {
        const Image step = fixtures::step_image(size, size, col, 0.1, 0.9);
        const Image out = smoothing::l0_smooth(step);
        for (std::size_t i = 0; i < out.values().size(); ++i)
            fixed = std::max(fixed, std::abs(out.values()[i] - step.values()[i]));
    }

    // True objective after every outer iteration.
    const smoothing::L0Params params;
    int rises = 0, steps = 0;
    double first = 0.0, last = 0.0, peak = 0.0;
    for (int i = 0; i < 5; ++i) {
        synth::SynthConfig sc;
        sc.height = sc.width = 64;
        sc.texture_amplitude = 0.3;
        const Image img = synth::generate(17, i, sc).image;
        const FloatMap gray = imgproc::to_grayscale(img).channel(0);
        std::vector<smoothing::L0Iteration> trace;
        smoothing::l0_smooth_plane(gray, params, &trace);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < trace.size(); ++k) {
            const double obj = trace[k].data_term + params.lambda * static_cast<double>(trace[k].grad_nonzero);
            if (i == 0) {
                if (k == 0) first = obj;
                peak = std::max(peak, obj);
                last = obj;
            }
            if (k > 0) {
                ++steps;
                rises += obj > prev + 1e-12;
            }
            prev = obj;
        }
    }

    // Dense solve of the S-subproblem.
    std::mt19937_64 rng(707);
    double dense = 0.0;
    for (double beta : {0.04, 3.0, 500.0}) {
        const FloatMap in = fixtures::random_prob(rng, 8, 8);
        const FloatMap hh = fixtures::random_prob(rng, 8, 8, -0.5, 0.5);
        const FloatMap vv = fixtures::random_prob(rng, 8, 8, -0.5, 0.5);
        const Eigen::VectorXd want = fixtures::dense_s_solve(in, hh, vv, beta);
        const FloatMap got = smoothing::solve_s_subproblem(in, hh, vv, beta);
        for (std::size_t k = 0; k < got.size(); ++k) dense = std::max(dense, std::abs(got[k] - want[k]));
    }
    std::printf("    fixed point max |diff| %.2e (limit 1e-3)\n", fixed);
    std::printf("    objective rose on %d of %d outer iterations; image 0: %.2f first, %.2f peak, %.2f last\n", rises,
                steps, first, peak, last);
    std::printf("    dense 8x8 solve max |diff| %.2e (limit 1e-8)\n", dense);
    const bool pass = fixed < 1e-3 && rises == 0 && dense < 1e-8;
    return {pass, format("fixed point %s, monotone objective %s, dense solve %s", fixed < 1e-3 ? "ok" : "not met",
                         rises == 0 ? "ok" : "not met", dense < 1e-8 ? "ok" : "not met")};
}

// ---------------------------------------------------------------------------
// 8. Determinism of cmd_selftrain.

std::vector<fs::path> artifacts(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".bin" || ext == ".png")) out.push_back(fs::relative(e.path(), root));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

Outcome determinism(const SharedRuns& runs, const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();
    const cli::RunConfig cfg = run_config(runs.corpus, work / "run_repeat", 1.0);
    cli::cmd_selftrain(cfg);
    const auto a = artifacts(runs.run_dir);
    const auto b = artifacts(cfg.output_dir);
    std::size_t differing = 0, labels = 0, checkpoints = 0;
    for (const auto& rel : a) {
        rel.extension() == ".png" ? ++labels : ++checkpoints;
        differing += slurp(runs.run_dir / rel) != slurp(cfg.output_dir / rel);
    }
    const bool pass = a == b && differing == 0 && checkpoints > 0 && labels > 0;
    return {pass, format("%zu checkpoints and %zu label PNGs compared, %zu differ, file sets %s, %.0f s", checkpoints,
                         labels, differing, a == b ? "equal" : "differ", since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::string work_dir;
    std::vector<int> only;
    std::vector<int> known;
    app.add_option("--work-dir", work_dir, "Scratch directory for corpora and runs")->required();
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--known-failures", known, "Criteria expected to fail")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    spdlog::set_level(spdlog::level::warn);
    const fs::path work = fs::absolute(work_dir);
    fs::remove_all(work);
    fs::create_directories(work);
    auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

    std::set<int> failed;
    auto report = [&](int k, const char* name, const std::function<Outcome()>& fn) {
        if (!wanted(k)) return;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) failed.insert(k);
        std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str(), since(t0));
        std::fflush(stdout);
    };

    report(1, "gradient correctness", gradient_check);
    report(2, "loss formulas", loss_fixtures);
    report(3, "post-processing invariants", post_processing);
    report(6, "evaluation harness", harness);
    report(7, "L0 smoothing solver", l0_solver);

    if (wanted(4) || wanted(5) || wanted(8)) {
        SharedRuns runs;
        const auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            runs.corpus = make_corpus(work / "corpus");
            runs.run_dir = work / "run";
            runs.with_consistency = cli::cmd_selftrain(run_config(runs.corpus, runs.run_dir, 1.0));
        } catch (const std::exception& e) {
            error = e.what();
        }
        runs.seconds = since(t0);
        auto shared = [&](std::function<Outcome()> fn) {
            return [&error, fn] { return error.empty() ? fn() : Outcome{false, "shared run threw: " + error}; };
        };
        report(4, "termination and upper bound", shared([&] { return termination(runs); }));
        report(5, "method ordering", shared([&] { return ordering(runs, work); }));
        report(8, "determinism", shared([&] { return determinism(runs, work); }));
    }

    std::set<int> expected;
    for (int k : known)
        if (wanted(k)) expected.insert(k);
    if (failed.empty()) {
        std::printf("all criteria passed\n");
    } else {
        std::string list;
        for (int k : failed) list += (list.empty() ? "" : ", ") + std::to_string(k);
        std::printf("%zu criteria failed: %s\n", failed.size(), list.c_str());
    }
    for (int k : expected)
        if (!failed.contains(k)) std::printf("criterion %d passed but is listed as a known failure\n", k);
    if (!expected.empty() && failed == expected) std::printf("failures match the known-failure list\n");
    return failed == expected ? 0 : 1;
}

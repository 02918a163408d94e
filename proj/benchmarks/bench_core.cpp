#include <benchmark/benchmark.h>

#include <random>

#include "stedge/eval.hpp"
#include "stedge/imgproc.hpp"
#include "stedge/losses.hpp"
#include "stedge/model.hpp"
#include "stedge/smoothing.hpp"
#include "stedge/synth.hpp"

namespace {

using namespace stedge;

Image sample(int size) {
    synth::SynthConfig cfg;
    cfg.height = cfg.width = size;
    return synth::generate(1, 0, cfg).image;
}

model::BackboneConfig tiny(int size) {
    model::BackboneConfig cfg;
    cfg.num_blocks = 3;
    cfg.base_channels = 4;
    cfg.input_height = cfg.input_width = size;
    return cfg;
}

void BM_Forward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const auto params = model::NetworkParams::initialize(tiny(size), 1);
    const Image img = sample(size);
    for (auto _ : state) benchmark::DoNotOptimize(model::forward(params, img));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const auto params = model::NetworkParams::initialize(tiny(size), 1);
    const Image img = sample(size);
    const BinaryEdgeMap label = imgproc::canny(img, imgproc::kCannyLow);
    const losses::LossConfig lc{1.1, {0.3, 0.3, 1.3}, 1.0};
    for (auto _ : state) {
        model::ForwardCache cache;
        const model::SideOutputs out = model::forward(params, img, &cache);
        const losses::MultiLoss l = losses::wce_multi_layer(out.maps, label, lc);
        benchmark::DoNotOptimize(model::backward(params, cache, l.grads));
    }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_L0Smooth(benchmark::State& state) {
    const Image img = sample(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(smoothing::l0_smooth(img));
}
BENCHMARK(BM_L0Smooth)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Canny(benchmark::State& state) {
    const Image img = sample(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(imgproc::canny(img, imgproc::kCannyLow));
}
BENCHMARK(BM_Canny)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Bilateral(benchmark::State& state) {
    const Image img = sample(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(imgproc::bilateral_filter(img));
}
BENCHMARK(BM_Bilateral)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MatchEdges(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    synth::SynthConfig cfg;
    cfg.height = cfg.width = size;
    const synth::SynthSample s = synth::generate(1, 0, cfg);
    const BinaryEdgeMap pred = imgproc::canny(s.image, imgproc::kCannyLow);
    for (auto _ : state) benchmark::DoNotOptimize(eval::match_edges(pred, s.boundary));
}
BENCHMARK(BM_MatchEdges)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_NmsThin(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EdgeProbMap prob(size, size);
    for (double& v : prob.values()) v = u(rng);
    prob = imgproc::gaussian_blur(prob, 5, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(eval::nms_thin(prob));
}
BENCHMARK(BM_NmsThin)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

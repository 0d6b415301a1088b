#include <benchmark/benchmark.h>

#include "ccsp/degrade.hpp"
#include "ccsp/denoiser.hpp"
#include "ccsp/metrics.hpp"
#include "ccsp/model.hpp"

using namespace ccsp;

namespace {

Tensor rand_tensor(const Shape& shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    Rng rng(seed);
    t.fill_uniform(rng, lo, hi);
    return t;
}

void BM_Conv2d(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    Variable x = Variable::constant(rand_tensor({1, c, 64, 64}, 1));
    Variable w = Variable::param(rand_tensor({c, c, 3, 3}, 2, -0.1, 0.1));
    Variable b = Variable::param(Tensor({c}));
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d(x, w, b, 1, 1, 1).value().data());
    }
}
BENCHMARK(BM_Conv2d)->Arg(8)->Arg(16);

void BM_CotForward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    CoTParams p = CoTParams::make(c, {}, "bench", 3);
    Variable x = Variable::constant(rand_tensor({1, c, 16, 16}, 4));
    for (auto _ : state) {
        benchmark::DoNotOptimize(cot_forward(x, p).value().data());
    }
}
BENCHMARK(BM_CotForward)->Arg(8)->Arg(16);

void BM_CcspBlock(benchmark::State& state) {
    CcspParams p = CcspParams::make(16, {}, "bench", 5);
    Variable x = Variable::constant(rand_tensor({1, 16, 16, 16}, 6));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ccsp_block_forward(x, p).value().data());
    }
}
BENCHMARK(BM_CcspBlock);

void BM_DetectorForward(benchmark::State& state) {
    DetectorModel model = DetectorModel::make({}, 7);
    Variable x = Variable::constant(rand_tensor({1, 3, 64, 64}, 8, 0.0, 1.0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(x).scales[0].obj.value().data());
    }
}
BENCHMARK(BM_DetectorForward);

void BM_DenoiserForward(benchmark::State& state) {
    DenoiserParams p = DenoiserParams::make({16, false}, "bench", 9);
    Variable x = Variable::constant(rand_tensor({1, 3, 64, 64}, 10, 0.0, 1.0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(denoise_forward(x, p).value().data());
    }
}
BENCHMARK(BM_DenoiserForward);

void BM_JointBackward(benchmark::State& state) {
    DetectorModel det = DetectorModel::make({}, 11);
    DenoiserParams den = DenoiserParams::make({16, true}, "bench", 12);
    Tensor deg = rand_tensor({2, 3, 64, 64}, 13, 0.0, 1.0);
    Tensor clean = rand_tensor({2, 3, 64, 64}, 14, 0.0, 1.0);
    std::vector<std::vector<LabeledBox>> labels = {{{0, {0.5, 0.5, 0.3, 0.3}}},
                                                   {{1, {0.4, 0.6, 0.2, 0.2}}}};
    GridTarget targets = assign_targets(labels, det.cfg.anchors, det.grids_for(64, 64), 3);
    ParamMap params;
    det.collect(params);
    den.collect(params);
    for (auto _ : state) {
        for (auto& [name, v] : params) v.zero_grad();
        Variable restored = denoise_forward(Variable::constant(deg), den);
        DetectionLossNodes nodes = detection_loss(det.forward(restored), targets, {});
        Variable total = joint_loss(nodes.l1, denoise_loss(restored, clean), {});
        backward(total);
        benchmark::DoNotOptimize(total.scalar());
    }
}
BENCHMARK(BM_JointBackward);

void BM_Nms(benchmark::State& state) {
    Rng rng(15);
    std::vector<Detection> dets;
    for (int i = 0; i < 252; ++i) {
        dets.push_back({{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.4),
                         rng.uniform(0.05, 0.4)},
                        static_cast<int>(rng.below(3)), rng.uniform(0.0, 1.0)});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(nms(dets, 0.45, 0.25).size());
    }
}
BENCHMARK(BM_Nms);

void BM_AveragePrecision(benchmark::State& state) {
    Rng rng(16);
    std::vector<std::pair<double, bool>> scored;
    for (int i = 0; i < 1000; ++i) scored.emplace_back(rng.uniform(), rng.below(3) == 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(average_precision(scored, 400));
    }
}
BENCHMARK(BM_AveragePrecision);

void BM_ApplyFog(benchmark::State& state) {
    Tensor img = rand_tensor({3, 128, 128}, 17, 0.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_fog(img, 1.5, 0.9, 3).data());
    }
}
BENCHMARK(BM_ApplyFog);

void BM_ApplyMotionBlur(benchmark::State& state) {
    Tensor img = rand_tensor({3, 128, 128}, 18, 0.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_motion_blur(img, 9, 30.0).data());
    }
}
BENCHMARK(BM_ApplyMotionBlur);

}  // namespace

BENCHMARK_MAIN();

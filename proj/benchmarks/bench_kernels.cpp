#include <benchmark/benchmark.h>

#include "advhash/advhash.hpp"
#include "advhash/gemm.hpp"

using namespace advhash;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-1, 1);
    return t;
}

void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const Tensor a = random_tensor(rng, {n, n}), b = random_tensor(rng, {n, n});
    Tensor c({n, n});
    for (auto _ : state) {
        detail::gemm_accumulate(n, n, n, detail::row_major(a.raw(), n), detail::row_major(b.raw(), n),
                                c.data().data(), n);
        benchmark::DoNotOptimize(c.raw());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(256)->Arg(512);

// Second conv of mnist-ref: 64 -> 128 channels, 5x5 kernel on 12x12 maps.
void BM_ConvForward(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    const DenseLayerParams p{random_tensor(rng, {128, 64, 5, 5}), random_tensor(rng, {128})};
    const Tensor x = random_tensor(rng, {batch, 64, 12, 12});
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(p, x, {}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ConvForward)->Arg(1)->Arg(32);

// First fc of mnist-ref (2048 -> 512), computed from hash buckets.
void BM_HashedForward(benchmark::State& state) {
    const auto den = static_cast<std::uint64_t>(state.range(0));
    Rng rng(3);
    HashedParams hp = make_hashed_params({512, 2048}, {1, den}, 11, 12);
    for (auto& w : hp.real_weights) w = rng.uniform(-0.1, 0.1);
    const Tensor bias = random_tensor(rng, {512});
    const Tensor x = random_tensor(rng, {32, 2048});
    for (auto _ : state) benchmark::DoNotOptimize(hashed_forward(hp, bias, x, Activation::relu));
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_HashedForward)->Arg(8)->Arg(64);

// Expanding the same layer's buckets into the virtual matrix (done once per
// SGD step for hashed layers).
void BM_ExpandVirtual(benchmark::State& state) {
    Rng rng(4);
    HashedParams hp = make_hashed_params({512, 2048}, {1, 64}, 21, 22);
    for (auto& w : hp.real_weights) w = rng.uniform(-0.1, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(expand_virtual(hp));
}
BENCHMARK(BM_ExpandVirtual);

// One SGD-sized forward + backward through the full mnist-ref network.
void BM_NetworkStep(benchmark::State& state) {
    const auto den = static_cast<std::uint64_t>(state.range(0));
    ArchitectureSpec spec = preset_architecture("mnist-ref");
    if (den > 1) spec = with_hash_rate(spec, {1, den});
    const Network net = Network::initialize(spec, 5);
    Rng rng(5);
    Tensor x({32, 1, 28, 28});
    for (auto& v : x.data()) v = rng.uniform(0, 1);
    std::vector<int> labels(32);
    for (auto& l : labels) l = static_cast<int>(rng.below(10));
    for (auto _ : state) {
        const ForwardTrace t = net.forward(x);
        benchmark::DoNotOptimize(net.backward(t, softmax_xent_backward(softmax(t.logits), labels)));
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_NetworkStep)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

// The distro benchmark_main archive holds LTO bytecode from another compiler
// release, so the entry point is defined here.
BENCHMARK_MAIN();

#include "advhash/hashing.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>

#include "advhash/error.hpp"
#include "advhash/kernels.hpp"
#include "advhash/network.hpp"
#include "advhash/rng.hpp"

namespace advhash {

namespace {

std::uint64_t parse_u64(const std::string& s, const std::string& whole) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw ConfigError("compression rate: cannot parse '" + whole + "'");
    return v;
}

}  // namespace

CompressionRate CompressionRate::parse(const std::string& text) {
    CompressionRate r;
    if (auto slash = text.find('/'); slash != std::string::npos) {
        r.num = parse_u64(text.substr(0, slash), text);
        r.den = parse_u64(text.substr(slash + 1), text);
    } else if (auto dot = text.find('.'); dot != std::string::npos) {
        const std::string frac = text.substr(dot + 1);
        if (frac.size() > 18) throw ConfigError("compression rate: too many decimals in '" + text + "'");
        std::uint64_t scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        const std::string whole = text.substr(0, dot);
        r.num = (whole.empty() ? 0 : parse_u64(whole, text)) * scale + (frac.empty() ? 0 : parse_u64(frac, text));
        r.den = scale;
    } else {
        r.num = parse_u64(text, text);
        r.den = 1;
    }
    if (r.num == 0 || r.den == 0 || r.num > r.den)
        throw ConfigError("compression rate must lie in (0, 1], got '" + text + "'");
    const auto g = std::gcd(r.num, r.den);
    r.num /= g;
    r.den /= g;
    return r;
}

std::size_t CompressionRate::buckets_for(std::size_t n) const {
    const auto k = (static_cast<unsigned __int128>(num) * n + den - 1) / den;
    return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

std::string CompressionRate::str() const {
    return std::to_string(num) + "/" + std::to_string(den);
}

std::uint64_t hash_position(std::uint64_t seed, std::uint64_t i, std::uint64_t j) noexcept {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ i);
    return mix64(h ^ j);
}

std::size_t hash_bucket(std::uint64_t layer_seed, std::uint64_t i, std::uint64_t j, std::size_t buckets) {
    if (buckets == 0) throw ConfigError("hash_bucket: bucket count must be at least 1");
    return static_cast<std::size_t>(hash_position(layer_seed, i, j) % buckets);
}

int hash_sign(std::uint64_t sign_seed, std::uint64_t i, std::uint64_t j) noexcept {
    return (hash_position(sign_seed, i, j) & 1U) ? -1 : 1;
}

void HashedParams::validate(const std::string& layer) const {
    if (virtual_shape.size() < 2) throw ConfigError(layer + ": virtual shape must have rank >= 2");
    const std::size_t n = virtual_count();
    if (n == 0) throw ConfigError(layer + ": empty virtual shape");
    const std::size_t k = rate.buckets_for(n);
    if (real_weights.size() != k)
        throw FormatError(layer, "expected " + std::to_string(k) + " real weights for rate " + rate.str() + " over " +
                                     std::to_string(n) + " virtual weights, found " +
                                     std::to_string(real_weights.size()));
    if (layer_seed == sign_seed) throw ConfigError(layer + ": bucket and sign seeds must differ");
    if (k > std::numeric_limits<std::uint32_t>::max()) throw ConfigError(layer + ": too many buckets");
}

HashedParams make_hashed_params(Shape virtual_shape, CompressionRate rate, std::uint64_t layer_seed,
                                std::uint64_t sign_seed) {
    HashedParams p;
    p.virtual_shape = std::move(virtual_shape);
    p.rate = rate;
    p.layer_seed = layer_seed;
    p.sign_seed = sign_seed;
    p.real_weights.assign(rate.buckets_for(p.virtual_count()), 0.0);
    p.validate();
    return p;
}

HashMapping HashMapping::build(const HashedParams& params) {
    params.validate();
    const std::size_t rows = params.rows();
    const std::size_t cols = params.cols();
    const std::size_t k = params.buckets();
    HashMapping m;
    m.bucket.resize(rows * cols);
    m.sign.resize(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            m.bucket[i * cols + j] = static_cast<std::uint32_t>(hash_bucket(params.layer_seed, i, j, k));
            m.sign[i * cols + j] = static_cast<std::int8_t>(hash_sign(params.sign_seed, i, j));
        }
    return m;
}

void HashMapping::expand(const HashedParams& params, std::span<double> out) const {
    if (out.size() != bucket.size()) throw DimensionError("hash expand", std::to_string(bucket.size()), std::to_string(out.size()));
    for (std::size_t p = 0; p < bucket.size(); ++p) out[p] = params.real_weights[bucket[p]] * sign[p];
}

void HashMapping::scatter_add(std::span<const double> virtual_grad, std::span<double> bucket_grad) const {
    if (virtual_grad.size() != bucket.size())
        throw DimensionError("hash scatter", std::to_string(bucket.size()), std::to_string(virtual_grad.size()));
    for (std::size_t p = 0; p < bucket.size(); ++p) bucket_grad[bucket[p]] += sign[p] * virtual_grad[p];
}

Tensor expand_virtual(const HashedParams& params) {
    params.validate();
    Tensor v(params.virtual_shape);
    const std::size_t rows = params.rows();
    const std::size_t cols = params.cols();
    const std::size_t k = params.buckets();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            v[i * cols + j] = params.real_weights[hash_bucket(params.layer_seed, i, j, k)] *
                              hash_sign(params.sign_seed, i, j);
    return v;
}

namespace {

struct FcBatch {
    std::size_t batch;
    bool batched;
};

FcBatch hashed_batch(const HashedParams& params, const Tensor& input) {
    params.validate();
    if (params.virtual_shape.size() != 2)
        throw DimensionError("hashed_forward", "2-D virtual shape", shape_string(params.virtual_shape));
    const std::size_t cols = params.cols();
    if (input.rank() == 1 && input.dim(0) == cols) return {1, false};
    if (input.rank() == 2 && input.dim(1) == cols) return {input.dim(0), true};
    throw DimensionError("hashed_forward", "[" + std::to_string(cols) + "] or [N, " + std::to_string(cols) + "]",
                         shape_string(input.shape()));
}

}  // namespace

Tensor hashed_forward(const HashedParams& params, const Tensor& bias, const Tensor& input, Activation activation,
                      HashedForwardState* state) {
    const auto fb = hashed_batch(params, input);
    const std::size_t rows = params.rows();
    const std::size_t cols = params.cols();
    const std::size_t k = params.buckets();
    if (bias.size() != rows) throw DimensionError("hashed_forward bias", "[" + std::to_string(rows) + "]", shape_string(bias.shape()));

    Tensor z(fb.batched ? Shape{fb.batch, rows} : Shape{rows});
    for (std::size_t b = 0; b < fb.batch; ++b) {
        const double* x = input.raw() + b * cols;
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = bias[i];
            for (std::size_t j = 0; j < cols; ++j) {
                const double w = params.real_weights[hash_bucket(params.layer_seed, i, j, k)] *
                                 hash_sign(params.sign_seed, i, j);
                acc += x[j] * w;
            }
            z[b * rows + i] = acc;
        }
    }
    Tensor out = activation == Activation::relu ? relu(z) : z;
    if (state) {
        state->input = input;
        state->pre_activation = std::move(z);
        state->activation = activation;
    }
    return out;
}

HashedGrads hashed_backward(const HashedParams& params, const HashedForwardState& state, const Tensor& upstream) {
    if (state.input.empty() || state.pre_activation.empty())
        throw StateError("hashed_backward: no cached forward state");
    const auto fb = hashed_batch(params, state.input);
    const std::size_t rows = params.rows();
    const std::size_t cols = params.cols();
    const std::size_t k = params.buckets();
    if (upstream.shape() != state.pre_activation.shape())
        throw StateError("hashed_backward: upstream gradient " + shape_string(upstream.shape()) +
                         " does not match the cached output " + shape_string(state.pre_activation.shape()));

    const Tensor delta =
        state.activation == Activation::relu ? relu_backward(state.pre_activation, upstream) : upstream;

    HashedGrads g;
    g.input = Tensor(state.input.shape());
    g.real_weights.assign(k, 0.0);
    g.bias = Tensor({rows});
    for (std::size_t b = 0; b < fb.batch; ++b)
        for (std::size_t i = 0; i < rows; ++i) g.bias[i] += delta[b * rows + i];

    for (std::size_t b = 0; b < fb.batch; ++b)
        for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
                const double w = params.real_weights[hash_bucket(params.layer_seed, i, j, k)] *
                                 hash_sign(params.sign_seed, i, j);
                acc += delta[b * rows + i] * w;
            }
            g.input[b * cols + j] = acc;
        }

    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t b = 0; b < fb.batch; ++b) s += delta[b * rows + i] * state.input[b * cols + j];
            g.real_weights[hash_bucket(params.layer_seed, i, j, k)] += hash_sign(params.sign_seed, i, j) * s;
        }
    return g;
}

CompressionReport compression_report(const Network& network) {
    CompressionReport r;
    for (std::size_t l = 0; l < network.layer_count(); ++l) {
        const auto* p = network.params(l);
        if (!p) continue;
        r.virtual_param_count += p->virtual_weight_count();
        r.stored_param_count += p->stored_weight_count();
    }
    if (r.virtual_param_count == 0) throw ConfigError("compression_report: network has no parameter layers");
    r.footprint_ratio = static_cast<double>(r.stored_param_count) / static_cast<double>(r.virtual_param_count);
    return r;
}

}  // namespace advhash

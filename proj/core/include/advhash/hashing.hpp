#pragma once

// Hash-based weight sharing.
//
// A hashed layer presents a "virtual" weight matrix V of the dense layer's
// shape but stores only K real bucket values:
//
//     V[i, j] = real_weights[bucket(i, j)] * sign(i, j)
//
// where bucket() and sign() are two independently seeded hashes of the
// position. For convolutions i is the output channel and j the flat index of
// (in_channel, ky, kx). The exact hash is documented in docs/formats.md so
// that any implementation can rebuild the identical virtual matrix from a
// checkpoint.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advhash/tensor.hpp"

namespace advhash {

class Network;

// Exact rational compression rate num/den in (0, 1].
struct CompressionRate {
    std::uint64_t num = 1;
    std::uint64_t den = 1;

    static CompressionRate parse(const std::string& text);  // "1/64", "0.125", "1"
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool dense() const { return num == den; }
    // ceil(rate * n), at least 1.
    std::size_t buckets_for(std::size_t n) const;
    std::string str() const;

    friend bool operator==(const CompressionRate&, const CompressionRate&) = default;
};

std::uint64_t hash_position(std::uint64_t seed, std::uint64_t i, std::uint64_t j) noexcept;

// Bucket index in [0, buckets). Throws ConfigError for buckets == 0.
std::size_t hash_bucket(std::uint64_t layer_seed, std::uint64_t i, std::uint64_t j, std::size_t buckets);

// +1 or -1; never 0.
int hash_sign(std::uint64_t sign_seed, std::uint64_t i, std::uint64_t j) noexcept;

struct HashedParams {
    std::vector<double> real_weights;
    Shape virtual_shape;
    std::uint64_t layer_seed = 0;
    std::uint64_t sign_seed = 0;
    CompressionRate rate;

    std::size_t virtual_count() const { return shape_size(virtual_shape); }
    std::size_t rows() const { return virtual_shape.at(0); }
    std::size_t cols() const { return virtual_count() / rows(); }
    std::size_t buckets() const { return real_weights.size(); }

    // Checks K = ceil(rate * N), K >= 1 and distinct seeds.
    void validate(const std::string& layer = "hashed layer") const;

    friend bool operator==(const HashedParams&, const HashedParams&) = default;
};

HashedParams make_hashed_params(Shape virtual_shape, CompressionRate rate, std::uint64_t layer_seed,
                                std::uint64_t sign_seed);

// Precomputed (bucket, sign) for every virtual position in row-major order.
struct HashMapping {
    std::vector<std::uint32_t> bucket;
    std::vector<std::int8_t> sign;

    static HashMapping build(const HashedParams& params);

    // Writes V into `out` (N elements).
    void expand(const HashedParams& params, std::span<double> out) const;

    // Adds sign(i,j) * virtual_grad[i,j] to bucket(i,j), visiting positions
    // in row-major order.
    void scatter_add(std::span<const double> virtual_grad, std::span<double> bucket_grad) const;
};

Tensor expand_virtual(const HashedParams& params);

enum class Activation { none, relu };

struct HashedForwardState {
    Tensor input;
    Tensor pre_activation;
    Activation activation = Activation::none;
};

struct HashedGrads {
    Tensor input;
    std::vector<double> real_weights;
    Tensor bias;
};

// Fully connected forward computed directly from the buckets:
// z[i] = bias[i] + sum_j real_weights[bucket(i,j)] * sign(i,j) * x[j]
// accumulated in ascending j, then the activation. Accepts [cols] or [N, cols].
Tensor hashed_forward(const HashedParams& params, const Tensor& bias, const Tensor& input, Activation activation,
                      HashedForwardState* state = nullptr);

// Backward of hashed_forward. `upstream` is the gradient w.r.t. the layer's
// output (after the activation). The bucket gradient is the signed sum of the
// virtual-position gradients that hash into it.
HashedGrads hashed_backward(const HashedParams& params, const HashedForwardState& state, const Tensor& upstream);

struct CompressionReport {
    std::size_t virtual_param_count = 0;
    std::size_t stored_param_count = 0;
    double footprint_ratio = 1.0;
};

// Weight parameters only; biases are stored uncompressed in every layer and
// are not counted.
CompressionReport compression_report(const Network& network);

}  // namespace advhash

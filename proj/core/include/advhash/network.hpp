#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "advhash/architecture.hpp"
#include "advhash/hashing.hpp"
#include "advhash/kernels.hpp"
#include "advhash/tensor.hpp"

namespace advhash {

/// Parameters of one conv or fc layer, stored either densely or as hash
/// buckets. Computation always goes through `effective()`, which for hashed
/// layers holds the expanded virtual matrix; call `sync()` after editing
/// `stored_weights()` of a hashed layer.
class ParamLayer {
public:
    static ParamLayer dense(Tensor weights, Tensor bias);
    static ParamLayer hashed(HashedParams params, Tensor bias);

    bool is_hashed() const noexcept { return hashed_.has_value(); }
    const HashedParams* hashed_params() const noexcept { return hashed_ ? &*hashed_ : nullptr; }
    const HashMapping* mapping() const noexcept { return mapping_.get(); }

    const DenseLayerParams& effective() const noexcept { return effective_; }
    const Tensor& bias() const noexcept { return effective_.bias; }
    Tensor& bias() noexcept { return effective_.bias; }

    // Dense weights, or the hashed layer's real bucket values.
    std::span<double> stored_weights() noexcept;
    std::span<const double> stored_weights() const noexcept;

    std::size_t virtual_weight_count() const noexcept { return effective_.weights.size(); }
    std::size_t stored_weight_count() const noexcept { return stored_weights().size(); }

    void sync();

    // Maps a gradient over the virtual matrix into stored space (identity for
    // dense layers, signed bucket sums for hashed ones).
    std::vector<double> to_stored_gradient(const Tensor& virtual_grad) const;

private:
    DenseLayerParams effective_;
    std::optional<HashedParams> hashed_;
    std::shared_ptr<const HashMapping> mapping_;
};

struct ForwardTrace {
    std::size_t batch = 0;
    bool batched = false;
    Shape input_shape;                   // as passed by the caller
    std::vector<Tensor> inputs;          // input of every layer
    std::vector<Tensor> pre_activation;  // filled for layers with an activation
    std::vector<PoolResult> pools;       // filled for pooling layers
    Tensor logits;                       // [N, classes]
};

struct LayerGradient {
    std::vector<double> weights;  // stored space
    Tensor bias;
};

struct NetworkGradients {
    Tensor input;                       // shaped like the forward input
    std::vector<LayerGradient> layers;  // empty entries for pooling layers
};

class Network {
public:
    // Parameters are left unset; `initialized()` is false until they are
    // filled by `set_params` or `initialize`.
    explicit Network(ArchitectureSpec spec);

    // He-uniform weights from `seed`, zero biases. Hash seeds of hashed layers
    // are derived from `seed` as well.
    static Network initialize(ArchitectureSpec spec, std::uint64_t seed);

    const ArchitectureSpec& architecture() const noexcept { return spec_; }
    std::size_t layer_count() const noexcept { return spec_.layers.size(); }
    std::size_t classes() const noexcept { return classes_; }
    std::uint64_t seed() const noexcept { return seed_; }
    void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }
    bool initialized() const noexcept;

    const ParamLayer* params(std::size_t layer) const;
    ParamLayer* mutable_params(std::size_t layer);
    void set_params(std::size_t layer, ParamLayer params);

    // Accepts a single sample ([C,H,W] or flat) or a batch ([N,C,H,W] or
    // [N, C*H*W]). Returns logits [classes] or [N, classes].
    Tensor logits(const Tensor& input) const;
    Tensor probabilities(const Tensor& input) const;

    // argmax of the logits, lowest class index on ties.
    int predict(const Tensor& sample) const;
    std::vector<int> predict_batch(const Tensor& batch, std::size_t chunk = 128) const;

    ForwardTrace forward(const Tensor& input) const;

    // `dlogits` is the gradient w.r.t. the logits ([N, classes] or [classes]).
    NetworkGradients backward(const ForwardTrace& trace, const Tensor& dlogits, bool param_grads = true) const;

private:
    void require_initialized() const;
    Tensor as_batch(const Tensor& input, bool& batched) const;

    ArchitectureSpec spec_;
    std::vector<Shape> chain_;
    std::size_t classes_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::optional<ParamLayer>> params_;
};

int argmax(std::span<const double> values);

}  // namespace advhash

#include "advhash/network.hpp"

#include <cmath>

#include "advhash/error.hpp"
#include "advhash/rng.hpp"

namespace advhash {

ParamLayer ParamLayer::dense(Tensor weights, Tensor bias) {
    if (weights.rank() < 2 || bias.rank() != 1 || bias.dim(0) != weights.dim(0))
        throw DimensionError("parameter layer", "weights [out, ...] with bias [out]",
                             shape_string(weights.shape()) + " / " + shape_string(bias.shape()));
    ParamLayer p;
    p.effective_ = {std::move(weights), std::move(bias)};
    return p;
}

ParamLayer ParamLayer::hashed(HashedParams params, Tensor bias) {
    params.validate();
    if (bias.rank() != 1 || bias.dim(0) != params.rows())
        throw DimensionError("hashed layer bias", "[" + std::to_string(params.rows()) + "]", shape_string(bias.shape()));
    ParamLayer p;
    p.mapping_ = std::make_shared<const HashMapping>(HashMapping::build(params));
    p.effective_ = {Tensor(params.virtual_shape), std::move(bias)};
    p.hashed_ = std::move(params);
    p.sync();
    return p;
}

std::span<double> ParamLayer::stored_weights() noexcept {
    if (hashed_) return hashed_->real_weights;
    return effective_.weights.data();
}

std::span<const double> ParamLayer::stored_weights() const noexcept {
    if (hashed_) return hashed_->real_weights;
    return effective_.weights.data();
}

void ParamLayer::sync() {
    if (hashed_) mapping_->expand(*hashed_, effective_.weights.data());
}

std::vector<double> ParamLayer::to_stored_gradient(const Tensor& virtual_grad) const {
    if (!hashed_) return {virtual_grad.data().begin(), virtual_grad.data().end()};
    std::vector<double> g(hashed_->buckets(), 0.0);
    mapping_->scatter_add(virtual_grad.data(), g);
    return g;
}

int argmax(std::span<const double> values) {
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

Network::Network(ArchitectureSpec spec) : spec_(std::move(spec)) {
    chain_ = spec_.shape_chain();
    classes_ = chain_.back().at(0);
    params_.resize(spec_.layers.size());
}

Network Network::initialize(ArchitectureSpec spec, std::uint64_t seed) {
    Network net(std::move(spec));
    net.seed_ = seed;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& d = net.spec_.layers[l];
        if (!d.has_params()) continue;
        const Shape ws = net.spec_.weight_shape(l);
        const std::size_t fan_in = shape_size(ws) / ws[0];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        Rng rng(derive_seed(seed, "init/" + std::to_string(l)));
        Tensor bias({d.units});
        if (d.hashed()) {
            const auto layer_seed = derive_seed(seed, "hash-bucket/" + std::to_string(l));
            auto sign_seed = derive_seed(seed, "hash-sign/" + std::to_string(l));
            if (sign_seed == layer_seed) sign_seed = mix64(sign_seed);
            auto hp = make_hashed_params(ws, d.hash_rate, layer_seed, sign_seed);
            for (auto& w : hp.real_weights) w = rng.uniform(-limit, limit);
            net.params_[l] = ParamLayer::hashed(std::move(hp), std::move(bias));
        } else {
            Tensor w(ws);
            for (auto& v : w.data()) v = rng.uniform(-limit, limit);
            net.params_[l] = ParamLayer::dense(std::move(w), std::move(bias));
        }
    }
    return net;
}

bool Network::initialized() const noexcept {
    for (std::size_t l = 0; l < params_.size(); ++l)
        if (spec_.layers[l].has_params() && !params_[l]) return false;
    return true;
}

const ParamLayer* Network::params(std::size_t layer) const {
    if (layer >= params_.size()) throw ConfigError("layer index " + std::to_string(layer) + " out of range");
    return params_[layer] ? &*params_[layer] : nullptr;
}

ParamLayer* Network::mutable_params(std::size_t layer) {
    if (layer >= params_.size()) throw ConfigError("layer index " + std::to_string(layer) + " out of range");
    return params_[layer] ? &*params_[layer] : nullptr;
}

void Network::set_params(std::size_t layer, ParamLayer p) {
    if (layer >= params_.size()) throw ConfigError("layer index " + std::to_string(layer) + " out of range");
    const auto& d = spec_.layers[layer];
    if (!d.has_params()) throw ConfigError("layer " + std::to_string(layer) + " is a pooling layer");
    const Shape ws = spec_.weight_shape(layer);
    const std::string name = "layer " + std::to_string(layer);
    if (p.effective().weights.shape() != ws)
        throw DimensionError(name, shape_string(ws), shape_string(p.effective().weights.shape()));
    if (p.is_hashed() != d.hashed() || (p.is_hashed() && !(p.hashed_params()->rate == d.hash_rate)))
        throw ConfigError(name + ": storage does not match the architecture's hash setting " + d.hash_rate.str());
    params_[layer] = std::move(p);
}

void Network::require_initialized() const {
    if (!initialized()) throw StateError("network '" + spec_.name + "' has uninitialized parameters");
}

Tensor Network::as_batch(const Tensor& input, bool& batched) const {
    const std::size_t d = spec_.input_size();
    const Shape& in = spec_.input_shape;
    if (input.size() == d && (input.rank() == 1 || input.shape() == in)) {
        batched = false;
        return input.reshaped({1, in[0], in[1], in[2]});
    }
    if (input.rank() >= 2 && input.size() == input.dim(0) * d) {
        const bool flat = input.rank() == 2 && input.dim(1) == d;
        const bool full = input.rank() == 4 && Shape(input.shape().begin() + 1, input.shape().end()) == in;
        if (flat || full) {
            batched = true;
            return input.reshaped({input.dim(0), in[0], in[1], in[2]});
        }
    }
    throw DimensionError("network '" + spec_.name + "' input", shape_string(in) + " or [N, ...]",
                         shape_string(input.shape()));
}

ForwardTrace Network::forward(const Tensor& input) const {
    require_initialized();
    ForwardTrace t;
    Tensor x = as_batch(input, t.batched);
    t.batch = x.dim(0);
    t.input_shape = input.shape();
    const std::size_t L = layer_count();
    t.inputs.resize(L);
    t.pre_activation.resize(L);
    t.pools.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& d = spec_.layers[l];
        const std::string name = "layer " + std::to_string(l) + " (" + to_string(d.kind) + ")";
        Tensor z;
        switch (d.kind) {
            case LayerKind::conv:
                z = conv2d_forward(params_[l]->effective(), x, {d.stride, d.padding}, name);
                break;
            case LayerKind::pool:
                t.pools[l] = maxpool_forward(x, d.kernel, d.stride, name);
                z = t.pools[l].output;
                break;
            case LayerKind::fc:
                if (x.rank() != 2) x = std::move(x).reshaped({t.batch, x.size() / t.batch});
                z = dense_forward(params_[l]->effective(), x, name);
                break;
        }
        t.inputs[l] = std::move(x);
        if (d.activation == Activation::relu) {
            x = relu(z);
            t.pre_activation[l] = std::move(z);
        } else {
            x = std::move(z);
        }
    }
    t.logits = std::move(x);
    return t;
}

NetworkGradients Network::backward(const ForwardTrace& trace, const Tensor& dlogits, bool param_grads) const {
    require_initialized();
    const std::size_t L = layer_count();
    if (trace.inputs.size() != L || trace.logits.empty())
        throw StateError("network backward called without a matching forward trace");
    if (dlogits.size() != trace.logits.size())
        throw StateError("network backward: gradient " + shape_string(dlogits.shape()) +
                         " does not match cached logits " + shape_string(trace.logits.shape()));

    NetworkGradients out;
    out.layers.resize(L);
    Tensor g = dlogits;
    for (std::size_t l = L; l-- > 0;) {
        const auto& d = spec_.layers[l];
        const std::string name = "layer " + std::to_string(l) + " (" + to_string(d.kind) + ")";
        Shape out_shape{trace.batch};
        out_shape.insert(out_shape.end(), chain_[l].begin(), chain_[l].end());
        if (g.shape() != out_shape) g = std::move(g).reshaped(out_shape);
        if (d.activation == Activation::relu) g = relu_backward(trace.pre_activation[l], g);
        switch (d.kind) {
            case LayerKind::conv: {
                auto lg = conv2d_backward(params_[l]->effective(), trace.inputs[l], {d.stride, d.padding}, g,
                                          param_grads, name);
                if (param_grads) out.layers[l] = {params_[l]->to_stored_gradient(lg.weights), std::move(lg.bias)};
                g = std::move(lg.input);
                break;
            }
            case LayerKind::pool:
                g = maxpool_backward(trace.pools[l], g);
                break;
            case LayerKind::fc: {
                auto lg = dense_backward(params_[l]->effective(), trace.inputs[l], g, param_grads, name);
                if (param_grads) out.layers[l] = {params_[l]->to_stored_gradient(lg.weights), std::move(lg.bias)};
                g = std::move(lg.input);
                break;
            }
        }
    }
    out.input = std::move(g).reshaped(trace.input_shape);
    return out;
}

Tensor Network::logits(const Tensor& input) const {
    auto t = forward(input);
    if (t.batched) return std::move(t.logits);
    return std::move(t.logits).reshaped({classes_});
}

Tensor Network::probabilities(const Tensor& input) const {
    return softmax(logits(input));
}

int Network::predict(const Tensor& sample) const {
    const Tensor z = logits(sample);
    return argmax(z.data().subspan(0, classes_));
}

std::vector<int> Network::predict_batch(const Tensor& batch, std::size_t chunk) const {
    const std::size_t d = spec_.input_size();
    if (batch.size() % d != 0) throw DimensionError("predict_batch", "multiple of " + std::to_string(d), shape_string(batch.shape()));
    const std::size_t n = batch.size() / d;
    std::vector<int> preds;
    preds.reserve(n);
    for (std::size_t s = 0; s < n; s += chunk) {
        const std::size_t m = std::min(chunk, n - s);
        Tensor part({m, d}, std::vector<double>(batch.raw() + s * d, batch.raw() + (s + m) * d));
        const Tensor z = logits(part);
        for (std::size_t i = 0; i < m; ++i) preds.push_back(argmax(z.data().subspan(i * classes_, classes_)));
    }
    return preds;
}

}  // namespace advhash

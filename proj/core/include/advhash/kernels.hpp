#pragma once

// Forward/backward kernels for the layer types the toolkit supports.
//
// Every kernel accepts either a single sample or a batch with a leading
// sample axis: dense layers take [in] or [N, in], convolution and pooling take
// [C, H, W] or [N, C, H, W]. Parameter gradients of a batched backward call
// are summed over the batch.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "advhash/tensor.hpp"

namespace advhash {

// Weights are [out, in] for fully connected layers and
// [out_channels, in_channels, kH, kW] for convolutions. Bias is [out].
struct DenseLayerParams {
    Tensor weights;
    Tensor bias;
};

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

struct LayerGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

struct PoolResult {
    Tensor output;
    // Flat index into the forward input of each output cell's maximum.
    std::vector<std::size_t> argmax;
    Shape input_shape;
};

// output[j] = bias[j] + sum_i weights[j, i] * input[i], accumulated in
// ascending i starting from the bias.
Tensor dense_forward(const DenseLayerParams& params, const Tensor& input, const std::string& layer = "dense");

// `input` is the cached forward input of the layer.
LayerGrads dense_backward(const DenseLayerParams& params, const Tensor& input, const Tensor& upstream,
                          bool param_grads = true, const std::string& layer = "dense");

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t padding);

// Cross-correlation; each output starts from the bias and accumulates over
// (in_channel, ky, kx) in row-major order.
Tensor conv2d_forward(const DenseLayerParams& params, const Tensor& input, ConvGeometry geometry,
                      const std::string& layer = "conv2d");

LayerGrads conv2d_backward(const DenseLayerParams& params, const Tensor& input, ConvGeometry geometry,
                           const Tensor& upstream, bool param_grads = true, const std::string& layer = "conv2d");

// Ties resolve to the lowest flat index within the window.
PoolResult maxpool_forward(const Tensor& input, std::size_t window, std::size_t stride,
                           const std::string& layer = "maxpool");

Tensor maxpool_backward(const PoolResult& forward, const Tensor& upstream);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& forward_input, const Tensor& upstream);

// Row-wise softmax over the last axis with max subtraction.
Tensor softmax(const Tensor& logits);

// Gradient w.r.t. logits of a downstream quantity whose gradient w.r.t. the
// softmax output is `upstream`: dz_j = p_j * (g_j - sum_k g_k p_k).
Tensor softmax_backward(const Tensor& probs, const Tensor& upstream);

// Fused softmax + cross-entropy: returns probs - onehot(labels).
Tensor softmax_xent_backward(const Tensor& probs, std::span<const int> labels);

}  // namespace advhash

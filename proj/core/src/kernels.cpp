#include "advhash/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "advhash/error.hpp"
#include "advhash/gemm.hpp"

namespace advhash {

using detail::gemm_accumulate;
using detail::row_major;
using detail::transposed;

namespace {

struct BatchView {
    std::size_t batch;
    std::size_t features;
    bool batched;
};

BatchView dense_batch(const DenseLayerParams& params, const Tensor& input, const std::string& layer) {
    if (params.weights.rank() != 2) throw DimensionError(layer, "rank-2 weights", shape_string(params.weights.shape()));
    const std::size_t in = params.weights.dim(1);
    const std::size_t out = params.weights.dim(0);
    if (params.bias.size() != out)
        throw DimensionError(layer + " bias", "[" + std::to_string(out) + "]", shape_string(params.bias.shape()));
    if (input.rank() == 1 && input.dim(0) == in) return {1, in, false};
    if (input.rank() == 2 && input.dim(1) == in) return {input.dim(0), in, true};
    throw DimensionError(layer, "[" + std::to_string(in) + "] or [N, " + std::to_string(in) + "]",
                         shape_string(input.shape()));
}

struct ConvDims {
    std::size_t batch, channels, height, width;
    std::size_t out_channels, kh, kw, out_h, out_w;
    bool batched;

    std::size_t patch() const { return channels * kh * kw; }
    std::size_t positions() const { return out_h * out_w; }
};

ConvDims conv_dims(const DenseLayerParams& params, const Tensor& input, ConvGeometry g, const std::string& layer) {
    if (params.weights.rank() != 4)
        throw DimensionError(layer, "weights [out, in, kH, kW]", shape_string(params.weights.shape()));
    if (g.stride == 0) throw ConfigError(layer + ": stride must be positive");
    ConvDims d{};
    if (input.rank() == 3) {
        d = {1, input.dim(0), input.dim(1), input.dim(2), 0, 0, 0, 0, 0, false};
    } else if (input.rank() == 4) {
        d = {input.dim(0), input.dim(1), input.dim(2), input.dim(3), 0, 0, 0, 0, 0, true};
    } else {
        throw DimensionError(layer, "[C, H, W] or [N, C, H, W]", shape_string(input.shape()));
    }
    d.out_channels = params.weights.dim(0);
    d.kh = params.weights.dim(2);
    d.kw = params.weights.dim(3);
    if (params.weights.dim(1) != d.channels)
        throw DimensionError(layer, std::to_string(params.weights.dim(1)) + " input channels",
                             shape_string(input.shape()));
    if (params.bias.size() != d.out_channels)
        throw DimensionError(layer + " bias", "[" + std::to_string(d.out_channels) + "]",
                             shape_string(params.bias.shape()));
    if (d.kh > d.height + 2 * g.padding || d.kw > d.width + 2 * g.padding)
        throw DimensionError(layer, "padded input at least as large as the kernel " +
                                        shape_string(params.weights.shape()),
                             shape_string(input.shape()) + " with padding " + std::to_string(g.padding));
    d.out_h = conv_output_extent(d.height, d.kh, g.stride, g.padding);
    d.out_w = conv_output_extent(d.width, d.kw, g.stride, g.padding);
    return d;
}

// col[(c*kh + ky)*kw + kx][oy*out_w + ox] = padded input value.
void im2col(const double* img, const ConvDims& d, ConvGeometry g, double* col) {
    const std::size_t P = d.positions();
    for (std::size_t c = 0; c < d.channels; ++c)
        for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                double* row = col + ((c * d.kh + ky) * d.kw + kx) * P;
                for (std::size_t oy = 0; oy < d.out_h; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
                    for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                        const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
                        const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(d.height) &&
                                            x < static_cast<std::ptrdiff_t>(d.width);
                        row[oy * d.out_w + ox] =
                            inside ? img[(c * d.height + static_cast<std::size_t>(y)) * d.width + static_cast<std::size_t>(x)]
                                   : 0.0;
                    }
                }
            }
}

void col2im_add(const double* col, const ConvDims& d, ConvGeometry g, double* img) {
    const std::size_t P = d.positions();
    for (std::size_t c = 0; c < d.channels; ++c)
        for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                const double* row = col + ((c * d.kh + ky) * d.kw + kx) * P;
                for (std::size_t oy = 0; oy < d.out_h; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(d.height)) continue;
                    for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                        const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
                        if (x < 0 || x >= static_cast<std::ptrdiff_t>(d.width)) continue;
                        img[(c * d.height + static_cast<std::size_t>(y)) * d.width + static_cast<std::size_t>(x)] +=
                            row[oy * d.out_w + ox];
                    }
                }
            }
}

Shape with_batch(const ConvDims& d, std::size_t c, std::size_t h, std::size_t w) {
    if (d.batched) return {d.batch, c, h, w};
    return {c, h, w};
}

}  // namespace

Tensor dense_forward(const DenseLayerParams& params, const Tensor& input, const std::string& layer) {
    const auto bv = dense_batch(params, input, layer);
    const std::size_t out = params.weights.dim(0);
    Shape shape = bv.batched ? Shape{bv.batch, out} : Shape{out};
    Tensor result(shape);
    for (std::size_t b = 0; b < bv.batch; ++b)
        std::copy(params.bias.raw(), params.bias.raw() + out, result.raw() + b * out);
    gemm_accumulate(bv.batch, out, bv.features, row_major(input.raw(), bv.features),
                    transposed(params.weights.raw(), bv.features), result.raw(), out);
    return result;
}

LayerGrads dense_backward(const DenseLayerParams& params, const Tensor& input, const Tensor& upstream,
                          bool param_grads, const std::string& layer) {
    if (input.empty()) throw StateError(layer + ": backward called without a cached forward input");
    const auto bv = dense_batch(params, input, layer);
    const std::size_t out = params.weights.dim(0);
    const Shape expected = bv.batched ? Shape{bv.batch, out} : Shape{out};
    if (upstream.shape() != expected)
        throw StateError(layer + ": upstream gradient " + shape_string(upstream.shape()) +
                         " does not match the cached forward output " + shape_string(expected));

    LayerGrads g;
    g.input = Tensor(input.shape());
    gemm_accumulate(bv.batch, bv.features, out, row_major(upstream.raw(), out),
                    row_major(params.weights.raw(), bv.features), g.input.raw(), bv.features);
    if (param_grads) {
        g.weights = Tensor(params.weights.shape());
        gemm_accumulate(out, bv.features, bv.batch, transposed(upstream.raw(), out),
                        row_major(input.raw(), bv.features), g.weights.raw(), bv.features);
        g.bias = Tensor(params.bias.shape());
        for (std::size_t b = 0; b < bv.batch; ++b)
            for (std::size_t j = 0; j < out; ++j) g.bias[j] += upstream[b * out + j];
    }
    return g;
}

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (stride == 0) throw ConfigError("convolution stride must be positive");
    if (kernel > extent + 2 * padding)
        throw DimensionError("conv2d", "kernel <= padded extent " + std::to_string(extent + 2 * padding),
                             "kernel " + std::to_string(kernel));
    return (extent + 2 * padding - kernel) / stride + 1;
}

Tensor conv2d_forward(const DenseLayerParams& params, const Tensor& input, ConvGeometry geometry,
                      const std::string& layer) {
    const auto d = conv_dims(params, input, geometry, layer);
    const std::size_t K = d.patch();
    const std::size_t P = d.positions();
    const std::size_t in_size = d.channels * d.height * d.width;
    Tensor result(with_batch(d, d.out_channels, d.out_h, d.out_w));
    std::vector<double> col(K * P);
    for (std::size_t n = 0; n < d.batch; ++n) {
        im2col(input.raw() + n * in_size, d, geometry, col.data());
        double* out = result.raw() + n * d.out_channels * P;
        for (std::size_t oc = 0; oc < d.out_channels; ++oc) std::fill(out + oc * P, out + (oc + 1) * P, params.bias[oc]);
        gemm_accumulate(d.out_channels, P, K, row_major(params.weights.raw(), K), row_major(col.data(), P), out, P);
    }
    return result;
}

LayerGrads conv2d_backward(const DenseLayerParams& params, const Tensor& input, ConvGeometry geometry,
                           const Tensor& upstream, bool param_grads, const std::string& layer) {
    if (input.empty()) throw StateError(layer + ": backward called without a cached forward input");
    const auto d = conv_dims(params, input, geometry, layer);
    const Shape expected = with_batch(d, d.out_channels, d.out_h, d.out_w);
    if (upstream.shape() != expected)
        throw StateError(layer + ": upstream gradient " + shape_string(upstream.shape()) +
                         " does not match the cached forward output " + shape_string(expected));
    const std::size_t K = d.patch();
    const std::size_t P = d.positions();
    const std::size_t in_size = d.channels * d.height * d.width;

    LayerGrads g;
    g.input = Tensor(input.shape());
    if (param_grads) {
        g.weights = Tensor(params.weights.shape());
        g.bias = Tensor(params.bias.shape());
    }
    std::vector<double> col(K * P);
    std::vector<double> dcol(K * P);
    for (std::size_t n = 0; n < d.batch; ++n) {
        const double* delta = upstream.raw() + n * d.out_channels * P;
        if (param_grads) {
            im2col(input.raw() + n * in_size, d, geometry, col.data());
            gemm_accumulate(d.out_channels, K, P, row_major(delta, P), transposed(col.data(), P), g.weights.raw(), K);
            for (std::size_t oc = 0; oc < d.out_channels; ++oc)
                for (std::size_t p = 0; p < P; ++p) g.bias[oc] += delta[oc * P + p];
        }
        std::fill(dcol.begin(), dcol.end(), 0.0);
        gemm_accumulate(K, P, d.out_channels, transposed(params.weights.raw(), K), row_major(delta, P), dcol.data(), P);
        col2im_add(dcol.data(), d, geometry, g.input.raw() + n * in_size);
    }
    return g;
}

PoolResult maxpool_forward(const Tensor& input, std::size_t window, std::size_t stride, const std::string& layer) {
    if (window == 0 || stride == 0) throw ConfigError(layer + ": window and stride must be positive");
    std::size_t batch = 1;
    std::size_t c, h, w;
    if (input.rank() == 3) {
        c = input.dim(0), h = input.dim(1), w = input.dim(2);
    } else if (input.rank() == 4) {
        batch = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    } else {
        throw DimensionError(layer, "[C, H, W] or [N, C, H, W]", shape_string(input.shape()));
    }
    if (window > h || window > w)
        throw DimensionError(layer, "spatial extent >= window " + std::to_string(window), shape_string(input.shape()));
    const std::size_t oh = (h - window) / stride + 1;
    const std::size_t ow = (w - window) / stride + 1;

    PoolResult r;
    r.input_shape = input.shape();
    r.output = Tensor(input.rank() == 4 ? Shape{batch, c, oh, ow} : Shape{c, oh, ow});
    r.argmax.resize(r.output.size());
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < batch * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
                std::size_t best = base + (oy * stride) * w + ox * stride;
                double best_v = input[best];
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        const std::size_t idx = base + (oy * stride + ky) * w + ox * stride + kx;
                        if (input[idx] > best_v) {
                            best_v = input[idx];
                            best = idx;
                        }
                    }
                r.output[o] = best_v;
                r.argmax[o] = best;
            }
    }
    return r;
}

Tensor maxpool_backward(const PoolResult& forward, const Tensor& upstream) {
    if (forward.argmax.empty()) throw StateError("maxpool: backward called without a cached forward pass");
    if (upstream.shape() != forward.output.shape())
        throw StateError("maxpool: upstream gradient " + shape_string(upstream.shape()) +
                         " does not match the cached forward output " + shape_string(forward.output.shape()));
    Tensor g(forward.input_shape);
    for (std::size_t o = 0; o < upstream.size(); ++o) g[forward.argmax[o]] += upstream[o];
    return g;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& forward_input, const Tensor& upstream) {
    if (forward_input.empty()) throw StateError("relu: backward called without a cached forward input");
    if (forward_input.shape() != upstream.shape())
        throw StateError("relu: upstream gradient " + shape_string(upstream.shape()) +
                         " does not match the cached forward input " + shape_string(forward_input.shape()));
    Tensor g(upstream.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = forward_input[i] > 0.0 ? upstream[i] : 0.0;
    return g;
}

Tensor softmax(const Tensor& logits) {
    if (logits.empty()) throw DimensionError("softmax", "non-empty scores", "empty tensor");
    const std::size_t n = logits.shape().back();
    const std::size_t rows = logits.size() / n;
    Tensor p(logits.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* z = logits.raw() + r * n;
        double* out = p.raw() + r * n;
        const double m = *std::max_element(z, z + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = std::exp(z[j] - m);
            sum += out[j];
        }
        for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
    }
    return p;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& upstream) {
    if (probs.shape() != upstream.shape())
        throw StateError("softmax: upstream gradient " + shape_string(upstream.shape()) +
                         " does not match the cached output " + shape_string(probs.shape()));
    const std::size_t n = probs.shape().back();
    const std::size_t rows = probs.size() / n;
    Tensor g(probs.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* p = probs.raw() + r * n;
        const double* u = upstream.raw() + r * n;
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += u[k] * p[k];
        for (std::size_t j = 0; j < n; ++j) g[r * n + j] = p[j] * (u[j] - dot);
    }
    return g;
}

Tensor softmax_xent_backward(const Tensor& probs, std::span<const int> labels) {
    const std::size_t n = probs.shape().back();
    const std::size_t rows = probs.size() / n;
    if (labels.size() != rows)
        throw StateError("softmax_xent: " + std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                         " cached outputs");
    Tensor g = probs;
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= n)
            throw ConfigError("softmax_xent: label " + std::to_string(labels[r]) + " outside [0, " +
                              std::to_string(n) + ")");
        g[r * n + static_cast<std::size_t>(labels[r])] -= 1.0;
    }
    return g;
}

}  // namespace advhash

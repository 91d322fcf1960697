#pragma once

#include <string>
#include <vector>

#include "advhash/advhash.hpp"

namespace advhash::testing {

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

// Direct nested-loop cross-correlation, summing over (ic, ky, kx) in that
// order starting from the bias: the reference for conv2d_forward.
inline Tensor naive_conv(const Tensor& w, const Tensor& b, const Tensor& x, std::size_t stride, std::size_t pad) {
    const std::size_t oc = w.dim(0), ic = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    const std::size_t h = x.dim(1), wd = x.dim(2);
    const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
    Tensor y({oc, oh, ow});
    for (std::size_t o = 0; o < oc; ++o)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = b[o];
                for (std::size_t c = 0; c < ic; ++c)
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const long yy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                            const long xx = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                            double v = 0.0;
                            if (yy >= 0 && xx >= 0 && yy < static_cast<long>(h) && xx < static_cast<long>(wd))
                                v = x[(c * h + static_cast<std::size_t>(yy)) * wd + static_cast<std::size_t>(xx)];
                            acc += w[((o * ic + c) * kh + ky) * kw + kx] * v;
                        }
                y[(o * oh + oy) * ow + ox] = acc;
            }
    return y;
}

// Network over flat inputs of `inputs` features with the given fc widths
// (hidden layers use ReLU, the last one none).
inline ArchitectureSpec mlp_spec(std::size_t inputs, const std::vector<std::size_t>& widths,
                                 const std::string& hash = "1") {
    std::string text = "name mlp\ninput 1 1 " + std::to_string(inputs) + "\n";
    for (std::size_t i = 0; i < widths.size(); ++i)
        text += "fc " + std::to_string(widths[i]) + (i + 1 < widths.size() ? " act=relu" : " act=none") +
                " hash=" + hash + "\n";
    return parse_architecture(text);
}

// Network whose only layer is fc with the given weights [classes, inputs] and bias.
inline Network linear_softmax(const Tensor& w, const Tensor& b) {
    Network net(mlp_spec(w.dim(1), {w.dim(0)}));
    net.set_params(0, ParamLayer::dense(w, b));
    return net;
}

// Small conv -> pool -> fc -> fc model used by the gradient property tests.
inline ArchitectureSpec tiny_cnn_spec(const std::string& hash = "1") {
    return parse_architecture(
        "name tiny\n"
        "input 2 7 7\n"
        "conv 3 kernel=3 stride=1 pad=1 act=relu\n"
        "pool 2 stride=2\n"
        "conv 4 kernel=2 stride=1 act=relu\n"
        "fc 5 act=relu hash=" + hash + "\n"
        "fc 3\n");
}

// `n` uniform random images with uniform random labels.
inline Dataset random_images(std::size_t n, const Shape& sample, std::size_t classes, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.classes = classes;
    Shape s{n};
    s.insert(s.end(), sample.begin(), sample.end());
    d.images = random_tensor(rng, s, 0, 1);
    for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(rng.below(classes)));
    return d;
}

// Mean cross-entropy of a (possibly batched) input at `labels`.
inline double mean_loss(const Network& net, const Tensor& x, const std::vector<int>& labels) {
    const auto t = net.forward(x);
    const Tensor p = softmax(t.logits);
    const std::size_t c = net.classes();
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Tensor row({c}, std::vector<double>(p.raw() + i * c, p.raw() + (i + 1) * c));
        s += cross_entropy_loss(row, labels[i]);
    }
    return s / static_cast<double>(labels.size());
}

}  // namespace advhash::testing

#include "advhash/training.hpp"

#include <algorithm>
#include <cmath>

#include "advhash/error.hpp"
#include "advhash/rng.hpp"

namespace advhash {

void TrainConfig::validate(std::size_t train_size) const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be a finite non-negative number");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (epochs == 0) throw ConfigError("epoch count must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr decay must lie in (0, 1]");
    if (train_size == 0) throw ConfigError("training set is empty");
    if (batch_size > train_size)
        throw ConfigError("batch size " + std::to_string(batch_size) + " exceeds training-set size " +
                          std::to_string(train_size));
}

double cross_entropy_loss(const Tensor& probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw ConfigError("cross_entropy_loss: label " + std::to_string(label) + " outside [0, " +
                          std::to_string(probs.size()) + ")");
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

double cross_entropy_loss(const Tensor& probs, const Tensor& target) {
    if (target.size() != probs.size())
        throw DimensionError("cross_entropy_loss", shape_string(probs.shape()), shape_string(target.shape()));
    int hot = -1;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == 1.0 && hot < 0) {
            hot = static_cast<int>(i);
        } else if (target[i] != 0.0) {
            throw ConfigError("cross_entropy_loss: target is not one-hot");
        }
    }
    if (hot < 0) throw ConfigError("cross_entropy_loss: target is not one-hot");
    return cross_entropy_loss(probs, hot);
}

TrainResult train(Network network, const Dataset& train_set, const TrainConfig& config, const Dataset* test_set,
                  const EpochCallback& on_epoch) {
    config.validate(train_set.size());
    if (!network.initialized()) throw StateError("train: network parameters are not initialized");
    if (network.classes() != train_set.classes)
        throw ConfigError("train: network has " + std::to_string(network.classes()) + " outputs but the dataset has " +
                          std::to_string(train_set.classes) + " classes");

    TrainResult result{std::move(network), {}};
    Network& net = result.network;
    const std::size_t n = train_set.size();
    const std::size_t classes = net.classes();
    double lr = config.learning_rate;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.rng_seed, epoch));
        const auto order = rng.permutation(n);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
            const std::size_t m = std::min(config.batch_size, n - start);
            const std::span<const std::size_t> idx(order.data() + start, m);
            const Tensor x = train_set.batch(idx);
            const auto trace = net.forward(x);
            const Tensor probs = softmax(trace.logits);

            std::vector<int> labels(m);
            double batch_loss = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                labels[i] = train_set.labels[idx[i]];
                batch_loss += -std::log(std::max(probs[i * classes + static_cast<std::size_t>(labels[i])], 1e-300));
            }
            if (!std::isfinite(batch_loss) || !trace.logits.all_finite())
                throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(batch_index));
            loss_sum += batch_loss;

            Tensor dlogits = softmax_xent_backward(probs, labels);
            const double scale = 1.0 / static_cast<double>(m);
            for (auto& v : dlogits.data()) v *= scale;
            const auto grads = net.backward(trace, dlogits, true);

            for (std::size_t l = 0; l < net.layer_count(); ++l) {
                ParamLayer* p = net.mutable_params(l);
                if (!p) continue;
                auto w = p->stored_weights();
                const auto& gw = grads.layers[l].weights;
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
                auto b = p->bias().data();
                const auto& gb = grads.layers[l].bias;
                for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
                p->sync();
            }
        }

        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.learning_rate = lr;
        stats.train_loss = loss_sum / static_cast<double>(n);
        if (test_set) stats.test_accuracy = evaluate(net, *test_set).accuracy;
        result.curve.push_back(stats);
        if (on_epoch) on_epoch(stats);
        lr *= config.lr_decay;
    }
    return result;
}

EvalResult evaluate(const Network& network, const Dataset& data) {
    EvalResult r;
    r.total = data.size();
    r.confusion.assign(data.classes, std::vector<std::size_t>(network.classes(), 0));
    if (data.size() == 0) return r;
    const auto preds = network.predict_batch(data.images);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto t = static_cast<std::size_t>(data.labels[i]);
        const auto p = static_cast<std::size_t>(preds[i]);
        if (t < r.confusion.size() && p < r.confusion[t].size()) ++r.confusion[t][p];
        if (t == p) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return r;
}

}  // namespace advhash

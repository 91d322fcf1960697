#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "advhash/dataset.hpp"
#include "advhash/network.hpp"

namespace advhash {

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t batch_size = 64;
    std::size_t epochs = 3;
    std::uint64_t rng_seed = 1;
    double lr_decay = 1.0;  // multiplicative, applied after every epoch

    // learning_rate may be 0 (a no-op run); everything else must be positive
    // and batch_size may not exceed the training-set size.
    void validate(std::size_t train_size) const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;  // mean over the epoch's samples
    std::optional<double> test_accuracy;
};

struct TrainResult {
    Network network;
    std::vector<EpochStats> curve;
};

struct EvalResult {
    double accuracy = 0.0;
    std::size_t total = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

// -log(max(p[label], 1e-300)).
double cross_entropy_loss(const Tensor& probs, int label);

// `target` must be one-hot (exactly one 1, all other entries 0).
double cross_entropy_loss(const Tensor& probs, const Tensor& target);

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch SGD on the mean softmax cross-entropy. Each epoch visits the
// training set in a permutation drawn from (rng_seed, epoch). Throws
// NumericError naming the epoch and batch if the loss stops being finite.
TrainResult train(Network network, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* test_set = nullptr, const EpochCallback& on_epoch = {});

EvalResult evaluate(const Network& network, const Dataset& data);

}  // namespace advhash

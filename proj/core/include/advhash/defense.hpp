#pragma once

#include <string>
#include <vector>

#include "advhash/attack.hpp"
#include "advhash/dataset.hpp"
#include "advhash/network.hpp"

namespace advhash {

struct DefenseConfig {
    double tau = 0.0;
    // Layer indices; empty selects the last fully connected layer.
    std::vector<std::size_t> target_layers;

    std::vector<std::size_t> resolve(const Network& network) const;
};

// w <- w + tau * sign(w) on every stored weight of the target layers, with
// sign(0) = 0. Hashed layers shift each bucket value once. Biases and all
// other layers are left untouched.
Network apply_gradient_inhibition(Network network, const DefenseConfig& config);

struct DefenseRow {
    double tau = 0.0;
    double clean_accuracy = 0.0;
    double success_rate = 0.0;
    double filtered_success_rate = 0.0;
    std::string method;
    std::string model_id;
};

// One row per tau: a defended copy of `network` evaluated for clean accuracy
// on `data` and attacked with `campaign`.
std::vector<DefenseRow> defense_sweep(const Network& network, const Dataset& data, const std::vector<double>& taus,
                                      const std::vector<std::size_t>& target_layers, const CampaignConfig& campaign,
                                      const std::string& model_id = "model");

// Columns: tau,clean_accuracy,success_rate,method,model_id,filtered_success_rate
std::string defense_sweep_csv(const std::vector<DefenseRow>& rows);

}  // namespace advhash

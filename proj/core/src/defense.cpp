#include "advhash/defense.hpp"

#include <cmath>

#include "advhash/error.hpp"
#include "advhash/io.hpp"
#include "advhash/training.hpp"

namespace advhash {

std::vector<std::size_t> DefenseConfig::resolve(const Network& network) const {
    if (target_layers.empty()) return {network.architecture().last_fc_index()};
    for (auto l : target_layers) {
        if (l >= network.layer_count())
            throw ConfigError("defense target layer " + std::to_string(l) + " out of range (network has " +
                              std::to_string(network.layer_count()) + " layers)");
        if (!network.architecture().layers[l].has_params())
            throw ConfigError("defense target layer " + std::to_string(l) + " is a pooling layer");
    }
    return target_layers;
}

Network apply_gradient_inhibition(Network network, const DefenseConfig& config) {
    if (!(config.tau >= 0.0) || !std::isfinite(config.tau)) throw ConfigError("tau must be finite and >= 0");
    if (!network.initialized()) throw StateError("defense: network parameters are not initialized");
    for (auto l : config.resolve(network)) {
        ParamLayer* p = network.mutable_params(l);
        for (double& w : p->stored_weights()) {
            if (w > 0.0) {
                w += config.tau;
            } else if (w < 0.0) {
                w -= config.tau;
            }
        }
        p->sync();
    }
    return network;
}

std::vector<DefenseRow> defense_sweep(const Network& network, const Dataset& data, const std::vector<double>& taus,
                                      const std::vector<std::size_t>& target_layers, const CampaignConfig& campaign,
                                      const std::string& model_id) {
    if (taus.empty()) throw ConfigError("defense sweep: no tau values");
    std::vector<DefenseRow> rows;
    for (double tau : taus) {
        const Network defended = apply_gradient_inhibition(network, {tau, target_layers});
        const auto report = run_campaign(defended, data, campaign, model_id);
        DefenseRow r;
        r.tau = tau;
        r.clean_accuracy = evaluate(defended, data).accuracy;
        r.success_rate = report.success_rate;
        r.filtered_success_rate = report.filtered_success_rate;
        r.method = report.tag();
        r.model_id = model_id;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string defense_sweep_csv(const std::vector<DefenseRow>& rows) {
    std::string out =
        csv_row({"tau", "clean_accuracy", "success_rate", "method", "model_id", "filtered_success_rate"});
    for (const auto& r : rows)
        out += csv_row({format_double(r.tau), format_double(r.clean_accuracy), format_double(r.success_rate), r.method,
                        r.model_id, format_double(r.filtered_success_rate)});
    return out;
}

}  // namespace advhash

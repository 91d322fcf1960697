#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advhash/dataset.hpp"
#include "advhash/network.hpp"

namespace advhash {

enum class AttackMethod { fgsm, jsma };

std::string to_string(AttackMethod method);
AttackMethod parse_attack_method(const std::string& text);

// "fgsm"/"jsma" on a dense network, "hfgsm"/"hjsma" when any layer is hashed.
std::string method_tag(AttackMethod method, bool hashed);

struct AdversarialRecord {
    std::size_t sample_index = 0;  // index into the attacked dataset
    Tensor original;
    Tensor adversarial;
    int true_label = 0;
    int clean_pred = 0;
    int adv_pred = 0;
    AttackMethod method = AttackMethod::fgsm;
    double final_epsilon = 0.0;      // fgsm family
    std::size_t final_count = 0;     // jsma family: components modified
    bool success = false;            // adv_pred != clean_pred

    // final_epsilon or final_count, whichever the method uses.
    double final_value() const;
};

// Gradient of the cross-entropy loss at `label` w.r.t. the input, shaped like X.
// Hashed layers are differentiated through their virtual weights.
Tensor input_gradient_loss(const Network& network, const Tensor& x, int label);

// Batched form: row n of the result is the gradient for x[n] at labels[n].
// Each row is bit-identical to the single-sample call.
Tensor input_gradient_loss_batch(const Network& network, const Tensor& batch, std::span<const int> labels);

// [classes, D]: row o is the gradient of softmax output o w.r.t. the flat input.
Tensor input_jacobian(const Network& network, const Tensor& x);

// X* = clamp(X + eps * sign(grad), 0, 1) with sign(0) = 0. The loss is taken
// at `loss_label`, defaulting to the clean prediction.
AdversarialRecord fgsm_perturb(const Network& network, const Tensor& x, int true_label, double epsilon,
                               std::optional<int> loss_label = {});

struct SaliencyMap {
    std::vector<double> scores;
    int target = 0;
};

// S[i] = 0 if J[t,i] < 0 or sum_{o != t} J[o,i] > 0, else J[t,i] * |sum_{o != t} J[o,i]|.
// The other-class sum runs over ascending o.
SaliencyMap saliency_map(const Tensor& jacobian, int target);

// Increasing-feature JSMA: repeatedly sets the unmodified component with the
// largest saliency (ties to the lowest index) to 1.0 until the prediction
// leaves the clean class or `budget` components were changed. Components
// already at 1.0 cannot increase and are not candidates. `target` defaults to
// the runner-up class of the clean softmax.
AdversarialRecord jsma_perturb(const Network& network, const Tensor& x, int true_label, std::size_t budget,
                               std::optional<int> target = {});

// Second-highest probability class (lowest index on ties).
int runner_up_class(std::span<const double> probs);

struct CampaignConfig {
    AttackMethod method = AttackMethod::fgsm;
    double eps_start = 0.1;
    double eps_step = 0.1;
    double eps_max = 0.5;
    std::size_t i_start = 1;
    std::size_t i_step = 1;
    std::size_t i_max = 112;
    std::size_t samples = 1000;
    std::uint64_t rng_seed = 1;
    std::optional<int> target;  // jsma; samples whose clean class equals it use the runner-up

    void validate() const;
    std::vector<double> epsilon_grid() const;
    std::vector<std::size_t> budget_grid() const;
    // The grid of the configured method as doubles.
    std::vector<double> sweep_grid() const;
};

struct SweepPoint {
    double value = 0.0;             // epsilon or element budget
    std::size_t successes = 0;      // succeeded at some grid value <= this one
    double success_rate = 0.0;      // successes / samples
    double filtered_success_rate = 0.0;  // over samples whose clean prediction was correct
};

struct AttackCampaignReport {
    AttackMethod method = AttackMethod::fgsm;
    bool hashed = false;
    std::string model_id;
    CampaignConfig config;
    std::vector<AdversarialRecord> records;  // in sample-draw order
    std::vector<SweepPoint> curve;
    std::size_t successes = 0;
    std::size_t clean_correct = 0;
    double success_rate = 0.0;
    double filtered_success_rate = 0.0;

    std::string tag() const { return method_tag(method, hashed); }
};

// Recounts the cumulative success curve over `grid` from the records alone.
std::vector<SweepPoint> curve_from_records(std::span<const AdversarialRecord> records, std::span<const double> grid);

// Algorithm-style escalation: each sampled input is attacked at the first grid
// value, then at the next, until its prediction changes or the grid ends.
// Every attempt starts again from the clean input. For FGSM the gradient is
// computed once per input, since it does not depend on epsilon. For JSMA one
// greedy run with budget i_max is made; a budget b run is exactly its first b
// steps, so the smallest grid budget covering the run's change count is the
// escalation outcome.
AttackCampaignReport run_campaign(const Network& network, const Dataset& data, const CampaignConfig& config,
                                  const std::string& model_id = "model");

// Columns: sample_index,method,final_epsilon_or_count,clean_pred,adv_pred,success,true_label
std::string campaign_records_csv(const AttackCampaignReport& report);
std::string campaign_summary_json(const AttackCampaignReport& report);
// Plain-text curve table for terminals.
std::string campaign_curve_text(const AttackCampaignReport& report);

}  // namespace advhash

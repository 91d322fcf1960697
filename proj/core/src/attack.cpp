#include "advhash/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "advhash/error.hpp"
#include "advhash/io.hpp"
#include "advhash/rng.hpp"

namespace advhash {

std::string to_string(AttackMethod method) {
    return method == AttackMethod::fgsm ? "fgsm" : "jsma";
}

AttackMethod parse_attack_method(const std::string& text) {
    if (text == "fgsm" || text == "hfgsm") return AttackMethod::fgsm;
    if (text == "jsma" || text == "hjsma") return AttackMethod::jsma;
    throw ConfigError("unknown attack method '" + text + "' (expected fgsm or jsma)");
}

std::string method_tag(AttackMethod method, bool hashed) {
    return (hashed ? "h" : "") + to_string(method);
}

double AdversarialRecord::final_value() const {
    return method == AttackMethod::fgsm ? final_epsilon : static_cast<double>(final_count);
}

namespace {

bool any_hashed(const Network& net) {
    for (std::size_t l = 0; l < net.layer_count(); ++l)
        if (const auto* p = net.params(l); p && p->is_hashed()) return true;
    return false;
}

void require_label(const Network& net, int label, const char* what) {
    if (label < 0 || static_cast<std::size_t>(label) >= net.classes())
        throw ConfigError(std::string(what) + " " + std::to_string(label) + " outside [0, " +
                          std::to_string(net.classes()) + ")");
}

inline double sign_of(double g) { return static_cast<double>((g > 0.0) - (g < 0.0)); }

inline double clamp_unit(double v) { return std::min(1.0, std::max(0.0, v)); }

// clamp(x + eps * sign(g)) pulled back toward x by whole ulps when rounding
// of x + eps lands more than eps away, so |x* - x| <= eps holds exactly.
inline double fgsm_component(double x, double eps, double g) {
    double v = clamp_unit(x + eps * sign_of(g));
    while (std::fabs(v - x) > eps) v = std::nextafter(v, x);
    return v;
}

// Rounds sweep values to 12 decimals so that 0.1 + 2 * 0.1 reports as 0.3.
inline double tidy(double v) { return std::round(v * 1e12) / 1e12; }

}  // namespace

Tensor input_gradient_loss_batch(const Network& network, const Tensor& batch, std::span<const int> labels) {
    if (!network.initialized()) throw StateError("input gradient: network parameters are not initialized");
    for (int l : labels) require_label(network, l, "label");
    const auto trace = network.forward(batch);
    if (trace.batch != labels.size())
        throw DimensionError("input gradient", std::to_string(trace.batch) + " labels",
                             std::to_string(labels.size()) + " labels");
    const Tensor probs = softmax(trace.logits);
    const Tensor dlogits = softmax_xent_backward(probs, labels);
    return network.backward(trace, dlogits, false).input;
}

Tensor input_gradient_loss(const Network& network, const Tensor& x, int label) {
    const int labels[1] = {label};
    return input_gradient_loss_batch(network, x, labels);
}

Tensor input_jacobian(const Network& network, const Tensor& x) {
    if (!network.initialized()) throw StateError("input jacobian: network parameters are not initialized");
    const std::size_t c = network.classes();
    const std::size_t d = network.architecture().input_size();
    if (x.size() != d) throw DimensionError("input jacobian", "[" + std::to_string(d) + "]", shape_string(x.shape()));

    // One backward per class, run as a batch of identical inputs.
    std::vector<double> rep(c * d);
    for (std::size_t o = 0; o < c; ++o) std::copy_n(x.raw(), d, rep.data() + o * d);
    const auto trace = network.forward(Tensor({c, d}, std::move(rep)));
    const Tensor probs = softmax(trace.logits);
    Tensor eye({c, c});
    for (std::size_t o = 0; o < c; ++o) eye[o * c + o] = 1.0;
    const Tensor dlogits = softmax_backward(probs, eye);
    return network.backward(trace, dlogits, false).input.reshaped({c, d});
}

AdversarialRecord fgsm_perturb(const Network& network, const Tensor& x, int true_label, double epsilon,
                               std::optional<int> loss_label) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("fgsm: epsilon must be finite and >= 0");
    AdversarialRecord r;
    r.method = AttackMethod::fgsm;
    r.original = x;
    r.true_label = true_label;
    r.clean_pred = network.predict(x);
    const int label = loss_label.value_or(r.clean_pred);
    const Tensor g = input_gradient_loss(network, x, label);
    r.adversarial = x;
    for (std::size_t i = 0; i < x.size(); ++i) r.adversarial[i] = fgsm_component(x[i], epsilon, g[i]);
    r.adv_pred = network.predict(r.adversarial);
    r.final_epsilon = epsilon;
    r.success = r.adv_pred != r.clean_pred;
    return r;
}

SaliencyMap saliency_map(const Tensor& jacobian, int target) {
    if (jacobian.rank() != 2) throw DimensionError("saliency map", "[classes, D]", shape_string(jacobian.shape()));
    const std::size_t c = jacobian.dim(0);
    const std::size_t d = jacobian.dim(1);
    if (target < 0 || static_cast<std::size_t>(target) >= c)
        throw ConfigError("saliency map: target " + std::to_string(target) + " outside [0, " + std::to_string(c) + ")");
    const auto t = static_cast<std::size_t>(target);
    SaliencyMap s;
    s.target = target;
    s.scores.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double a = jacobian[t * d + i];
        double b = 0.0;
        for (std::size_t o = 0; o < c; ++o)
            if (o != t) b += jacobian[o * d + i];
        if (a < 0.0 || b > 0.0) continue;
        s.scores[i] = a * std::fabs(b);
    }
    return s;
}

int runner_up_class(std::span<const double> probs) {
    if (probs.size() < 2) throw ConfigError("runner-up class needs at least two classes");
    const int top = argmax(probs);
    int best = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (static_cast<int>(i) == top) continue;
        if (best < 0 || probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

AdversarialRecord jsma_perturb(const Network& network, const Tensor& x, int true_label, std::size_t budget,
                               std::optional<int> target) {
    if (budget == 0) throw ConfigError("jsma: element budget must be at least 1");
    AdversarialRecord r;
    r.method = AttackMethod::jsma;
    r.original = x;
    r.true_label = true_label;
    const Tensor probs = network.probabilities(x);
    r.clean_pred = argmax(probs.data());
    const int t = target.value_or(runner_up_class(probs.data()));
    require_label(network, t, "jsma target");
    if (t == r.clean_pred) throw ConfigError("jsma: target class equals the clean prediction");

    Tensor xa = x;
    std::vector<char> modified(x.size(), 0);
    int pred = r.clean_pred;
    std::size_t count = 0;
    while (count < budget) {
        const SaliencyMap s = saliency_map(input_jacobian(network, xa), t);
        std::size_t best = x.size();
        double best_score = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (modified[i] || xa[i] >= 1.0) continue;
            if (s.scores[i] > best_score) {
                best_score = s.scores[i];
                best = i;
            }
        }
        if (best == x.size()) break;  // nothing left with positive saliency
        xa[best] = 1.0;
        modified[best] = 1;
        ++count;
        pred = network.predict(xa);
        if (pred != r.clean_pred) break;
    }
    r.adversarial = std::move(xa);
    r.adv_pred = pred;
    r.final_count = count;
    r.success = pred != r.clean_pred;
    return r;
}

void CampaignConfig::validate() const {
    if (samples == 0) throw ConfigError("campaign: sample count must be positive");
    if (method == AttackMethod::fgsm) {
        if (!(eps_start >= 0.0) || !std::isfinite(eps_max)) throw ConfigError("campaign: epsilon bounds must be finite and >= 0");
        if (!(eps_step > 0.0)) throw ConfigError("campaign: epsilon step must be positive");
        if (eps_start > eps_max) throw ConfigError("campaign: eps_start exceeds eps_max");
    } else {
        if (i_start == 0) throw ConfigError("campaign: element budget must start at 1 or more");
        if (i_step == 0) throw ConfigError("campaign: element budget step must be positive");
        if (i_start > i_max) throw ConfigError("campaign: i_start exceeds i_max");
    }
}

std::vector<double> CampaignConfig::epsilon_grid() const {
    std::vector<double> g;
    for (std::size_t k = 0;; ++k) {
        const double v = tidy(eps_start + static_cast<double>(k) * eps_step);
        if (v > eps_max + 1e-9) break;
        g.push_back(v);
    }
    return g;
}

std::vector<std::size_t> CampaignConfig::budget_grid() const {
    std::vector<std::size_t> g;
    for (std::size_t v = i_start; v <= i_max; v += i_step) g.push_back(v);
    return g;
}

std::vector<double> CampaignConfig::sweep_grid() const {
    if (method == AttackMethod::fgsm) return epsilon_grid();
    std::vector<double> g;
    for (auto v : budget_grid()) g.push_back(static_cast<double>(v));
    return g;
}

std::vector<SweepPoint> curve_from_records(std::span<const AdversarialRecord> records, std::span<const double> grid) {
    std::size_t correct = 0;
    for (const auto& r : records) correct += r.clean_pred == r.true_label;
    std::vector<SweepPoint> curve;
    for (double v : grid) {
        SweepPoint p;
        p.value = v;
        std::size_t filtered = 0;
        for (const auto& r : records) {
            if (!r.success || r.final_value() > v) continue;
            ++p.successes;
            filtered += r.clean_pred == r.true_label;
        }
        p.success_rate = records.empty() ? 0.0 : static_cast<double>(p.successes) / static_cast<double>(records.size());
        p.filtered_success_rate = correct == 0 ? 0.0 : static_cast<double>(filtered) / static_cast<double>(correct);
        curve.push_back(p);
    }
    return curve;
}

AttackCampaignReport run_campaign(const Network& network, const Dataset& data, const CampaignConfig& config,
                                  const std::string& model_id) {
    config.validate();
    if (!network.initialized()) throw StateError("campaign: network parameters are not initialized");
    if (data.size() == 0) throw ConfigError("campaign: dataset is empty");
    if (config.samples > data.size())
        throw ConfigError("campaign: " + std::to_string(config.samples) + " samples requested from a dataset of " +
                          std::to_string(data.size()));

    AttackCampaignReport rep;
    rep.method = config.method;
    rep.hashed = any_hashed(network);
    rep.model_id = model_id;
    rep.config = config;

    Rng rng(derive_seed(config.rng_seed, "campaign/samples"));
    const auto picks = rng.sample_without_replacement(data.size(), config.samples);
    const Dataset chosen = data.subset(picks);
    const auto clean = network.predict_batch(chosen.images);
    const std::size_t d = chosen.sample_size();

    rep.records.resize(picks.size());
    if (config.method == AttackMethod::fgsm) {
        const auto grid = config.epsilon_grid();
        constexpr std::size_t kChunk = 64;
        for (std::size_t s = 0; s < picks.size(); s += kChunk) {
            const std::size_t m = std::min(kChunk, picks.size() - s);
            std::vector<std::size_t> rows(m);
            for (std::size_t i = 0; i < m; ++i) rows[i] = s + i;
            const Tensor xb = chosen.batch(rows);
            const Tensor g = input_gradient_loss_batch(network, xb, std::span<const int>(clean.data() + s, m));
            for (std::size_t i = 0; i < m; ++i) {
                const double* x = xb.raw() + i * d;
                const double* gi = g.raw() + i * d;
                std::vector<double> cand(grid.size() * d);
                for (std::size_t e = 0; e < grid.size(); ++e)
                    for (std::size_t k = 0; k < d; ++k) cand[e * d + k] = fgsm_component(x[k], grid[e], gi[k]);
                const auto preds = network.predict_batch(Tensor({grid.size(), d}, cand));
                std::size_t hit = grid.size() - 1;
                for (std::size_t e = 0; e < grid.size(); ++e)
                    if (preds[e] != clean[s + i]) {
                        hit = e;
                        break;
                    }
                auto& r = rep.records[s + i];
                r.method = AttackMethod::fgsm;
                r.sample_index = picks[s + i];
                r.original = chosen.sample(s + i);
                r.adversarial = Tensor(r.original.shape(), std::vector<double>(cand.begin() + hit * d, cand.begin() + (hit + 1) * d));
                r.true_label = chosen.labels[s + i];
                r.clean_pred = clean[s + i];
                r.adv_pred = preds[hit];
                r.final_epsilon = grid[hit];
                r.success = r.adv_pred != r.clean_pred;
            }
        }
    } else {
        const auto grid = config.budget_grid();
        for (std::size_t s = 0; s < picks.size(); ++s) {
            const Tensor x = chosen.sample(s);
            std::optional<int> target = config.target;
            if (target && *target == clean[s]) target.reset();
            auto r = jsma_perturb(network, x, chosen.labels[s], grid.back(), target);
            r.sample_index = picks[s];
            // Smallest budget in the schedule that covers the run.
            std::size_t level = grid.back();
            if (r.success)
                for (auto b : grid)
                    if (b >= r.final_count) {
                        level = b;
                        break;
                    }
            r.final_count = level;
            rep.records[s] = std::move(r);
        }
    }

    const auto grid = config.sweep_grid();
    rep.curve = curve_from_records(rep.records, grid);
    for (const auto& r : rep.records) {
        rep.successes += r.success;
        rep.clean_correct += r.clean_pred == r.true_label;
    }
    rep.success_rate = static_cast<double>(rep.successes) / static_cast<double>(rep.records.size());
    rep.filtered_success_rate = rep.curve.empty() ? 0.0 : rep.curve.back().filtered_success_rate;
    return rep;
}

std::string campaign_records_csv(const AttackCampaignReport& report) {
    std::string out = csv_row({"sample_index", "method", "final_epsilon_or_count", "clean_pred", "adv_pred", "success",
                               "true_label"});
    const std::string tag = report.tag();
    for (const auto& r : report.records) {
        const std::string v =
            r.method == AttackMethod::fgsm ? format_double(r.final_epsilon) : std::to_string(r.final_count);
        out += csv_row({std::to_string(r.sample_index), tag, v, std::to_string(r.clean_pred),
                        std::to_string(r.adv_pred), r.success ? "1" : "0", std::to_string(r.true_label)});
    }
    return out;
}

std::string campaign_summary_json(const AttackCampaignReport& report) {
    using nlohmann::ordered_json;
    const auto& c = report.config;
    ordered_json j;
    j["model_id"] = report.model_id;
    j["method"] = report.tag();
    j["samples"] = report.records.size();
    j["successes"] = report.successes;
    j["success_rate"] = report.success_rate;
    j["clean_correct"] = report.clean_correct;
    j["filtered_success_rate"] = report.filtered_success_rate;
    ordered_json cfg;
    cfg["rng_seed"] = c.rng_seed;
    if (c.method == AttackMethod::fgsm) {
        cfg["eps_start"] = c.eps_start;
        cfg["eps_step"] = c.eps_step;
        cfg["eps_max"] = c.eps_max;
    } else {
        cfg["i_start"] = c.i_start;
        cfg["i_step"] = c.i_step;
        cfg["i_max"] = c.i_max;
        if (c.target) cfg["target"] = *c.target;
    }
    j["config"] = cfg;
    const char* key = c.method == AttackMethod::fgsm ? "epsilon" : "element_count";
    ordered_json curve = ordered_json::array();
    for (const auto& p : report.curve) {
        ordered_json row;
        row[key] = p.value;
        row["successes"] = p.successes;
        row["success_rate"] = p.success_rate;
        row["filtered_success_rate"] = p.filtered_success_rate;
        curve.push_back(row);
    }
    j["curve"] = curve;
    return j.dump(2) + "\n";
}

std::string campaign_curve_text(const AttackCampaignReport& report) {
    const bool fgsm = report.method == AttackMethod::fgsm;
    std::string out = report.model_id + " (" + report.tag() + ", " + std::to_string(report.records.size()) +
                      " samples)\n";
    char line[128];
    std::snprintf(line, sizeof line, "%12s  %12s  %12s\n", fgsm ? "epsilon" : "elements", "success", "filtered");
    out += line;
    for (const auto& p : report.curve) {
        std::snprintf(line, sizeof line, "%12g  %11.2f%%  %11.2f%%\n", p.value, 100.0 * p.success_rate,
                      100.0 * p.filtered_success_rate);
        out += line;
    }
    return out;
}

}  // namespace advhash

#include "advhash/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "advhash/error.hpp"
#include "advhash/io.hpp"
#include "advhash/rng.hpp"

namespace advhash {

namespace {

std::vector<double> to_fractions(const std::vector<std::size_t>& counts, std::size_t total) {
    std::vector<double> f(counts.size(), 0.0);
    if (total == 0) return f;
    for (std::size_t i = 0; i < counts.size(); ++i)
        f[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return f;
}

}  // namespace

Histogram histogram_from_values(std::span<const double> values, std::vector<double> edges) {
    if (edges.size() < 2) throw ConfigError("histogram needs at least one bin");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) throw ConfigError("histogram edges must be strictly increasing");
    Histogram h;
    h.edges = std::move(edges);
    h.counts.assign(h.edges.size() - 1, 0);
    const std::size_t bins = h.counts.size();
    const double lo = h.edges.front();
    const double hi = h.edges.back();
    const double width = (hi - lo) / static_cast<double>(bins);
    bool first = true;
    for (double v : values) {
        if (!(v >= lo && v <= hi)) throw ConfigError("histogram value " + format_double(v) + " outside the edges");
        // Estimate, then settle against the stored edges so that the result is
        // exactly the edge comparison.
        auto k = static_cast<std::size_t>(std::min<double>(static_cast<double>(bins - 1), std::floor((v - lo) / width)));
        while (k > 0 && v < h.edges[k]) --k;
        while (k + 1 < bins && v >= h.edges[k + 1]) ++k;
        ++h.counts[k];
        if (first || v < h.min) h.min = v;
        if (first || v > h.max) h.max = v;
        first = false;
    }
    h.total = values.size();
    h.fractions = to_fractions(h.counts, h.total);
    return h;
}

Histogram weight_histogram(const Network& network, const std::vector<std::size_t>& layers, std::size_t bins) {
    if (bins == 0) throw ConfigError("weight histogram needs at least one bin");
    if (!network.initialized()) throw StateError("weight histogram: network parameters are not initialized");
    std::vector<std::size_t> sel = layers;
    if (sel.empty())
        for (std::size_t l = 0; l < network.layer_count(); ++l)
            if (network.architecture().layers[l].has_params()) sel.push_back(l);
    std::vector<double> values;
    for (auto l : sel) {
        const ParamLayer* p = network.params(l);
        if (!p) throw ConfigError("weight histogram: layer " + std::to_string(l) + " has no weights");
        const auto w = p->effective().weights.data();
        values.insert(values.end(), w.begin(), w.end());
    }
    if (values.empty()) throw ConfigError("weight histogram: empty layer selection");
    double r = 0.0;
    for (double v : values) r = std::max(r, std::fabs(v));
    if (r == 0.0) r = 1.0;
    std::vector<double> edges(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k)
        edges[k] = -r + 2.0 * r * static_cast<double>(k) / static_cast<double>(bins);
    edges.back() = r;
    return histogram_from_values(values, std::move(edges));
}

std::vector<double> decade_edges(int low, int high) {
    if (low >= high) throw ConfigError("decade edges need low < high");
    std::vector<double> e;
    for (int k = low; k <= high; ++k) e.push_back(std::stod("1e" + std::to_string(k)));
    return e;
}

std::size_t decade_bin(double magnitude, std::span<const double> edges) {
    if (!(magnitude >= edges.front())) return 0;
    const auto it = std::upper_bound(edges.begin(), edges.end(), magnitude);
    return static_cast<std::size_t>(it - edges.begin());
}

double GradientAmplitudeProfile::band_fraction(double lo, double hi) const {
    // Bin b (1..edges.size()-1) covers [edges[b-1], edges[b]); bin 0 covers
    // [0, edges[0]); the last bin covers [edges.back(), inf).
    double f = 0.0;
    for (std::size_t b = 0; b < fractions.size(); ++b) {
        const double blo = b == 0 ? 0.0 : edges[b - 1];
        const double bhi = b < edges.size() ? edges[b] : INFINITY;
        if (blo >= lo && bhi <= hi) f += fractions[b];
    }
    return f;
}

GradientAmplitudeProfile profile_from_gradients(std::span<const double> gradients, const std::string& model_id) {
    GradientAmplitudeProfile p;
    p.model_id = model_id;
    p.edges = decade_edges();
    p.counts.assign(p.edges.size() + 1, 0);
    double sum = 0.0;
    for (double g : gradients) {
        const double m = std::fabs(g);
        ++p.counts[decade_bin(m, p.edges)];
        sum += m;
    }
    p.total = gradients.size();
    p.fractions = to_fractions(p.counts, p.total);
    p.mean_abs = p.total ? sum / static_cast<double>(p.total) : 0.0;
    return p;
}

GradientAmplitudeProfile gradient_amplitude_profile(const Network& network, const Dataset& samples,
                                                    const std::string& model_id) {
    if (samples.size() == 0) throw ConfigError("gradient profile: no samples");
    std::vector<double> all;
    all.reserve(samples.images.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t s = 0; s < samples.size(); s += kChunk) {
        const std::size_t m = std::min(kChunk, samples.size() - s);
        std::vector<std::size_t> rows(m);
        for (std::size_t i = 0; i < m; ++i) rows[i] = s + i;
        const Tensor g =
            input_gradient_loss_batch(network, samples.batch(rows), std::span<const int>(samples.labels.data() + s, m));
        all.insert(all.end(), g.data().begin(), g.data().end());
    }
    return profile_from_gradients(all, model_id);
}

Dataset select_samples(const Dataset& data, std::size_t count, std::uint64_t seed) {
    if (count == 0 || count > data.size())
        throw ConfigError("cannot select " + std::to_string(count) + " samples from " + std::to_string(data.size()));
    Rng rng(derive_seed(seed, "analysis/samples"));
    return data.subset(rng.sample_without_replacement(data.size(), count));
}

CurveTable assemble_success_curves(std::span<const AttackCampaignReport> reports) {
    if (reports.empty()) throw ConfigError("success curves: no reports");
    CurveTable t;
    t.family = reports.front().method;
    for (const auto& rep : reports) {
        if (rep.method != t.family)
            throw ConfigError("success curves: report '" + rep.model_id + "' uses " + to_string(rep.method) +
                              " but the table holds " + to_string(t.family));
        const auto grid = rep.config.sweep_grid();
        for (const auto& p : curve_from_records(rep.records, grid)) {
            CurveRow r;
            r.model_id = rep.model_id;
            r.method = rep.tag();
            r.value = p.value;
            r.successes = p.successes;
            r.samples = rep.records.size();
            r.success_rate = p.success_rate;
            r.filtered_success_rate = p.filtered_success_rate;
            t.rows.push_back(std::move(r));
        }
    }
    return t;
}

std::string histogram_csv(const Histogram& h) {
    std::string out = csv_row({"bin_lo", "bin_hi", "count", "fraction"});
    for (std::size_t k = 0; k < h.bins(); ++k)
        out += csv_row({format_double(h.edges[k]), format_double(h.edges[k + 1]), std::to_string(h.counts[k]),
                        format_double(h.fractions[k])});
    return out;
}

std::string profile_csv(const GradientAmplitudeProfile& p) {
    std::string out = csv_row({"bin_lo", "bin_hi", "count", "fraction"});
    for (std::size_t b = 0; b < p.counts.size(); ++b) {
        const double lo = b == 0 ? 0.0 : p.edges[b - 1];
        const double hi = b < p.edges.size() ? p.edges[b] : INFINITY;
        out += csv_row({format_double(lo), format_double(hi), std::to_string(p.counts[b]), format_double(p.fractions[b])});
    }
    return out;
}

std::string curve_table_csv(const CurveTable& t) {
    std::string out = csv_row(
        {"model_id", "method", "sweep_value", "success_rate", "filtered_success_rate", "successes", "samples"});
    for (const auto& r : t.rows)
        out += csv_row({r.model_id, r.method, format_double(r.value), format_double(r.success_rate),
                        format_double(r.filtered_success_rate), std::to_string(r.successes), std::to_string(r.samples)});
    return out;
}

std::string curve_table_text(const CurveTable& t) {
    std::vector<std::string> models;
    std::map<double, std::map<std::string, double>> grid;
    for (const auto& r : t.rows) {
        if (std::find(models.begin(), models.end(), r.model_id) == models.end()) models.push_back(r.model_id);
        grid[r.value][r.model_id] = r.success_rate;
    }
    char cell[64];
    std::string out;
    std::snprintf(cell, sizeof cell, "%10s", t.family == AttackMethod::fgsm ? "epsilon" : "elements");
    out += cell;
    for (const auto& m : models) {
        std::snprintf(cell, sizeof cell, "  %12s", m.c_str());
        out += cell;
    }
    out += '\n';
    for (const auto& [v, row] : grid) {
        std::snprintf(cell, sizeof cell, "%10g", v);
        out += cell;
        for (const auto& m : models) {
            const auto it = row.find(m);
            if (it == row.end()) {
                std::snprintf(cell, sizeof cell, "  %12s", "-");
            } else {
                std::snprintf(cell, sizeof cell, "  %11.2f%%", 100.0 * it->second);
            }
            out += cell;
        }
        out += '\n';
    }
    return out;
}

}  // namespace advhash

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advhash/attack.hpp"
#include "advhash/dataset.hpp"
#include "advhash/network.hpp"

namespace advhash {

struct Histogram {
    std::vector<double> edges;  // bins + 1, strictly increasing
    std::vector<std::size_t> counts;
    std::vector<double> fractions;  // counts / total
    std::size_t total = 0;
    double min = 0.0;  // observed
    double max = 0.0;

    std::size_t bins() const { return counts.size(); }
    double range() const { return max - min; }
};

// Bin k holds edges[k] <= v < edges[k+1]; the last bin also holds v == edges.back().
// Values outside [edges.front(), edges.back()] are rejected.
Histogram histogram_from_values(std::span<const double> values, std::vector<double> edges);

// Weights of the selected parameter layers (all of them if `layers` is empty):
// virtual weights for hashed layers, raw weights for dense ones. `bins`
// uniform bins span [-R, R] with R the largest observed magnitude (R = 1 if
// every weight is 0).
Histogram weight_histogram(const Network& network, const std::vector<std::size_t>& layers = {},
                           std::size_t bins = 101);

// Magnitude histogram of input-gradient components over decade bins.
// Bin 0 is the underflow bin [0, 1e-25); bins 1..25 are [1e-25, 1e-24) ...
// [1e-1, 1); the last bin is the overflow bin [1, inf).
struct GradientAmplitudeProfile {
    std::string model_id;
    std::vector<double> edges;  // 1e-25, 1e-24, ..., 1
    std::vector<std::size_t> counts;
    std::vector<double> fractions;
    std::size_t total = 0;
    double mean_abs = 0.0;  // mean |dJ/dx| over all components

    // Fraction of components with lo <= |g| < hi, where lo and hi are decade
    // edges or 0 / inf.
    double band_fraction(double lo, double hi) const;
    // |g| >= 1e-10.
    double large_fraction() const { return band_fraction(1e-10, INFINITY); }
    // 1e-25 <= |g| < 1e-15.
    double small_fraction() const { return band_fraction(1e-25, 1e-15); }
};

inline constexpr int kDecadeLow = -25;
inline constexpr int kDecadeHigh = 0;

std::vector<double> decade_edges(int low = kDecadeLow, int high = kDecadeHigh);

// Bin index of a magnitude under decade_edges() as described above.
std::size_t decade_bin(double magnitude, std::span<const double> edges);

GradientAmplitudeProfile profile_from_gradients(std::span<const double> gradients, const std::string& model_id);

// |dJ/dx| of the cross-entropy at each sample's true label.
GradientAmplitudeProfile gradient_amplitude_profile(const Network& network, const Dataset& samples,
                                                    const std::string& model_id = "model");

// `count` samples drawn without replacement from (seed, "analysis/samples").
Dataset select_samples(const Dataset& data, std::size_t count, std::uint64_t seed);

struct CurveRow {
    std::string model_id;
    std::string method;  // tag of the report
    double value = 0.0;  // epsilon or element count
    std::size_t successes = 0;
    std::size_t samples = 0;
    double success_rate = 0.0;
    double filtered_success_rate = 0.0;
};

struct CurveTable {
    AttackMethod family = AttackMethod::fgsm;
    std::vector<CurveRow> rows;
};

// Success rates recounted from each report's records over its sweep grid.
// All reports must share one method family.
CurveTable assemble_success_curves(std::span<const AttackCampaignReport> reports);

std::string histogram_csv(const Histogram& h);
std::string profile_csv(const GradientAmplitudeProfile& p);
// Columns: model_id,method,sweep_value,success_rate,filtered_success_rate,successes,samples
std::string curve_table_csv(const CurveTable& t);
// One line per sweep value with a column per model.
std::string curve_table_text(const CurveTable& t);

}  // namespace advhash

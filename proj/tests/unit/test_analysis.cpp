#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"

using namespace advhash;
using namespace advhash::testing;

namespace {

// Sorts the values and walks the edges once: the reference binning.
std::vector<std::size_t> sort_and_bucket(std::vector<double> v, const std::vector<double>& edges) {
    std::sort(v.begin(), v.end());
    std::vector<std::size_t> counts(edges.size() - 1, 0);
    std::size_t bin = 0;
    for (double x : v) {
        while (bin + 1 < counts.size() && x >= edges[bin + 1]) ++bin;
        ++counts[bin];
    }
    return counts;
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

TEST_CASE("histogram counts equal the sort-and-bucket oracle") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const std::size_t bins = 1 + rng.below(120);
        const double r = rng.uniform(0.01, 3.0);
        std::vector<double> edges(bins + 1);
        for (std::size_t k = 0; k <= bins; ++k) edges[k] = -r + 2.0 * r * static_cast<double>(k) / bins;
        std::vector<double> v(1 + rng.below(2000));
        for (auto& x : v) x = rng.uniform(-r, r);
        // Exact edge hits exercise the boundary rule.
        v.push_back(edges[bins / 2]);
        v.push_back(edges.back());
        v.push_back(edges.front());
        const Histogram h = histogram_from_values(v, edges);
        CHECK(h.counts == sort_and_bucket(v, edges));
        CHECK(h.total == v.size());
        CHECK(std::fabs(sum(h.fractions) - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(histogram_from_values(std::vector<double>{2.0}, {0.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(histogram_from_values(std::vector<double>{0.5}, {1.0, 0.0}), ConfigError);
}

TEST_CASE("weight histogram examples") {
    const Network zero = linear_softmax(Tensor({3, 4}), Tensor({3}));
    const Histogram h = weight_histogram(zero);
    CHECK(h.bins() == 101);
    CHECK(std::count_if(h.counts.begin(), h.counts.end(), [](std::size_t c) { return c > 0; }) == 1);
    CHECK(h.counts[50] == 12);
    CHECK(h.min == 0.0);
    CHECK(h.max == 0.0);

    const Network net = Network::initialize(tiny_cnn_spec("1/4"), 3);
    const Histogram all = weight_histogram(net);
    std::size_t n = 0;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t l = 0; l < net.layer_count(); ++l)
        if (const ParamLayer* p = net.params(l)) {
            n += p->effective().weights.size();
            for (double w : p->effective().weights.data()) {
                lo = std::min(lo, w);
                hi = std::max(hi, w);
            }
        }
    CHECK(all.total == n);
    CHECK(all.min == lo);
    CHECK(all.max == hi);
    CHECK(all.edges.front() == -std::max(-lo, hi));
    CHECK(std::fabs(sum(all.fractions) - 1.0) <= 1e-12);

    const Histogram fc = weight_histogram(net, {3}, 11);
    CHECK(fc.total == net.params(3)->virtual_weight_count());
    CHECK_THROWS_AS(weight_histogram(net, {1}), ConfigError);
    CHECK_THROWS_AS(weight_histogram(net, {}, 0), ConfigError);
}

TEST_CASE("decade bins") {
    const auto e = decade_edges();
    REQUIRE(e.size() == 26);
    CHECK(e.front() == 1e-25);
    CHECK(e.back() == 1.0);
    CHECK(decade_bin(0.0, e) == 0);
    CHECK(decade_bin(1e-30, e) == 0);
    CHECK(decade_bin(1e-25, e) == 1);
    CHECK(decade_bin(5e-11, e) == 15);
    CHECK(decade_bin(1e-10, e) == 16);
    CHECK(decade_bin(0.5, e) == 25);
    CHECK(decade_bin(1.0, e) == 26);
    CHECK(decade_bin(40.0, e) == 26);
}

TEST_CASE("gradient profile fractions match direct per-component binning") {
    Rng rng(5);
    std::vector<double> g(5000);
    for (auto& x : g) x = (rng.below(2) ? -1 : 1) * std::pow(10.0, rng.uniform(-30, 1));
    g[0] = 0.0;
    const auto p = profile_from_gradients(g, "m");
    const auto e = decade_edges();
    std::vector<std::size_t> oracle(e.size() + 1, 0);
    for (double x : g) {
        const double a = std::fabs(x);
        std::size_t b = 0;
        while (b < e.size() && a >= e[b]) ++b;
        ++oracle[b];
    }
    CHECK(p.counts == oracle);
    CHECK(std::fabs(sum(p.fractions) - 1.0) <= 1e-12);
    std::size_t large = 0, small = 0;
    for (double x : g) {
        large += std::fabs(x) >= 1e-10;
        small += std::fabs(x) >= 1e-25 && std::fabs(x) < 1e-15;
    }
    CHECK(p.large_fraction() == doctest::Approx(large / 5000.0).epsilon(1e-12));
    CHECK(p.small_fraction() == doctest::Approx(small / 5000.0).epsilon(1e-12));
}

TEST_CASE("zero-weight network puts all gradient mass in the underflow bin") {
    Network net = Network::initialize(tiny_cnn_spec(), 1);
    for (std::size_t l = 0; l < net.layer_count(); ++l)
        if (ParamLayer* p = net.mutable_params(l)) {
            for (auto& w : p->stored_weights()) w = 0.0;
            p->sync();
        }
    const auto p = gradient_amplitude_profile(net, random_images(4, {2, 7, 7}, 3, 1));
    CHECK(p.fractions[0] == 1.0);
    CHECK(p.mean_abs == 0.0);
    CHECK(p.total == 4 * 98);
}

TEST_CASE("sample selection and profiles are reproducible") {
    const Dataset data = random_images(30, {2, 7, 7}, 3, 2);
    const Dataset a = select_samples(data, 10, 4), b = select_samples(data, 10, 4), c = select_samples(data, 10, 5);
    CHECK(a.images == b.images);
    CHECK(a.labels == b.labels);
    CHECK_FALSE(a.images == c.images);
    CHECK_THROWS_AS(select_samples(data, 31, 4), ConfigError);
    const Network net = Network::initialize(tiny_cnn_spec("1/2"), 6);
    CHECK(profile_csv(gradient_amplitude_profile(net, a, "x")) == profile_csv(gradient_amplitude_profile(net, b, "x")));
}

TEST_CASE("success curves") {
    const Network net = Network::initialize(tiny_cnn_spec("1/2"), 2);
    const Dataset data = random_images(20, {2, 7, 7}, 3, 7);
    CampaignConfig c;
    c.samples = 10;
    c.eps_start = 0.05;
    c.eps_step = 0.05;
    c.eps_max = 0.3;
    const auto r = run_campaign(net, data, c, "tiny");

    const CurveTable one = assemble_success_curves(std::span(&r, 1));
    REQUIRE(one.rows.size() == r.curve.size());
    CHECK(one.rows.back().success_rate == r.success_rate);
    for (std::size_t k = 0; k < one.rows.size(); ++k) {
        CHECK(one.rows[k].successes == r.curve[k].successes);
        CHECK(one.rows[k].model_id == "tiny");
        CHECK(one.rows[k].method == "hfgsm");
    }
    // Rates recounted from the raw records.
    std::size_t recount = 0;
    for (const auto& rec : r.records) recount += rec.success;
    CHECK(recount == r.successes);

    const Network dense = Network::initialize(tiny_cnn_spec(), 2);
    std::vector<AttackCampaignReport> two{r, run_campaign(dense, data, c, "dense")};
    const CurveTable t = assemble_success_curves(two);
    CHECK(t.rows.size() == 2 * r.curve.size());
    const std::string csv = curve_table_csv(t);
    CHECK(csv.find("model_id,method,sweep_value,success_rate,filtered_success_rate,successes,samples\n") !=
          std::string::npos);
    CHECK(curve_table_text(t).find("dense") != std::string::npos);

    CampaignConfig j;
    j.method = AttackMethod::jsma;
    j.samples = 3;
    j.i_max = 3;
    two.push_back(run_campaign(net, data, j, "tiny"));
    CHECK_THROWS_AS(assemble_success_curves(two), ConfigError);
    CHECK_THROWS_AS(assemble_success_curves(std::span<const AttackCampaignReport>{}), ConfigError);
}

#include <cmath>
#include <map>

#include "doctest.h"
#include "idpg/expectations.hpp"
#include "idpg/sampling.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace idpg;
using testutil::mean_se;
using testutil::uniform_product;
using testutil::v;

namespace {

template <class Sampler>
testutil::MeanSe edge_stats(Sampler&& sample, int reps, std::uint64_t seed) {
    std::vector<double> counts;
    for (int i = 0; i < reps; ++i) {
        SeededRng rng(seed, static_cast<std::uint64_t>(i));
        SampledGraph g = sample(rng);
        g.validate();
        counts.push_back(static_cast<double>(g.edge_count()));
    }
    return mean_se(counts);
}

// Overlap fraction over disjoint node pairs (2k, 2k+1) of lifetime realizations.
testutil::MeanSe overlap_fraction(double eta, double window, int pairs, std::uint64_t seed) {
    auto model = uniform_product(1, 10.0, 10.0);
    std::vector<double> hits;
    for (std::uint64_t rep = 0; static_cast<int>(hits.size()) < pairs; ++rep) {
        SeededRng rng(seed, rep);
        SampledGraph g = sample_lifetime(model, eta, window, rng);
        for (std::size_t k = 0; k + 1 < g.node_count() && static_cast<int>(hits.size()) < pairs; k += 2) {
            hits.push_back(lifetimes_overlap(g.nodes[k], g.nodes[k + 1]) ? 1.0 : 0.0);
        }
    }
    return mean_se(hits);
}

}  // namespace

TEST_CASE("Poisson node counts") {
    auto model = uniform_product(1, 5.0, 10.0);
    std::vector<double> n;
    for (int i = 0; i < 1000; ++i) {
        SeededRng rng(21, i);
        n.push_back(static_cast<double>(sample_positions(model, rng).size()));
    }
    auto s = mean_se(n);
    CHECK(s.mean > 47.8);
    CHECK(s.mean < 52.2);
    // Inversion branch (Lambda < 30) and PTRS branch both have the right mean and variance.
    for (double lam : {3.0, 29.0, 31.0, 400.0}) {
        SeededRng rng(5, static_cast<std::uint64_t>(lam));
        std::vector<double> xs;
        for (int i = 0; i < 100000; ++i) xs.push_back(static_cast<double>(rng.poisson(lam)));
        auto ms = mean_se(xs);
        CHECK(std::fabs(ms.mean - lam) < 3.0 * std::sqrt(lam / 1e5));
        CHECK(ms.se * ms.se * 1e5 == doctest::Approx(lam).epsilon(0.03));
    }
}

TEST_CASE("mixture species frequencies follow gamma") {
    auto comp = [](double c) {
        return MarginalIntensity::trunc_gaussian({v({0.5}), v({30.0}), c});
    };
    auto model = IntensityModel::mixture({{"a", comp(5.0), comp(6.0)}, {"b", comp(2.0), comp(5.0)}});
    SeededRng rng(8, 0);
    int first = 0, total = 0;
    while (total < 10000) {
        for (const auto& node : sample_positions(model, rng)) {
            REQUIRE(node.species.has_value());
            if (*node.species == 0) ++first;
            if (++total == 10000) break;
        }
    }
    double sigma = std::sqrt(0.75 * 0.25 / 10000);
    CHECK(std::fabs(first / 10000.0 - 0.75) < 3 * sigma);
}

TEST_CASE("tight truncated Gaussian coordinate spread") {
    auto g = MarginalIntensity::trunc_gaussian({v({0.9}), v({500.0}), 1.0});
    SeededRng rng(9, 0);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(g.sample(rng)[0]);
    auto s = mean_se(xs);
    double sd = s.se * std::sqrt(1e5);
    CHECK(std::fabs(sd - 0.045) < 0.1 * 0.045);
}

TEST_CASE("empty realisations give empty graphs") {
    auto model = uniform_product(1, 0.1, 0.1);
    bool saw_empty = false;
    for (int i = 0; i < 50 && !saw_empty; ++i) {
        SeededRng rng(1, i);
        auto g = sample_perennial(model, rng, true);
        if (g.node_count() == 0) {
            saw_empty = true;
            CHECK(g.edge_count() == 0);
        }
    }
    CHECK(saw_empty);
}

TEST_CASE("edge-count oracles on the uniform d=1 Lambda=6 model") {
    auto model = uniform_product(1, 2.0, 3.0);
    auto s = moments(model);
    const int reps = 10000;
    SUBCASE("perennial without loops") {
        auto st = edge_stats([&](SeededRng& r) { return sample_perennial(model, r, false); }, reps, 100);
        CHECK(expected_edges(s, {}) == doctest::Approx(9.0));
        CHECK(std::fabs(st.mean - 9.0) < 3 * st.se);
    }
    SUBCASE("perennial with loops") {
        auto st = edge_stats([&](SeededRng& r) { return sample_perennial(model, r, true); }, reps, 101);
        CHECK(std::fabs(st.mean - 10.5) < 3 * st.se);
    }
    SUBCASE("ephemeral") {
        auto st = edge_stats([&](SeededRng& r) { return sample_ephemeral(model, r); }, reps, 102);
        CHECK(std::fabs(st.mean - 3.0) < 3 * st.se);
    }
    SUBCASE("asymmetric ephemeral") {
        auto st = edge_stats([&](SeededRng& r) { return sample_asymmetric_ephemeral(model, model, 6.0, r); }, reps, 103);
        CHECK(std::fabs(st.mean - 0.75) < 3 * st.se);
    }
    SUBCASE("lifetime, with and without self-pairs") {
        auto rule = EdgeRule::lifetime(1.0, 1.0);
        double expected = expected_edges(s, rule);
        // Independent oracle: Lambda^2 p x over distinct pairs plus Lambda x from self-pairs.
        CHECK(expected == doctest::Approx(36.0 * oracle::overlap(1.0, 1.0) * 0.25 + 6.0 * 0.25).epsilon(1e-12));
        auto st = edge_stats([&](SeededRng& r) { return sample_lifetime(model, 1.0, 1.0, r); }, reps, 104);
        CHECK(std::fabs(st.mean - expected) < 3 * st.se);
        auto no_self = EdgeRule::lifetime(1.0, 1.0, false);
        auto st2 = edge_stats([&](SeededRng& r) { return sample_lifetime(model, 1.0, 1.0, r, false); }, reps, 105);
        CHECK(std::fabs(st2.mean - expected_edges(s, no_self)) < 3 * st2.se);
    }
}

TEST_CASE("ephemeral structure") {
    auto model = uniform_product(2, 10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        SeededRng rng(31, i);
        auto g = sample_ephemeral(model, rng);
        CHECK(g.node_count() % 2 == 0);
        CHECK(g.pairs.size() * 2 == g.node_count());
        g.validate();  // every non-loop edge stays inside its pair: components have <= 2 nodes
        for (const auto& e : g.edges) CHECK(e.first / 2 == e.second / 2);
    }
}

TEST_CASE("lifetime overlap fractions") {
    CHECK(overlap_fraction(1000.0, 1.0, 10000, 1).mean > 0.999);
    auto tiny = overlap_fraction(0.001, 1.0, 100000, 2);
    CHECK(overlap_probability(0.001, 1.0) < 0.002);
    CHECK(std::fabs(tiny.mean - overlap_probability(0.001, 1.0)) < 3 * std::sqrt(0.002 / 100000));
    auto one = overlap_fraction(1.0, 1.0, 10000, 3);
    CHECK(std::fabs(one.mean - 0.7358) < 3 * one.se);
    for (double ratio : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        CAPTURE(ratio);
        double p = overlap_probability(ratio, 1.0);
        auto f = overlap_fraction(ratio, 1.0, 10000, 4);
        CHECK(std::fabs(f.mean - p) < 3 * std::sqrt(p * (1 - p) / 10000));
    }
}

TEST_CASE("lifetime graph edges respect lifetime overlap") {
    auto model = uniform_product(1, 6.0, 6.0);
    for (int i = 0; i < 50; ++i) {
        SeededRng rng(77, i);
        sample_lifetime(model, 0.2, 1.0, rng).validate();
    }
}

TEST_CASE("zero source weight species never appear as sources") {
    auto comp = [](double mean, double c) { return MarginalIntensity::trunc_gaussian({v({mean}), v({100.0}), c}); };
    auto source = IntensityModel::mixture({{"a", comp(0.3, 2.0), comp(0.3, 2.0)}});
    auto target = IntensityModel::mixture({{"a", comp(0.3, 2.0), comp(0.3, 2.0)}, {"b", comp(0.8, 1.0), comp(0.8, 2.0)}});
    SeededRng rng(4, 4);
    auto g = sample_asymmetric_ephemeral(source, target, 200000.0, rng);
    CHECK(g.pairs.size() > 90000);
    for (const auto& p : g.pairs) CHECK(g.nodes[p.first].species.value() == 0);
}

TEST_CASE("observed subgraph") {
    SampledGraph empty;
    CHECK(observed_subgraph(empty).node_count() == 0);
    SampledGraph g;
    g.include_self_loops = true;
    g.nodes.resize(2);
    g.edges.emplace_back(1, 1);
    auto o = observed_subgraph(g);
    REQUIRE(o.node_count() == 1);
    REQUIRE(o.edge_count() == 1);
    CHECK(o.edges[0] == Edge{0, 0});

    // Selection bias: observed nodes have larger giving norms on average.
    auto model = IntensityModel::product(MarginalIntensity::uniform_ball(2, 3.0), MarginalIntensity::uniform_ball(2, 1.0));
    double all_sum = 0, obs_sum = 0;
    std::size_t all_n = 0, obs_n = 0;
    for (int i = 0; i < 1000; ++i) {
        SeededRng rng(55, i);
        auto sg = sample_perennial(model, rng, false);
        for (const auto& n : sg.nodes) { all_sum += n.position.g.norm(); ++all_n; }
        for (const auto& n : observed_subgraph(sg).nodes) { obs_sum += n.position.g.norm(); ++obs_n; }
    }
    CHECK(obs_sum / obs_n >= all_sum / all_n);
}

TEST_CASE("perennial edges are independent Bernoulli given positions") {
    // Fix three nodes, re-roll the edges many times; chi-square the nine margins
    // and the 2x2 joint table of two edges sharing a node.
    auto model = uniform_product(2, 3.0, 3.0);
    SeededRng pos_rng(12, 0);
    std::vector<GraphNode> nodes;
    while (nodes.size() < 3) {
        auto more = sample_positions(model, pos_rng);
        nodes.insert(nodes.end(), more.begin(), more.end());
    }
    nodes.resize(3);
    const int rolls = 20000;
    int hits[3][3] = {};
    int joint[2][2] = {};
    SeededRng rng(12, 1);
    for (int k = 0; k < rolls; ++k) {
        bool a = false, b = false;
        for (const auto& e : roll_perennial_edges(nodes, rng, true)) {
            ++hits[e.first][e.second];
            if (e == Edge{0, 1}) a = true;
            if (e == Edge{1, 2}) b = true;
        }
        ++joint[a][b];
    }
    double chi2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double p = nodes[i].position.g.dot(nodes[j].position.r);
            double e = p * rolls;
            chi2 += (hits[i][j] - e) * (hits[i][j] - e) / (e * (1 - p));
        }
    }
    CHECK(chi2 < 21.666);  // chi-square, 9 dof, 1% level
    double pa = static_cast<double>(hits[0][1]) / rolls, pb = static_cast<double>(hits[1][2]) / rolls;
    double indep = 0.0;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            double e = rolls * (a ? pa : 1 - pa) * (b ? pb : 1 - pb);
            indep += (joint[a][b] - e) * (joint[a][b] - e) / e;
        }
    }
    CHECK(indep < 6.635);  // chi-square, 1 dof, 1% level
}

TEST_CASE("sampling determinism") {
    auto model = uniform_product(2, 4.0, 4.0);
    SeededRng a(3, 9), b(3, 9);
    auto g1 = sample_perennial(model, a, true);
    auto g2 = sample_perennial(model, b, true);
    CHECK(g1.edges == g2.edges);
    REQUIRE(g1.node_count() == g2.node_count());
    for (std::size_t i = 0; i < g1.node_count(); ++i) CHECK(g1.nodes[i].position.g == g2.nodes[i].position.g);
}

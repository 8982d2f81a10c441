#include <cmath>

#include "doctest.h"
#include "idpg/expectations.hpp"
#include "idpg/heat.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace idpg;
using testutil::v;

namespace {

IntensityModel gaussian_product_1d() {
    return IntensityModel::product(MarginalIntensity::trunc_gaussian({v({0.6}), v({20.0}), 2.0}),
                                   MarginalIntensity::trunc_gaussian({v({0.4}), v({30.0}), 3.0}));
}

IntensityModel gaussian_product_2d() {
    return IntensityModel::product(MarginalIntensity::trunc_gaussian({v({0.5, 0.3}), v({15.0, 25.0}), 2.0}),
                                   MarginalIntensity::trunc_gaussian({v({0.2, 0.6}), v({20.0, 20.0}), 4.0}));
}

BoxRegion box(std::initializer_list<double> lo, std::initializer_list<double> hi) { return {v(lo), v(hi)}; }

BoxRegion omega(int d) { return BoxRegion::unit(2 * d); }

// Green bite a x full red space, and full green space x red bite b, as Omega boxes.
BoxRegion green_bite(const BoxRegion& a) {
    int d = a.dim();
    BoxRegion out = BoxRegion::unit(2 * d);
    out.lower.head(d) = a.lower;
    out.upper.head(d) = a.upper;
    return out;
}

BoxRegion red_bite(const BoxRegion& b) {
    int d = b.dim();
    BoxRegion out = BoxRegion::unit(2 * d);
    out.lower.tail(d) = b.lower;
    out.upper.tail(d) = b.upper;
    return out;
}

double normalised_l2_distance(const GridField& a, const GridField& b) {
    double na = 0.0, nb = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a.values[i] / na - b.values[i] / nb;
        dist += diff * diff;
    }
    return std::sqrt(dist);
}

}  // namespace

TEST_CASE("raw heat density") {
    auto m = testutil::uniform_product(1, 2.0, 3.0);
    CHECK(raw_heat_density(m, {v({1.0}), v({0.5})}, {v({0.5}), v({1.0})}) == doctest::Approx(36.0).epsilon(1e-12));
    // Outside the ball rho vanishes.
    auto m2 = testutil::uniform_product(2, 1.0, 1.0);
    CHECK(raw_heat_density(m2, {v({0.9, 0.9}), v({0.5, 0.5})}, {v({0.5, 0.5}), v({0.5, 0.5})}) == 0.0);
    // Orthogonal g_s and r_t.
    CHECK(raw_heat_density(m2, {v({1.0, 0.0}), v({0.5, 0.5})}, {v({0.5, 0.5}), v({0.0, 1.0})}) == 0.0);
    CHECK_THROWS(raw_heat_density(m2, {v({1.0}), v({0.5})}, {v({0.5}), v({1.0})}));
}

TEST_CASE("raw heat map over Omega matches the perennial expectation") {
    auto m = testutil::uniform_product(1, 2.0, 3.0);
    CHECK(raw_heat_map(m, omega(1), omega(1)) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(std::fabs(raw_heat_map(m, omega(1), omega(1)) - 9.0) < 1e-6);
    EdgeRule distinct;
    for (const auto& model : {gaussian_product_1d(), gaussian_product_2d(), testutil::uniform_product(2, 2.0, 5.0)}) {
        int d = model.dim();
        double expected = expected_edges(moments(model), distinct);
        CHECK(raw_heat_map(model, omega(d), omega(d)) == doctest::Approx(expected).epsilon(1e-6));
    }
    // Independent oracle for the d=1 Gaussian: H = (c_R int g rho_G)(c_G int r rho_R) with brute-force midpoint sums.
    auto dens_g = [](double x) { return std::exp(-10.0 * (x - 0.6) * (x - 0.6)); };
    auto dens_r = [](double x) { return std::exp(-15.0 * (x - 0.4) * (x - 0.4)); };
    double zg = oracle::midpoint(dens_g, 0, 1, 200000), zr = oracle::midpoint(dens_r, 0, 1, 200000);
    double mg = 2.0 * oracle::midpoint([&](double x) { return x * dens_g(x); }, 0, 1, 200000) / zg;
    double mr = 3.0 * oracle::midpoint([&](double x) { return x * dens_r(x); }, 0, 1, 200000) / zr;
    CHECK(raw_heat_map(gaussian_product_1d(), omega(1), omega(1)) == doctest::Approx(6.0 * mg * mr).epsilon(1e-8));
}

TEST_CASE("raw heat map: empty boxes and additivity") {
    auto m = gaussian_product_1d();
    CHECK(raw_heat_map(m, box({0.3, 0.2}, {0.3, 0.9}), omega(1)) == 0.0);
    CHECK(raw_heat_map(m, omega(1), box({0.1, 0.5}, {0.4, 0.5})) == 0.0);
    for (const auto& model : {testutil::uniform_product(1, 2.0, 3.0), m}) {
        BoxRegion b = box({0.1, 0.2}, {0.8, 0.9});
        double whole = raw_heat_map(model, box({0.0, 0.1}, {1.0, 0.7}), b);
        double left = raw_heat_map(model, box({0.0, 0.1}, {0.37, 0.7}), b);
        double right = raw_heat_map(model, box({0.37, 0.1}, {1.0, 0.7}), b);
        CHECK(std::fabs(whole - left - right) < 1e-12);
        double top = raw_heat_map(model, box({0.0, 0.1}, {1.0, 0.45}), b);
        double bottom = raw_heat_map(model, box({0.0, 0.45}, {1.0, 0.7}), b);
        CHECK(std::fabs(whole - top - bottom) < 1e-12);
    }
}

TEST_CASE("asymmetry witness") {
    auto m = gaussian_product_1d();
    BoxRegion a = box({0.5, 0.0}, {1.0, 0.5});
    BoxRegion b = box({0.0, 0.5}, {0.5, 1.0});
    double ab = raw_heat_map(m, a, b), ba = raw_heat_map(m, b, a);
    CHECK(ab > 0.0);
    CHECK(ba > 0.0);
    CHECK(std::fabs(ab - ba) > 1e-3 * std::max(ab, ba));
}

TEST_CASE("bound heat grid") {
    auto m = testutil::uniform_product(1, 2.0, 3.0);
    GridField h = bound_heat_grid(m, 64);
    h.validate();
    CHECK(h.integral() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(6.0 * h.integral() == doctest::Approx(raw_heat_map(m, omega(1), omega(1))).epsilon(1e-12));

    auto g2 = gaussian_product_2d();
    GridField h2 = bound_heat_grid(g2, 48);
    h2.validate();
    auto s = moments(g2);
    CHECK(h2.integral() == doctest::Approx(s.mu_G.dot(s.mu_R)).epsilon(2e-3));
    // Zero where the green marginal vanishes (g outside the ball).
    for (std::size_t i = 0; i < h2.size(); ++i) {
        Vec c = h2.center(i);
        if (c.head(2).norm() > 1.0 || c.tail(2).norm() > 1.0) CHECK(h2.values[i] == 0.0);
    }

    std::vector<MixtureComponent> comps{{"a", MarginalIntensity::uniform_ball(1, 1.0), MarginalIntensity::uniform_ball(1, 1.0)},
                                        {"b", MarginalIntensity::uniform_ball(1, 2.0), MarginalIntensity::uniform_ball(1, 1.0)}};
    CHECK_THROWS_WITH(bound_heat_grid(IntensityModel::mixture(comps), 8),
                      doctest::Contains("raw_heat_slice"));
}

TEST_CASE("bite heat combinations") {
    auto m = testutil::uniform_product(1, 2.0, 3.0);
    auto s = moments(m);
    BiteMoments green_full{s.c_G, s.mu_G}, red_full{s.c_R, s.mu_R};
    CHECK(bite_heat(s, green_full, red_full, BiteCombination::GtoR) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(bite_heat(s, red_full, green_full, BiteCombination::RtoG) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(bite_heat(s, green_full, red_full, BiteCombination::GtoR) ==
          doctest::Approx(s.lambda * bound_heat_grid(m, 32).integral()).epsilon(1e-9));

    BiteMoments empty{0.0, Vec::Zero(1)};
    for (auto c : {BiteCombination::GtoR, BiteCombination::GtoG, BiteCombination::RtoR, BiteCombination::RtoG}) {
        CHECK(bite_heat(s, empty, empty, c) == 0.0);
    }
    CHECK_THROWS(bite_heat(s, BiteMoments{1.0, std::nullopt}, red_full, BiteCombination::GtoR));
    CHECK_THROWS(bite_heat(s, green_full, BiteMoments{std::nullopt, s.mu_R}, BiteCombination::GtoG));

    // Each row of the bite table against the raw heat map over the corresponding Omega boxes.
    auto g2 = gaussian_product_2d();
    auto s2 = moments(g2);
    const auto& comp = g2.components().front();
    QuadratureSpec q;
    BoxRegion a = box({0.1, 0.0}, {0.6, 0.5}), a2 = box({0.4, 0.2}, {0.9, 0.7});
    BoxRegion b = box({0.0, 0.3}, {0.4, 0.9}), b2 = box({0.1, 0.0}, {0.5, 0.5});
    auto ga = BiteMoments::from(comp.green.integrate(a, q));
    auto ga2 = BiteMoments::from(comp.green.integrate(a2, q));
    auto rb = BiteMoments::from(comp.red.integrate(b, q));
    auto rb2 = BiteMoments::from(comp.red.integrate(b2, q));
    CHECK(bite_heat(s2, ga, rb, BiteCombination::GtoR) ==
          doctest::Approx(raw_heat_map(g2, green_bite(a), red_bite(b))).epsilon(1e-9));
    CHECK(bite_heat(s2, ga, ga2, BiteCombination::GtoG) ==
          doctest::Approx(raw_heat_map(g2, green_bite(a), green_bite(a2))).epsilon(1e-9));
    CHECK(bite_heat(s2, rb, rb2, BiteCombination::RtoR) ==
          doctest::Approx(raw_heat_map(g2, red_bite(b), red_bite(b2))).epsilon(1e-9));
    CHECK(bite_heat(s2, rb, ga, BiteCombination::RtoG) ==
          doctest::Approx(raw_heat_map(g2, red_bite(b), green_bite(a))).epsilon(1e-9));
    // Full bites give Lambda times the total bound heat.
    BiteMoments gfull{s2.c_G, s2.mu_G}, rfull{s2.c_R, s2.mu_R};
    CHECK(bite_heat(s2, gfull, rfull, BiteCombination::GtoR) ==
          doctest::Approx(raw_heat_map(g2, omega(2), omega(2))).epsilon(1e-9));
}

TEST_CASE("raw heat slices") {
    const int n = 64;
    GridField prod = GridField::on_box(2, n);
    for (std::size_t i = 0; i < prod.size(); ++i) {
        Vec c = prod.center(i);
        prod.values[i] = (1.0 + c[0]) * std::exp(-3.0 * (c[1] - 0.4) * (c[1] - 0.4));
    }
    auto pm = IntensityModel::tabulated(prod);
    GridField s1 = raw_heat_slice(pm, 0.2, 0.5, 32), s2 = raw_heat_slice(pm, 0.8, 0.3, 32);
    CHECK(normalised_l2_distance(s1, s2) < 1e-9);

    GridField blobs = GridField::on_box(2, n);
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        Vec c = blobs.center(i);
        auto bump = [&](double g0, double r0) {
            return std::exp(-((c[0] - g0) * (c[0] - g0) + (c[1] - r0) * (c[1] - r0)) / (2 * 0.1 * 0.1));
        };
        blobs.values[i] = bump(0.3, 0.7) + bump(0.7, 0.3);
    }
    auto bm = IntensityModel::tabulated(blobs);
    GridField t1 = raw_heat_slice(bm, 0.3, 0.5, 32), t2 = raw_heat_slice(bm, 0.7, 0.5, 32);
    CHECK(normalised_l2_distance(t1, t2) > 0.1);
    for (double x : t1.values) CHECK(x >= 0.0);
    CHECK_THROWS(raw_heat_slice(bm, 1.2, 0.5, 8));
    CHECK_THROWS(raw_heat_slice(bm, 0.5, -0.1, 8));
    CHECK_THROWS(raw_heat_slice(gaussian_product_2d(), 0.5, 0.5, 8));
}

TEST_CASE("intensity recovery from diagonal heat") {
    auto m = testutil::uniform_product(1, 2.0, 3.0);
    auto rec = recover_intensity_from_heat([&](const Position& s) { return raw_heat_density(m, s, s); }, 1);
    auto r = rec({v({0.5}), v({0.5})});
    CHECK(r.recoverable);
    CHECK(r.value == doctest::Approx(6.0).epsilon(1e-14));
    CHECK_FALSE(rec({v({0.0}), v({0.7})}).recoverable);

    auto g2 = gaussian_product_2d();
    auto rec2 = recover_intensity_from_heat([&](const Position& s) { return raw_heat_density(g2, s, s); }, 2);
    CHECK_FALSE(rec2({v({1.0, 0.0}), v({0.0, 1.0})}).recoverable);
    double worst = 0.0;
    int checked = 0;
    for (int a = 1; a < 10; ++a)
        for (int b = 1; b < 10; ++b)
            for (int c = 1; c < 10; ++c)
                for (int e = 1; e < 10; ++e) {
                    Position s{v({a / 10.0, b / 10.0}), v({c / 10.0, e / 10.0})};
                    if (!in_latent_ball(s.g) || !in_latent_ball(s.r) || kernel_affinity(s.g, s.r) <= 0.01) continue;
                    double truth = evaluate_intensity(g2, s);
                    auto got = rec2(s);
                    REQUIRE(got.recoverable);
                    worst = std::max(worst, std::fabs(got.value - truth) / truth);
                    ++checked;
                }
    CHECK(checked > 1000);
    CHECK(worst < 1e-6);
}

TEST_CASE("Dirac limit recovers dot products") {
    std::vector<Position> pos{{v({0.8}), v({0.3})}, {v({0.2}), v({0.9})}, {v({0.5}), v({0.55})}};
    Mat h = dirac_limit_heat(pos, 1e-3, 256);
    for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = 0; j < pos.size(); ++j) {
            double p = pos[i].g.dot(pos[j].r);
            CHECK(std::fabs(h(i, j) - p) < 0.01 * p);
        }
    CHECK(h(0, 1) == doctest::Approx(0.72).epsilon(0.01));

    std::vector<Position> pos2{{v({0.6, 0.3}), v({0.2, 0.7})}, {v({0.1, 0.5}), v({0.8, 0.4})}};
    Mat h2 = dirac_limit_heat(pos2, 1e-3, 256);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(h2(i, j) == doctest::Approx(pos2[i].g.dot(pos2[j].r)).epsilon(0.01));

    // With +-3 eps boxes each box keeps erf(3/sqrt 2) of the mass per axis, four axes per entry.
    double p3 = std::erf(3.0 / std::sqrt(2.0));
    Mat h3 = dirac_limit_heat(pos, 1e-3, 256, 3e-3);
    CHECK(h3(0, 1) == doctest::Approx(0.72 * std::pow(p3, 4)).epsilon(1e-6));
}

TEST_CASE("Dirac limit converges monotonically at a boundary position") {
    std::vector<Position> pos{{v({1.0}), v({0.4})}, {v({0.3}), v({1.0})}};
    double prev = 1.0;
    for (double eps : {1e-2, 5e-3, 1e-3}) {
        Mat h = dirac_limit_heat(pos, eps, 256);
        double err = std::fabs(h(0, 1) - 1.0);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("Dirac limit argument checks") {
    std::vector<Position> close{{v({0.5}), v({0.5})}, {v({0.503}), v({0.502})}};
    CHECK_THROWS(dirac_limit_heat(close, 1e-3, 64));
    std::vector<Position> pos{{v({0.8}), v({0.3})}, {v({0.2}), v({0.9})}};
    CHECK_THROWS(dirac_limit_heat(pos, 1e-3, 64, 0.4));
    CHECK_THROWS(dirac_limit_heat(pos, 0.0, 64));
    CHECK_NOTHROW(dirac_limit_heat(pos, 1e-3, 64, 0.3));
}

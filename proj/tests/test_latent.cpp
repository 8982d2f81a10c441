#include <cmath>
#include <numbers>

#include "doctest.h"
#include "idpg/latent.hpp"
#include "oracles.hpp"

using namespace idpg;

namespace {

Vec v(std::initializer_list<double> xs) {
    Vec out(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

IntensityModel uniform_d1() {
    return IntensityModel::product(MarginalIntensity::uniform_ball(1, 2.0), MarginalIntensity::uniform_ball(1, 3.0));
}

Vec random_ball_point(SeededRng& rng, int d) {
    return MarginalIntensity::uniform_ball(d, 1.0).sample(rng);
}

}  // namespace

TEST_CASE("evaluate_intensity on the uniform product") {
    auto m = uniform_d1();
    CHECK(evaluate_intensity(m, {v({0.5}), v({0.5})}) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(evaluate_intensity(m, {v({1.5}), v({0.5})}) == 0.0);
    CHECK_THROWS(evaluate_intensity(m, {v({0.5, 0.1}), v({0.5})}));
}

TEST_CASE("mixture of well separated components evaluates like its dominant component") {
    TruncGaussianSpec a{v({0.2}), v({10000.0}), 1.0};
    TruncGaussianSpec b{v({0.8}), v({10000.0}), 1.0};
    auto first = IntensityModel::product(MarginalIntensity::trunc_gaussian(a), MarginalIntensity::trunc_gaussian(a));
    auto mix = IntensityModel::mixture({{"a", MarginalIntensity::trunc_gaussian(a), MarginalIntensity::trunc_gaussian(a)},
                                        {"b", MarginalIntensity::trunc_gaussian(b), MarginalIntensity::trunc_gaussian(b)}});
    Position p{v({0.2}), v({0.2})};
    double single = evaluate_intensity(first, p);
    CHECK(std::fabs(evaluate_intensity(mix, p) - single) <= 1e-9 * single);
}

TEST_CASE("kernel affinity") {
    CHECK(kernel_affinity(v({1, 0}), v({0, 1})) == 0.0);
    CHECK(kernel_affinity(v({0.8}), v({0.9})) == doctest::Approx(0.72));
    CHECK_THROWS(kernel_affinity(v({0.8}), v({0.9, 0.1})));
    SeededRng rng(1, 2);
    int bad = 0;
    for (int i = 0; i < 1'000'000; ++i) {
        double k = kernel_affinity(random_ball_point(rng, 4), random_ball_point(rng, 4));
        if (k < 0.0 || k > 1.0) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("Lipschitz bound of the kernel in the giving coordinate") {
    SeededRng rng(7, 0);
    int violations = 0;
    for (int i = 0; i < 200000; ++i) {
        Vec g1 = random_ball_point(rng, 3), g2 = random_ball_point(rng, 3), r = random_ball_point(rng, 3);
        double lhs = std::fabs(kernel_affinity(g1, r) - kernel_affinity(g2, r));
        if (lhs > r.norm() * (g1 - g2).norm() + 1e-15) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("isotropic RMS kernel change at d=4") {
    const int d = 4;
    Vec g = v({0.3, 0.4, 0.2, 0.1});
    Vec r = Vec::Constant(d, 0.4);
    const double step = 0.05;  // keeps r + dr inside the interior for every direction
    SeededRng rng(11, 0);
    double sum_sq = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        Vec dir(d);
        for (int k = 0; k < d; ++k) dir[k] = rng.normal();
        Vec dr = step * dir / dir.norm();
        REQUIRE(in_latent_ball(r + dr));
        double dk = kernel_affinity(g, r + dr) - kernel_affinity(g, r);
        sum_sq += dk * dk;
    }
    double rms = std::sqrt(sum_sq / n);
    double expected = g.norm() * step / std::sqrt(static_cast<double>(d));
    CHECK(std::fabs(rms - expected) < 0.02 * expected);
}

TEST_CASE("moments of the uniform d=1 product are the polynomial integrals") {
    auto s = moments(uniform_d1());
    CHECK(s.is_product);
    CHECK(s.c_G == 2.0);
    CHECK(s.c_R == 3.0);
    CHECK(s.lambda == 6.0);
    CHECK(s.mu_G_norm[0] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(s.mu_R_norm[0] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(s.sigma_G(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(s.sigma_R(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(s.gram_A(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
    CHECK(s.gram_B(0, 0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(s.mu_G[0] == doctest::Approx(1.0));
    CHECK(s.mu_R[0] == doctest::Approx(1.5));
}

TEST_CASE("truncated Gaussian moments against brute-force oracles") {
    SUBCASE("centred Gaussian has the centre as its mean") {
        auto g = MarginalIntensity::trunc_gaussian({v({0.5}), v({50.0}), 1.0});
        auto s = moments(IntensityModel::product(g, g));
        CHECK(s.mu_G_norm[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("clipped Gaussian: mean and Gram matrix") {
        const double mu = 0.9, kappa = 100.0, c = 2.0;
        auto g = MarginalIntensity::trunc_gaussian({v({mu}), v({kappa}), c});
        auto s = moments(IntensityModel::product(g, g));
        CHECK(s.mu_G_norm[0] == doctest::Approx(oracle::trunc_mean(mu, 1.0 / std::sqrt(kappa))).epsilon(1e-10));
        auto phi = [&](double x) { return std::exp(-0.5 * kappa * (x - mu) * (x - mu)); };
        double z = oracle::midpoint(phi, 0, 1, 2'000'000);
        double gram = c * c / (z * z) * oracle::midpoint([&](double x) { return x * x * phi(x) * phi(x); }, 0, 1, 2'000'000);
        CHECK(s.gram_A(0, 0) == doctest::Approx(gram).epsilon(1e-9));
        CHECK(g.density(Vec::Constant(1, 0.7)) == doctest::Approx(c * phi(0.7) / z).epsilon(1e-10));
    }
}

TEST_CASE("uniform d=2 ball moments converge to the analytic values") {
    // E[x^2] for the uniform quarter disc is 1/4; E[x] = 4/(3 pi).
    auto u = MarginalIntensity::uniform_ball(2, 1.0);
    auto s = moments(IntensityModel::product(u, u));
    CHECK(s.mu_G_norm[0] == doctest::Approx(4.0 / (3.0 * std::numbers::pi)).epsilon(2e-3));
    CHECK(s.sigma_G(0, 0) == doctest::Approx(0.25).epsilon(2e-3));
    CHECK(s.sigma_G(0, 1) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(2e-3));
}

TEST_CASE("Monte Carlo and grid quadrature agree within 3 standard errors") {
    const std::size_t n = 200'000;
    for (int d : {1, 2}) {
        CAPTURE(d);
        auto g = MarginalIntensity::trunc_gaussian({Vec::Constant(d, 0.4), Vec::Constant(d, 20.0), 1.5});
        auto r = MarginalIntensity::uniform_ball(d, 2.0);
        auto model = IntensityModel::product(g, r);
        auto grid = moments(model, QuadratureSpec::grid());
        auto mc = moments(model, QuadratureSpec::monte_carlo(n, 99));
        for (int k = 0; k < d; ++k) {
            double se_g = std::sqrt((grid.sigma_G(k, k) - grid.mu_G_norm[k] * grid.mu_G_norm[k]) / n);
            double se_r = std::sqrt((grid.sigma_R(k, k) - grid.mu_R_norm[k] * grid.mu_R_norm[k]) / n);
            CHECK(std::fabs(mc.mu_G_norm[k] - grid.mu_G_norm[k]) < 3 * se_g);
            CHECK(std::fabs(mc.mu_R_norm[k] - grid.mu_R_norm[k]) < 3 * se_r);
        }
    }
}

TEST_CASE("moments determinism and the Monte Carlo seed requirement") {
    std::vector<MixtureComponent> comps;
    comps.push_back({"a", MarginalIntensity::trunc_gaussian({v({0.7, 0.3, 0.2, 0.1}), Vec::Constant(4, 40.0), 3.0}),
                     MarginalIntensity::trunc_gaussian({v({0.2, 0.6, 0.3, 0.1}), Vec::Constant(4, 40.0), 3.0})});
    comps.push_back({"b", MarginalIntensity::trunc_gaussian({v({0.1, 0.2, 0.6, 0.4}), Vec::Constant(4, 40.0), 2.0}),
                     MarginalIntensity::trunc_gaussian({v({0.5, 0.1, 0.2, 0.6}), Vec::Constant(4, 40.0), 3.0})});
    auto model = IntensityModel::mixture(comps);
    auto a = moments(model, QuadratureSpec::monte_carlo(100'000, 5));
    auto b = moments(model, QuadratureSpec::monte_carlo(100'000, 5));
    CHECK(a.sigma_G == b.sigma_G);
    CHECK(a.sigma_R == b.sigma_R);
    CHECK_FALSE(a.is_product);
    CHECK_THROWS(moments(model, QuadratureSpec::monte_carlo(10, std::nullopt)));
    // Ten-fold larger sample agrees within 4 combined standard errors (entries are bounded by 1).
    auto big = moments(model, QuadratureSpec::monte_carlo(1'000'000, 6));
    CHECK((a.sigma_G - big.sigma_G).cwiseAbs().maxCoeff() < 4.0 * std::sqrt(0.25 / 100'000 + 0.25 / 1'000'000));
}

TEST_CASE("tabulated marginal integrates exactly as a piecewise-constant density") {
    GridField f = GridField::on_ball(1, 4);
    f.values = {1.0, 2.0, 3.0, 4.0};
    auto m = MarginalIntensity::tabulated(f);
    CHECK(m.mass() == doctest::Approx(2.5));
    auto s = moments(IntensityModel::product(m, m));
    // int x rho = sum v_i (b^2 - a^2)/2 over cells
    double first = (1 * (0.0625 - 0) + 2 * (0.25 - 0.0625) + 3 * (0.5625 - 0.25) + 4 * (1 - 0.5625)) / 2;
    CHECK(s.mu_G_norm[0] == doctest::Approx(first / 2.5).epsilon(1e-14));
    GridField bad = GridField::on_ball(2, 4);
    bad.values.back() = 1.0;  // corner cell lies outside the ball
    CHECK_THROWS(MarginalIntensity::tabulated(bad));
}

TEST_CASE("position draws stay in the ball and are reproducible") {
    auto g = MarginalIntensity::trunc_gaussian({v({0.9, 0.4}), v({30.0, 30.0}), 1.0});
    SeededRng a(3, 4), b(3, 4);
    for (int i = 0; i < 10000; ++i) {
        Vec x = g.sample(a);
        CHECK(in_latent_ball(x));
        CHECK(x == g.sample(b));
    }
}

#include "idpg/expectations.hpp"

#include <cmath>
#include <stdexcept>

namespace idpg {

EdgeRule EdgeRule::lifetime(double eta, double window, bool include_self_pairs) {
    if (!(eta > 0.0) || !(window > 0.0)) throw std::invalid_argument("lifetime parameters must be positive");
    EdgeRule r;
    r.kind = Kind::Lifetime;
    r.eta = eta;
    r.window = window;
    r.include_self_pairs = include_self_pairs;
    return r;
}

double overlap_probability(double eta, double window) {
    if (!(eta > 0.0) || !(window > 0.0)) throw std::invalid_argument("eta and window must be positive");
    double u = window / eta;
    if (u < 1e-4) return 1.0 - u / 3.0 + u * u / 12.0;
    if (u < 1.0) {
        // (2/u^2)(u - 1 + e^{-u}) = 2 sum_{k>=2} (-u)^{k-2} / k!, summed to avoid cancellation.
        double term = 0.5, sum = 0.0;
        for (int k = 2; k < 40 && std::fabs(term) > 1e-18; ++k) {
            sum += term;
            term *= -u / (k + 1);
        }
        return 2.0 * sum;
    }
    return 2.0 / (u * u) * (u - 1.0 + std::exp(-u));
}

double expected_edges(const MomentSummary& s, const EdgeRule& rule) {
    if (!s.is_product) throw std::invalid_argument("expected_edges needs a product model; use expected_guild_edges for mixtures");
    const double lam = s.lambda;
    const double x = s.mu_G_norm.dot(s.mu_R_norm);
    switch (rule.kind) {
        case EdgeRule::Kind::PerennialDistinct: return lam * lam * x;
        case EdgeRule::Kind::PerennialWithLoops: return (lam * lam + lam) * x;
        case EdgeRule::Kind::Ephemeral: return 2.0 * lam * x;
        case EdgeRule::Kind::AsymmetricEphemeral: return 0.5 * lam * x;
        case EdgeRule::Kind::Lifetime: {
            double p = overlap_probability(rule.eta, rule.window);
            // Self-pairs overlap with probability one, so they add Lambda x, not Lambda p x.
            return (lam * lam * p + (rule.include_self_pairs ? lam : 0.0)) * x;
        }
    }
    return 0.0;
}

double edge_ratio(double lambda, RatioConvention convention) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    return convention == RatioConvention::Distinct ? lambda / 2.0 : (lambda + 1.0) / 2.0;
}

}  // namespace idpg

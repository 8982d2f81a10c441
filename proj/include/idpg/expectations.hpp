#pragma once

#include "idpg/latent.hpp"

namespace idpg {

struct EdgeRule {
    enum class Kind { PerennialDistinct, PerennialWithLoops, Ephemeral, Lifetime, AsymmetricEphemeral };
    Kind kind = Kind::PerennialDistinct;
    double eta = 0.0;
    double window = 0.0;
    /// Lifetime only: whether self-pairs (i, i) get an edge trial, matching sample_lifetime.
    bool include_self_pairs = true;

    static EdgeRule lifetime(double eta, double window, bool include_self_pairs = true);
};

/// Expected edge count of a product model under the rule.
///   PerennialDistinct   Lambda^2 x
///   PerennialWithLoops  (Lambda^2 + Lambda) x
///   Ephemeral           2 Lambda x
///   AsymmetricEphemeral (Lambda / 2) x
///   Lifetime            (Lambda^2 p + Lambda) x, or Lambda^2 p x without self-pairs
/// where x = mu_G_norm . mu_R_norm and p = overlap_probability(eta, window).
double expected_edges(const MomentSummary& summary, const EdgeRule& rule);

/// Probability that two uniform births on [0, W] with Exp(eta) lifetimes overlap.
double overlap_probability(double eta, double window);

enum class RatioConvention { Distinct, WithLoops };
double edge_ratio(double lambda, RatioConvention convention);

}  // namespace idpg

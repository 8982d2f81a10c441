#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "idpg/latent.hpp"

namespace idpg {

struct GuildSpec {
    std::string label;
    TruncGaussianSpec green;
    TruncGaussianSpec red;
    double w_S = 1.0;  // source weight
    double w_T = 1.0;  // target weight

    double gamma() const { return green.mass * red.mass; }
};

struct GuildEdgeMatrix {
    std::vector<std::string> labels;
    Mat expected;  // Lambda^2 pi_i pi_j affinity_ij
    Mat affinity;  // centroid dot products mean_g_i . mean_r_j
    Mat effective_affinity;  // same with the truncation-aware normalised means
    Vec abundance;  // pi
};

/// Expected edges between guilds from centroid affinities. effective_affinity gives the
/// exact per-pair edge rate of the truncated components.
GuildEdgeMatrix expected_guild_edges(const std::vector<GuildSpec>& guilds, double lambda);

struct CentroidFit {
    std::vector<Vec> green;
    std::vector<Vec> red;
    double rmse = 0.0;
    bool converged = false;  // rmse <= 0.05
    int restart = 0;         // index of the winning restart
};

struct FitOptions {
    int iterations = 5000;
    int restarts = 10;
    double step = 0.05;
    double tolerance = 0.05;
};

/// Projected gradient descent on sum_ij (K*_ij - g_i . r_j)^2 over centroids in B^d_+.
/// Restart k draws its starting point from stream (seed, k); the best restart wins
/// (lowest RMSE, ties by index).
CentroidFit fit_guild_centroids(const Mat& target, int d, std::uint64_t seed, const FitOptions& options = {});

/// Mixture of truncated Gaussians at the fitted centroids; masses from the guilds.
IntensityModel build_mixture(const std::vector<GuildSpec>& guilds, const CentroidFit& fit, const Vec& kappa);

/// Mixture with each guild's own means, precisions and masses.
IntensityModel build_mixture(const std::vector<GuildSpec>& guilds);

struct AsymmetricIntensity {
    IntensityModel source;  // sum_m w_S,m rho_m
    IntensityModel target;  // sum_m w_T,m rho_m
    double normalization;   // 2 M_S M_T / Lambda
    double lambda;

    /// rho_E(s, t) = rho_S(s) rho_T(t) / normalization.
    double edge_intensity(const Position& s, const Position& t) const;
};

AsymmetricIntensity asymmetric_edge_intensity(const std::vector<GuildSpec>& guilds);

struct AbsorbedPositions {
    std::vector<Position> positions;   // empty when rejected
    std::vector<std::size_t> violations;  // indices leaving B^d_+

    bool admissible() const { return violations.empty(); }
};

/// g~ = w_S(g) g, r~ = w_T(r) r, accepted only if every transformed vector stays in B^d_+.
AbsorbedPositions absorb_coordinate_weights(const std::function<double(const Vec&)>& w_S,
                                            const std::function<double(const Vec&)>& w_T,
                                            const std::vector<Position>& positions);

}  // namespace idpg

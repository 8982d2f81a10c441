#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "idpg/grid.hpp"
#include "idpg/latent.hpp"

namespace idpg {

/// h(s, t) = K(s, t) rho(s) rho(t).
double raw_heat_density(const IntensityModel& model, const Position& s, const Position& t);

/// H(A, B) for boxes over Omega given as 2d coordinates (g then r).
/// Separable in the kernel: H(A, B) = (int_A g rho) . (int_B r rho).
double raw_heat_map(const IntensityModel& model, const BoxRegion& a, const BoxRegion& b,
                    const QuadratureSpec& scheme = {});

/// Bound heat (g.r) rho_G(g) rho_R(r) at cell centres of a 2d-axis grid over (g, r).
GridField bound_heat_grid(const IntensityModel& model, int resolution);

enum class BiteCombination { GtoR, GtoG, RtoR, RtoG };

/// Restricted moments of one marginal over a bite: c(a) and mu(a) = int_a x rho.
struct BiteMoments {
    std::optional<double> mass;
    std::optional<Vec> moment;

    static BiteMoments from(const RegionIntegrals& r) { return {r.mass, r.first}; }
};

/// Heat between bites. Source and target refer to the bite of the first and
/// second role in the combination name:
///   GtoR  Lambda (mu_G(a) . mu_R(b))           needs source.moment, target.moment
///   GtoG  c_R (mu_G(a) . mu_R) c_G(a')         needs source.moment, target.mass
///   RtoR  c_G (mu_G . mu_R(b')) c_R(b)         needs source.mass,   target.moment
///   RtoG  (mu_G . mu_R) c_R(b) c_G(a)          needs source.mass,   target.mass
double bite_heat(const MomentSummary& summary, const BiteMoments& source, const BiteMoments& target,
                 BiteCombination combination);

/// h(g_s, r_t | r_s, g_t) on a resolution^2 grid over (g_s, r_t); d = 1 models only.
GridField raw_heat_slice(const IntensityModel& model, double fixed_r_s, double fixed_g_t, int resolution);

struct RecoveredIntensity {
    double value;
    bool recoverable;
};

/// rho(s) = sqrt(h(s, s) / K(s, s)); points with K(s, s) <= 1e-8 are flagged unrecoverable.
std::function<RecoveredIntensity(const Position&)> recover_intensity_from_heat(
    std::function<double(const Position&)> diag_heat, int model_dim);

/// Heat between boxes around the components of rho_eps = sum_i N(s_i, eps^2) (unit
/// mass each, truncated to the domain). Entries approach g_i . r_j as eps -> 0.
/// The box half-width defaults to half the smallest Chebyshev separation of the
/// positions in Omega (capped at 0.25); it must be at least 3 eps.
Mat dirac_limit_heat(const std::vector<Position>& positions, double epsilon, int resolution,
                     std::optional<double> box_halfwidth = std::nullopt);

}  // namespace idpg

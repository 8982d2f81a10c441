#pragma once

#include <vector>

#include "idpg/grid.hpp"
#include "idpg/latent.hpp"

namespace idpg {

struct BoundaryCondition {
    enum class Kind { Absorbing, Reflecting, Robin };
    Kind kind = Kind::Reflecting;
    double alpha = 0.0;  // Robin: alpha rho + beta d rho / dn = 0
    double beta = 0.0;

    static BoundaryCondition absorbing() { return {Kind::Absorbing, 0.0, 0.0}; }
    static BoundaryCondition reflecting() { return {Kind::Reflecting, 0.0, 0.0}; }
    static BoundaryCondition robin(double alpha, double beta);
};

struct RegimeSpec {
    enum class Kind { Diffusion, Advection, ReactionDiffusion, PursuitEvasion };
    Kind kind = Kind::Diffusion;
    double nu = 0.0;  // diffusion coefficient; also adds diffusion to the other regimes when > 0
    Vec velocity;     // Advection
    double growth_rate = 0.0;  // logistic r
    double capacity = 1.0;     // logistic K_cap
    double alpha = 0.0, beta = 0.0, gamma = 0.0;  // PursuitEvasion
    Vec x0;

    static RegimeSpec diffusion(double nu);
    static RegimeSpec advection(Vec velocity);
    static RegimeSpec reaction_diffusion(double nu, double rate, double capacity);
    static RegimeSpec pursuit_evasion(double alpha, double beta, double gamma, Vec x0);
};

struct PdeState {
    GridField green;
    GridField red;
    double time = 0.0;
    BoundaryCondition bc;
    RegimeSpec regime;
    double clamped_mass = 0.0;  // mass removed by clamping negative values

    /// Tabulate the marginal densities of a product model at cell centres (d in {1, 2}).
    static PdeState from_model(const IntensityModel& model, int points_per_axis, BoundaryCondition bc,
                               RegimeSpec regime);
    int dim() const { return green.dim; }
    void validate() const;
};

/// Mass-normalised first moment over masked cells.
Vec centroid(const GridField& field);
/// int x rho over masked cells.
Vec first_moment(const GridField& field);

/// Largest explicit-Euler step allowed for the state: diffusion h^2 / (4 nu d), advection
/// h / (2 max_x |v(x)|_1), logistic reaction 1 / r. Pursuit velocities use a bound valid for
/// any centroid position, so one dt serves a whole evolution.
double stable_dt(const PdeState& state);

/// One explicit Euler step in conservative flux form. Throws if dt exceeds stable_dt.
PdeState pde_step(const PdeState& state, double dt);

struct Snapshot {
    double time = 0.0;
    double mass_G = 0.0, mass_R = 0.0, lambda = 0.0;
    Vec centroid_G, centroid_R;
    double bound_heat = 0.0;  // mu_G . mu_R
    double expected_perennial_edges = 0.0;
    double expected_ephemeral_edges = 0.0;
    double ratio = 0.0;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
};

Snapshot snapshot_of(const PdeState& state);

/// Product model whose marginals are the current fields.
IntensityModel model_of(const PdeState& state);

/// Advance state to t_end; snapshots at the start, every snapshot_every steps, and at t_end.
/// The final step is shortened to land on t_end.
Trajectory evolve(PdeState& state, double t_end, double dt, int snapshot_every);

/// kappa(t) = kappa0 / (1 + 2 nu kappa0 t).
double gaussian_diffusion_check(double kappa0, double nu, double t);

}  // namespace idpg

#include "idpg/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "idpg/expectations.hpp"

namespace idpg {

BoundaryCondition BoundaryCondition::robin(double alpha, double beta) {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || alpha + beta == 0.0)
        throw std::invalid_argument("Robin coefficients must be non-negative and not both zero");
    return {Kind::Robin, alpha, beta};
}

RegimeSpec RegimeSpec::diffusion(double nu) {
    if (!(nu >= 0.0)) throw std::invalid_argument("nu must be non-negative");
    RegimeSpec r;
    r.kind = Kind::Diffusion;
    r.nu = nu;
    return r;
}

RegimeSpec RegimeSpec::advection(Vec velocity) {
    if (!velocity.allFinite()) throw std::invalid_argument("velocity must be finite");
    RegimeSpec r;
    r.kind = Kind::Advection;
    r.velocity = std::move(velocity);
    return r;
}

RegimeSpec RegimeSpec::reaction_diffusion(double nu, double rate, double capacity) {
    if (!(nu >= 0.0)) throw std::invalid_argument("nu must be non-negative");
    if (!(rate >= 0.0) || !(capacity > 0.0)) throw std::invalid_argument("logistic rate must be >= 0 and capacity > 0");
    RegimeSpec r;
    r.kind = Kind::ReactionDiffusion;
    r.nu = nu;
    r.growth_rate = rate;
    r.capacity = capacity;
    return r;
}

RegimeSpec RegimeSpec::pursuit_evasion(double alpha, double beta, double gamma, Vec x0) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("pursuit-evasion alpha, beta, gamma must be positive");
    if ((x0.array() < 0.0).any() || (x0.array() > 1.0).any()) throw std::invalid_argument("x0 must lie in the domain");
    RegimeSpec r;
    r.kind = Kind::PursuitEvasion;
    r.alpha = alpha;
    r.beta = beta;
    r.gamma = gamma;
    r.x0 = std::move(x0);
    return r;
}

PdeState PdeState::from_model(const IntensityModel& model, int points_per_axis, BoundaryCondition bc,
                              RegimeSpec regime) {
    if (!model.is_product() || model.kind() == IntensityModel::Kind::Tabulated)
        throw std::invalid_argument("PDE evolution needs a product model");
    const int d = model.dim();
    if (d < 1 || d > 2) throw std::invalid_argument("PDE grids are limited to d in {1, 2}");
    const auto& comp = model.components().front();
    PdeState s;
    s.green = GridField::on_ball(d, points_per_axis);
    s.red = s.green;
    for (std::size_t i = 0; i < s.green.size(); ++i) {
        if (!s.green.mask[i]) continue;
        Vec c = s.green.center(i);
        s.green.values[i] = comp.green.density(c);
        s.red.values[i] = comp.red.density(c);
    }
    s.bc = bc;
    s.regime = std::move(regime);
    s.validate();
    return s;
}

void PdeState::validate() const {
    green.validate();
    red.validate();
    if (!green.same_layout(red)) throw std::invalid_argument("green and red grids differ");
    if (!(time >= 0.0)) throw std::invalid_argument("negative time");
    const int d = green.dim;
    if (regime.kind == RegimeSpec::Kind::Advection && regime.velocity.size() != d)
        throw std::invalid_argument("velocity dimension mismatch");
    if (regime.kind == RegimeSpec::Kind::PursuitEvasion && regime.x0.size() != d)
        throw std::invalid_argument("x0 dimension mismatch");
}

Vec first_moment(const GridField& field) {
    Vec m = Vec::Zero(field.dim);
    for (std::size_t i = 0; i < field.size(); ++i)
        if (field.mask[i]) m += field.values[i] * field.center(i);
    return m * field.cell_volume();
}

Vec centroid(const GridField& field) {
    double mass = field.integral();
    if (!(mass > 0.0)) throw std::invalid_argument("centroid of a zero-mass field");
    return first_moment(field) / mass;
}

namespace {

double max_abs_velocity_l1(const PdeState& s) {
    const RegimeSpec& r = s.regime;
    if (r.kind == RegimeSpec::Kind::Advection) return r.velocity.cwiseAbs().sum();
    if (r.kind == RegimeSpec::Kind::PursuitEvasion) {
        // |mu - x0| and |x - x0| are both bounded per axis by max(x0, 1 - x0).
        double total = 0.0;
        for (int a = 0; a < r.x0.size(); ++a) total += (std::max(r.alpha, r.beta) + r.gamma) * std::max(r.x0[a], 1.0 - r.x0[a]);
        return total;
    }
    return 0.0;
}

double ghost_value(const BoundaryCondition& bc, double rho, double h) {
    switch (bc.kind) {
        case BoundaryCondition::Kind::Reflecting: return rho;
        case BoundaryCondition::Kind::Absorbing: return 0.0;
        case BoundaryCondition::Kind::Robin: return rho * (bc.beta / h) / (bc.alpha + bc.beta / h);
    }
    return rho;
}

// Velocity component along `axis` at a face; the face has coordinate `face` on that axis
// and the cell-centre coordinates elsewhere.
struct VelocityField {
    enum class Kind { None, Constant, Affine } kind = Kind::None;
    Vec constant;      // Constant: v
    Vec offset;        // Affine: v(x) = offset - gamma (x - x0)
    double gamma = 0.0;
    Vec x0;

    double component(int axis, double face) const {
        switch (kind) {
            case Kind::None: return 0.0;
            case Kind::Constant: return constant[axis];
            case Kind::Affine: return offset[axis] - gamma * (face - x0[axis]);
        }
        return 0.0;
    }
};

GridField advance(const GridField& f, const PdeState& s, const VelocityField& vel, double dt, double& clamped) {
    const int d = f.dim;
    const int n = f.points_per_axis;
    const double h = f.spacing;
    const double nu = s.regime.nu;
    const bool logistic = s.regime.kind == RegimeSpec::Kind::ReactionDiffusion && s.regime.growth_rate > 0.0;
    GridField out = f;
    std::vector<int> ix(d);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.mask[i]) continue;
        ix = f.unravel(i);
        const double rho = f.values[i];
        double outflow = 0.0;
        for (int a = 0; a < d; ++a) {
            for (int dir = -1; dir <= 1; dir += 2) {
                int k = ix[a] + dir;
                double face = (ix[a] + (dir > 0 ? 1 : 0)) * h;
                double u = dir * vel.component(a, face);  // outward normal velocity
                double up = std::max(u, 0.0), um = std::max(-u, 0.0);
                std::size_t j = f.size();
                if (k >= 0 && k < n) {
                    std::vector<int> jx = ix;
                    jx[a] = k;
                    j = f.ravel(jx);
                    if (!f.mask[j]) j = f.size();
                }
                if (j < f.size()) {
                    const double other = f.values[j];
                    outflow += nu * (rho - other) / h + (up * rho - um * other);
                } else {
                    const double ghost = ghost_value(s.bc, rho, h);
                    outflow += nu * (rho - ghost) / h + up * (rho - ghost);
                }
            }
        }
        double rate = -outflow / h;
        if (logistic) rate += s.regime.growth_rate * rho * (1.0 - rho / s.regime.capacity);
        double next = rho + dt * rate;
        if (next < 0.0) {
            clamped += -next * f.cell_volume();
            next = 0.0;
        }
        out.values[i] = next;
    }
    return out;
}

}  // namespace

double stable_dt(const PdeState& s) {
    const double h = s.green.spacing;
    const int d = s.dim();
    double dt = std::numeric_limits<double>::infinity();
    if (s.regime.nu > 0.0) dt = std::min(dt, h * h / (4.0 * s.regime.nu * d));
    double vmax = max_abs_velocity_l1(s);
    if (vmax > 0.0) dt = std::min(dt, h / (2.0 * vmax));
    if (s.regime.kind == RegimeSpec::Kind::ReactionDiffusion && s.regime.growth_rate > 0.0)
        dt = std::min(dt, 1.0 / s.regime.growth_rate);
    return dt;
}

PdeState pde_step(const PdeState& state, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    double bound = stable_dt(state);
    if (dt > bound * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "dt = " << dt << " exceeds the stability bound " << bound
            << " (diffusion h^2/(4 nu d), advection h/(2 max|v|_1), reaction 1/r)";
        throw std::invalid_argument(msg.str());
    }
    const RegimeSpec& r = state.regime;
    VelocityField vg, vr;
    if (r.kind == RegimeSpec::Kind::Advection) {
        vg.kind = vr.kind = VelocityField::Kind::Constant;
        vg.constant = vr.constant = r.velocity;
    } else if (r.kind == RegimeSpec::Kind::PursuitEvasion) {
        Vec cg = centroid(state.green), cr = centroid(state.red);
        vg.kind = vr.kind = VelocityField::Kind::Affine;
        vg.gamma = vr.gamma = r.gamma;
        vg.x0 = vr.x0 = r.x0;
        vg.offset = -r.alpha * (cr - r.x0);
        vr.offset = r.beta * (cg - r.x0);
    }
    PdeState next = state;
    next.green = advance(state.green, state, vg, dt, next.clamped_mass);
    next.red = advance(state.red, state, vr, dt, next.clamped_mass);
    next.time = state.time + dt;
    return next;
}

Snapshot snapshot_of(const PdeState& state) {
    Snapshot s;
    s.time = state.time;
    s.mass_G = state.green.integral();
    s.mass_R = state.red.integral();
    s.lambda = s.mass_G * s.mass_R;
    Vec mu_g = first_moment(state.green), mu_r = first_moment(state.red);
    s.bound_heat = mu_g.dot(mu_r);
    const int d = state.dim();
    if (!(s.mass_G > 0.0) || !(s.mass_R > 0.0)) {
        s.centroid_G = s.centroid_R = Vec::Constant(d, std::numeric_limits<double>::quiet_NaN());
        s.ratio = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    MomentSummary m;
    m.is_product = true;
    m.dim = d;
    m.c_G = s.mass_G;
    m.c_R = s.mass_R;
    m.lambda = s.lambda;
    m.mu_G = mu_g;
    m.mu_R = mu_r;
    m.mu_G_norm = s.centroid_G = mu_g / s.mass_G;
    m.mu_R_norm = s.centroid_R = mu_r / s.mass_R;
    EdgeRule per, eph;
    per.kind = EdgeRule::Kind::PerennialDistinct;
    eph.kind = EdgeRule::Kind::Ephemeral;
    s.expected_perennial_edges = expected_edges(m, per);
    s.expected_ephemeral_edges = expected_edges(m, eph);
    s.ratio = s.expected_perennial_edges / s.expected_ephemeral_edges;
    return s;
}

IntensityModel model_of(const PdeState& state) {
    return IntensityModel::product(MarginalIntensity::tabulated(state.green), MarginalIntensity::tabulated(state.red));
}

Trajectory evolve(PdeState& state, double t_end, double dt, int snapshot_every) {
    if (!(t_end > state.time)) throw std::invalid_argument("t_end must exceed the current time");
    if (snapshot_every < 1) throw std::invalid_argument("snapshot_every must be positive");
    Trajectory traj;
    traj.snapshots.push_back(snapshot_of(state));
    long step = 0;
    const double tol = 1e-12 * std::max(1.0, t_end);
    while (state.time < t_end - tol) {
        double h = std::min(dt, t_end - state.time);
        state = pde_step(state, h);
        ++step;
        bool last = state.time >= t_end - tol;
        if (last) state.time = t_end;
        if (last || step % snapshot_every == 0) traj.snapshots.push_back(snapshot_of(state));
    }
    return traj;
}

double gaussian_diffusion_check(double kappa0, double nu, double t) {
    if (!(kappa0 > 0.0) || !(nu >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("arguments must be positive");
    return kappa0 / (1.0 + 2.0 * nu * kappa0 * t);
}

}  // namespace idpg

#include "idpg/heat.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace idpg {

double raw_heat_density(const IntensityModel& model, const Position& s, const Position& t) {
    const int d = model.dim();
    if (s.g.size() != d || s.r.size() != d || t.g.size() != d || t.r.size() != d)
        throw std::invalid_argument("position dimension does not match the model");
    double rs = evaluate_intensity(model, s);
    if (rs == 0.0) return 0.0;
    return kernel_affinity(s.g, t.r) * rs * evaluate_intensity(model, t);
}

double raw_heat_map(const IntensityModel& model, const BoxRegion& a, const BoxRegion& b,
                    const QuadratureSpec& scheme) {
    if (a.dim() != 2 * model.dim() || b.dim() != 2 * model.dim())
        throw std::invalid_argument("Omega box dimension mismatch");
    if (a.empty() || b.empty()) return 0.0;
    OmegaIntegrals ia = integrate_omega(model, a, scheme);
    OmegaIntegrals ib = integrate_omega(model, b, scheme);
    return ia.g_moment.dot(ib.r_moment);
}

GridField bound_heat_grid(const IntensityModel& model, int resolution) {
    if (!model.is_product() || model.kind() == IntensityModel::Kind::Tabulated)
        throw std::invalid_argument("bound heat needs a product model; use raw_heat_slice for non-product joints");
    const int d = model.dim();
    if (d > 2) throw std::invalid_argument("dense bound-heat grids are limited to d <= 2");
    if (resolution < 1) throw std::invalid_argument("resolution must be positive");
    const auto& comp = model.components().front();
    GridField out = GridField::on_box(2 * d, resolution);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        Vec c = out.center(idx);
        Vec g = c.head(d), r = c.tail(d);
        if (!in_latent_ball(g, 0.0) || !in_latent_ball(r, 0.0)) {
            out.mask[idx] = 0;
            out.values[idx] = 0.0;
            continue;
        }
        out.values[idx] = kernel_affinity(g, r) * comp.green.density(g) * comp.red.density(r);
    }
    return out;
}

namespace {

double need_mass(const BiteMoments& m, const char* slot) {
    if (!m.mass) throw std::invalid_argument(std::string("bite heat needs the restricted mass of the ") + slot);
    return *m.mass;
}

const Vec& need_moment(const BiteMoments& m, int d, const char* slot) {
    if (!m.moment) throw std::invalid_argument(std::string("bite heat needs the restricted mean of the ") + slot);
    if (m.moment->size() != d) throw std::invalid_argument("restricted mean has the wrong dimension");
    return *m.moment;
}

}  // namespace

double bite_heat(const MomentSummary& s, const BiteMoments& source, const BiteMoments& target,
                 BiteCombination combination) {
    if (!s.is_product) throw std::invalid_argument("bite heat needs a product model");
    const int d = s.dim;
    switch (combination) {
        case BiteCombination::GtoR:
            return s.lambda * need_moment(source, d, "source").dot(need_moment(target, d, "target"));
        case BiteCombination::GtoG:
            return s.c_R * need_moment(source, d, "source").dot(s.mu_R) * need_mass(target, "target");
        case BiteCombination::RtoR:
            return s.c_G * s.mu_G.dot(need_moment(target, d, "target")) * need_mass(source, "source");
        case BiteCombination::RtoG:
            return s.mu_G.dot(s.mu_R) * need_mass(source, "source") * need_mass(target, "target");
    }
    return 0.0;
}

GridField raw_heat_slice(const IntensityModel& model, double fixed_r_s, double fixed_g_t, int resolution) {
    if (model.dim() != 1) throw std::invalid_argument("raw heat slices are defined for d = 1 models");
    if (!(fixed_r_s >= 0.0 && fixed_r_s <= 1.0) || !(fixed_g_t >= 0.0 && fixed_g_t <= 1.0))
        throw std::invalid_argument("fixed slice coordinates must lie in [0, 1]");
    if (resolution < 1) throw std::invalid_argument("resolution must be positive");
    GridField out = GridField::on_box(2, resolution);
    Position s{Vec::Zero(1), Vec::Constant(1, fixed_r_s)};
    Position t{Vec::Constant(1, fixed_g_t), Vec::Zero(1)};
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        Vec c = out.center(idx);
        s.g[0] = c[0];
        t.r[0] = c[1];
        out.values[idx] = raw_heat_density(model, s, t);
    }
    return out;
}

std::function<RecoveredIntensity(const Position&)> recover_intensity_from_heat(
    std::function<double(const Position&)> diag_heat, int model_dim) {
    if (!diag_heat) throw std::invalid_argument("diagonal heat function is empty");
    return [diag_heat = std::move(diag_heat), model_dim](const Position& s) -> RecoveredIntensity {
        if (s.g.size() != model_dim || s.r.size() != model_dim)
            throw std::invalid_argument("position dimension does not match the model");
        double k = kernel_affinity(s.g, s.r);
        if (!(k > 1e-8)) return {std::numeric_limits<double>::quiet_NaN(), false};
        double h = diag_heat(s);
        return {std::sqrt(std::max(h, 0.0) / k), true};
    };
}

Mat dirac_limit_heat(const std::vector<Position>& positions, double epsilon, int resolution,
                     std::optional<double> box_halfwidth) {
    if (positions.empty()) throw std::invalid_argument("no positions");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const int d = static_cast<int>(positions.front().g.size());
    const std::size_t n = positions.size();
    std::vector<Vec> omega(n);
    for (std::size_t i = 0; i < n; ++i) {
        check_latent(positions[i].g, d, "g");
        check_latent(positions[i].r, d, "r");
        omega[i].resize(2 * d);
        omega[i] << positions[i].g, positions[i].r;
    }
    double separation = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            separation = std::min(separation, (omega[i] - omega[j]).cwiseAbs().maxCoeff());

    double w;
    if (box_halfwidth) {
        w = *box_halfwidth;
        if (!(w > 0.0)) throw std::invalid_argument("box half-width must be positive");
        if (2.0 * w > separation) throw std::invalid_argument("Dirac boxes overlap");
    } else {
        w = std::min(0.25, 0.5 * separation);
        if (w < 3.0 * epsilon) throw std::invalid_argument("positions are closer than 6 epsilon; Dirac boxes would overlap");
    }

    std::vector<MixtureComponent> comps;
    comps.reserve(n);
    const Vec kappa = Vec::Constant(d, 1.0 / (epsilon * epsilon));
    for (std::size_t i = 0; i < n; ++i) {
        comps.push_back({"s" + std::to_string(i),
                         MarginalIntensity::trunc_gaussian({positions[i].g, kappa, 1.0}),
                         MarginalIntensity::trunc_gaussian({positions[i].r, kappa, 1.0})});
    }
    IntensityModel model = IntensityModel::mixture(std::move(comps));
    const QuadratureSpec scheme = QuadratureSpec::grid(resolution);

    std::vector<OmegaIntegrals> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
        BoxRegion box{(omega[i].array() - w).max(0.0).matrix(), (omega[i].array() + w).min(1.0).matrix()};
        boxes[i] = integrate_omega(model, box, scheme);
    }
    Mat out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = boxes[i].g_moment.dot(boxes[j].r_moment);
    return out;
}

}  // namespace idpg

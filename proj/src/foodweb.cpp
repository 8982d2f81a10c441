#include "idpg/foodweb.hpp"

#include <cmath>
#include <stdexcept>

#include "idpg/rng.hpp"

namespace idpg {

namespace {

Vec normalised_mean(const TruncGaussianSpec& spec) {
    auto m = MarginalIntensity::trunc_gaussian(spec);
    RegionIntegrals r = m.integrate(m.support(), QuadratureSpec{});
    return r.first / r.mass;
}

void project_ball(Vec& x) {
    x = x.cwiseMax(0.0);
    double n = x.norm();
    if (n > 1.0) x /= n;
}

double residual_sq(const Mat& target, const Mat& g, const Mat& r) { return (target - g * r.transpose()).squaredNorm(); }

}  // namespace

GuildEdgeMatrix expected_guild_edges(const std::vector<GuildSpec>& guilds, double lambda) {
    if (guilds.empty()) throw std::invalid_argument("no guilds");
    double total = 0.0;
    for (const auto& g : guilds) total += g.gamma();
    if (std::fabs(total - lambda) > 1e-6 * std::fabs(lambda))
        throw std::invalid_argument("guild masses do not sum to lambda");
    const auto m = static_cast<Eigen::Index>(guilds.size());
    GuildEdgeMatrix out;
    out.affinity.resize(m, m);
    out.effective_affinity.resize(m, m);
    out.expected.resize(m, m);
    out.abundance.resize(m);
    std::vector<Vec> mg, mr;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& g = guilds[static_cast<std::size_t>(i)];
        out.labels.push_back(g.label);
        out.abundance[i] = g.gamma() / lambda;
        mg.push_back(normalised_mean(g.green));
        mr.push_back(normalised_mean(g.red));
    }
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto& gi = guilds[static_cast<std::size_t>(i)];
            const auto& gj = guilds[static_cast<std::size_t>(j)];
            out.affinity(i, j) = gi.green.mean.dot(gj.red.mean);
            out.effective_affinity(i, j) = mg[static_cast<std::size_t>(i)].dot(mr[static_cast<std::size_t>(j)]);
            out.expected(i, j) = lambda * lambda * out.abundance[i] * out.abundance[j] * out.affinity(i, j);
        }
    return out;
}

CentroidFit fit_guild_centroids(const Mat& target, int d, std::uint64_t seed, const FitOptions& options) {
    if (target.rows() != target.cols() || target.rows() == 0) throw std::invalid_argument("target must be square and nonempty");
    if ((target.array() < 0.0).any() || (target.array() > 1.0).any())
        throw std::invalid_argument("target affinities must lie in [0, 1]");
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("bad latent dimension");
    const Eigen::Index m = target.rows();
    const auto starter = MarginalIntensity::uniform_ball(d, 1.0);
    CentroidFit best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int k = 0; k < options.restarts; ++k) {
        SeededRng rng(seed, static_cast<std::uint64_t>(k));
        Mat g(m, d), r(m, d);
        for (Eigen::Index i = 0; i < m; ++i) {
            g.row(i) = starter.sample(rng).transpose();
            r.row(i) = starter.sample(rng).transpose();
        }
        double loss = residual_sq(target, g, r);
        double step = options.step;
        for (int it = 0; it < options.iterations && loss > 0.0; ++it) {
            Mat e = target - g * r.transpose();
            Mat g_new = g + 2.0 * step * e * r;
            Mat r_new = r + 2.0 * step * e.transpose() * g;
            for (Eigen::Index i = 0; i < m; ++i) {
                Vec row = g_new.row(i).transpose();
                project_ball(row);
                g_new.row(i) = row.transpose();
                row = r_new.row(i).transpose();
                project_ball(row);
                r_new.row(i) = row.transpose();
            }
            double trial = residual_sq(target, g_new, r_new);
            if (trial < loss) {
                g = std::move(g_new);
                r = std::move(r_new);
                loss = trial;
            } else {
                step *= 0.5;
                if (step < 1e-14) break;
            }
        }
        if (loss < best_loss) {
            best_loss = loss;
            best.green.clear();
            best.red.clear();
            for (Eigen::Index i = 0; i < m; ++i) {
                best.green.push_back(g.row(i).transpose());
                best.red.push_back(r.row(i).transpose());
            }
            best.restart = k;
        }
    }
    Mat g(m, d), r(m, d);
    for (Eigen::Index i = 0; i < m; ++i) {
        g.row(i) = best.green[static_cast<std::size_t>(i)].transpose();
        r.row(i) = best.red[static_cast<std::size_t>(i)].transpose();
    }
    best.rmse = std::sqrt(residual_sq(target, g, r) / static_cast<double>(m * m));
    best.converged = best.rmse <= options.tolerance;
    return best;
}

IntensityModel build_mixture(const std::vector<GuildSpec>& guilds, const CentroidFit& fit, const Vec& kappa) {
    if (guilds.size() != fit.green.size() || guilds.size() != fit.red.size())
        throw std::invalid_argument("guild count does not match the fit");
    std::vector<MixtureComponent> comps;
    for (std::size_t i = 0; i < guilds.size(); ++i) {
        comps.push_back({guilds[i].label, MarginalIntensity::trunc_gaussian({fit.green[i], kappa, guilds[i].green.mass}),
                         MarginalIntensity::trunc_gaussian({fit.red[i], kappa, guilds[i].red.mass})});
    }
    return IntensityModel::mixture(std::move(comps));
}

IntensityModel build_mixture(const std::vector<GuildSpec>& guilds) {
    std::vector<MixtureComponent> comps;
    for (const auto& g : guilds)
        comps.push_back({g.label, MarginalIntensity::trunc_gaussian(g.green), MarginalIntensity::trunc_gaussian(g.red)});
    return IntensityModel::mixture(std::move(comps));
}

double AsymmetricIntensity::edge_intensity(const Position& s, const Position& t) const {
    return evaluate_intensity(source, s) * evaluate_intensity(target, t) / normalization;
}

AsymmetricIntensity asymmetric_edge_intensity(const std::vector<GuildSpec>& guilds) {
    if (guilds.empty()) throw std::invalid_argument("no guilds");
    std::vector<MixtureComponent> src, tgt;
    double lambda = 0.0;
    for (const auto& g : guilds) {
        if (!(g.w_S >= 0.0) || !(g.w_T >= 0.0)) throw std::invalid_argument("weights must be non-negative");
        lambda += g.gamma();
        auto green = MarginalIntensity::trunc_gaussian(g.green);
        auto red = MarginalIntensity::trunc_gaussian(g.red);
        if (g.w_S > 0.0) src.push_back({g.label, green.with_mass(g.w_S * g.green.mass), red});
        if (g.w_T > 0.0) tgt.push_back({g.label, green.with_mass(g.w_T * g.green.mass), red});
    }
    if (src.empty()) throw std::invalid_argument("all source weights are zero");
    if (tgt.empty()) throw std::invalid_argument("all target weights are zero");
    auto source = IntensityModel::mixture(std::move(src));
    auto target = IntensityModel::mixture(std::move(tgt));
    double norm = 2.0 * source.total_intensity() * target.total_intensity() / lambda;
    return {std::move(source), std::move(target), norm, lambda};
}

AbsorbedPositions absorb_coordinate_weights(const std::function<double(const Vec&)>& w_S,
                                            const std::function<double(const Vec&)>& w_T,
                                            const std::vector<Position>& positions) {
    AbsorbedPositions out;
    std::vector<Position> moved;
    moved.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        double ws = w_S(positions[i].g), wt = w_T(positions[i].r);
        if (!(ws >= 0.0) || !(wt >= 0.0)) throw std::invalid_argument("coordinate weights must be non-negative");
        Position p{ws * positions[i].g, wt * positions[i].r};
        if (!in_latent_ball(p.g) || !in_latent_ball(p.r)) out.violations.push_back(i);
        moved.push_back(std::move(p));
    }
    if (out.admissible()) out.positions = std::move(moved);
    return out;
}

}  // namespace idpg

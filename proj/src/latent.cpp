#include "idpg/latent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "idpg/quadrature.hpp"

namespace idpg {

namespace {

constexpr double kSupportSigmas = 10.0;
constexpr std::uint64_t kNormalisationSeed = 0x1d9a7c0ffee5eedULL;
constexpr std::size_t kNormalisationSamples = 1'000'000;
constexpr std::size_t kMaxRejections = 10'000'000;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// Gaussian(mu, sigma) restricted to [lo, hi], by inverse CDF.
double trunc_normal_draw(double mu, double sigma, double lo, double hi, SeededRng& rng) {
    double a = (lo - mu) / sigma;
    double b = (hi - mu) / sigma;
    bool flip = a > 0.0;
    if (flip) {
        std::swap(a, b);
        a = -a;
        b = -b;
    }
    double pa = std_normal_cdf(a);
    double pb = std_normal_cdf(b);
    if (!(pb > pa)) throw std::runtime_error("truncated Gaussian has no mass on [0,1]");
    double z = std_normal_quantile(pa + rng.uniform_open() * (pb - pa));
    z = std::clamp(z, a, b);
    if (flip) z = -z;
    return std::clamp(mu + sigma * z, lo, hi);
}

double ball_orthant_volume(int d) {
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) / std::pow(2.0, d);
}

BoxRegion intersect(const BoxRegion& a, const BoxRegion& b) {
    BoxRegion r{a.lower.cwiseMax(b.lower), a.upper.cwiseMin(b.upper)};
    r.upper = r.upper.cwiseMax(r.lower);
    return r;
}

std::vector<double> build_cdf(const GridField& f) {
    std::vector<double> cdf(f.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.mask[i]) acc += f.values[i];
        cdf[i] = acc;
    }
    return cdf;
}

// Uniform draw inside the cell chosen by the cumulative weights.
Vec draw_from_grid(const GridField& f, const std::vector<double>& cdf, SeededRng& rng, bool ball) {
    double total = cdf.back();
    double u = rng.uniform() * total;
    std::size_t idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    idx = std::min(idx, cdf.size() - 1);
    while (!f.mask[idx] || f.values[idx] <= 0.0) {
        // upper_bound can land on a zero-weight cell only through rounding at the top.
        if (idx == 0) break;
        --idx;
    }
    Vec c = f.center(idx);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Vec x(f.dim);
        for (int a = 0; a < f.dim; ++a) x[a] = c[a] + (rng.uniform() - 0.5) * f.spacing;
        if (!ball || x.squaredNorm() <= 1.0) return x;
    }
    return c;
}

}  // namespace

bool in_latent_ball(const Vec& x, double tol) {
    for (int i = 0; i < x.size(); ++i) {
        if (!(x[i] >= -tol)) return false;
    }
    return x.norm() <= 1.0 + tol;
}

void check_latent(const Vec& x, int d, const char* what) {
    if (x.size() != d) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    if (!in_latent_ball(x, 1e-9)) throw std::invalid_argument(std::string(what) + ": not in the non-negative unit ball");
}

double kernel_affinity(const Vec& g, const Vec& r) {
    if (g.size() != r.size()) throw std::invalid_argument("kernel_affinity: dimension mismatch");
    return g.dot(r);
}

QuadratureSpec QuadratureSpec::grid(int cells) {
    QuadratureSpec q;
    q.kind = Kind::Grid;
    q.points_per_axis = cells;
    return q;
}

QuadratureSpec QuadratureSpec::monte_carlo(std::size_t samples, std::optional<std::uint64_t> seed) {
    QuadratureSpec q;
    q.kind = Kind::MonteCarlo;
    q.samples = samples;
    q.seed = seed;
    return q;
}

RegionIntegrals RegionIntegrals::zero(int d) {
    return {0.0, Vec::Zero(d), Mat::Zero(d, d), Mat::Zero(d, d)};
}

RegionIntegrals& RegionIntegrals::operator+=(const RegionIntegrals& o) {
    mass += o.mass;
    first += o.first;
    second += o.second;
    gram += o.gram;
    return *this;
}

// ---------------------------------------------------------------- marginal

MarginalIntensity MarginalIntensity::uniform_ball(int dim, double mass) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension must be in [1, 16]");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be positive");
    MarginalIntensity m;
    m.kind_ = Kind::UniformBall;
    m.dim_ = dim;
    m.mass_ = mass;
    m.support_ = BoxRegion::unit(dim);
    m.init_normalisation();
    return m;
}

MarginalIntensity MarginalIntensity::trunc_gaussian(const TruncGaussianSpec& spec) {
    int d = static_cast<int>(spec.mean.size());
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension must be in [1, 16]");
    if (spec.kappa.size() != d) throw std::invalid_argument("kappa and mean dimensions differ");
    if (!(spec.mass > 0.0) || !std::isfinite(spec.mass)) throw std::invalid_argument("mass must be positive");
    for (int i = 0; i < d; ++i) {
        if (!(spec.kappa[i] > 0.0) || !std::isfinite(spec.kappa[i])) throw std::invalid_argument("kappa must be positive");
    }
    check_latent(spec.mean, d, "truncated Gaussian mean");
    MarginalIntensity m;
    m.kind_ = Kind::TruncGaussian;
    m.dim_ = d;
    m.mass_ = spec.mass;
    m.gauss_ = spec;
    m.support_ = BoxRegion::unit(d);
    for (int i = 0; i < d; ++i) {
        double s = kSupportSigmas / std::sqrt(spec.kappa[i]);
        m.support_.lower[i] = std::max(0.0, spec.mean[i] - s);
        m.support_.upper[i] = std::min(1.0, spec.mean[i] + s);
    }
    m.init_normalisation();
    return m;
}

MarginalIntensity MarginalIntensity::tabulated(GridField field) {
    if (field.dim < 1 || field.dim > kMaxDim) throw std::invalid_argument("dimension must be in [1, 16]");
    GridField ball = GridField::on_ball(field.dim, field.points_per_axis);
    if (field.mask.size() != ball.mask.size()) throw std::invalid_argument("tabulated marginal: grid size does not match dims");
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (!ball.mask[i] && field.values[i] != 0.0)
            throw std::invalid_argument("tabulated marginal: nonzero density outside the ball");
    }
    field.mask = ball.mask;
    field.validate();
    double mass = field.integral();
    if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("tabulated marginal: non-integrable or zero field");
    MarginalIntensity m;
    m.kind_ = Kind::GridTabulated;
    m.dim_ = field.dim;
    m.mass_ = mass;
    m.scale_ = 1.0;
    m.support_ = BoxRegion::unit(field.dim);
    m.cdf_ = std::make_shared<const std::vector<double>>(build_cdf(field));
    m.field_ = std::make_shared<const GridField>(std::move(field));
    return m;
}

const TruncGaussianSpec& MarginalIntensity::gaussian() const {
    if (kind_ != Kind::TruncGaussian) throw std::logic_error("marginal is not a truncated Gaussian");
    return gauss_;
}

const GridField& MarginalIntensity::grid() const {
    if (kind_ != Kind::GridTabulated) throw std::logic_error("marginal is not tabulated");
    return *field_;
}

MarginalIntensity MarginalIntensity::with_mass(double mass) const {
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (kind_ == Kind::GridTabulated) {
        GridField f = *field_;
        double k = mass / mass_;
        for (double& v : f.values) v *= k;
        return tabulated(std::move(f));
    }
    MarginalIntensity m = *this;
    m.scale_ *= mass / mass_;
    m.mass_ = mass;
    m.gauss_.mass = mass;
    return m;
}

double MarginalIntensity::axis_shape(int axis, double x) const {
    if (kind_ != Kind::TruncGaussian) return 1.0;
    double dx = x - gauss_.mean[axis];
    return std::exp(-0.5 * gauss_.kappa[axis] * dx * dx);
}

double MarginalIntensity::shape(const Vec& x) const {
    double s = 1.0;
    for (int i = 0; i < dim_; ++i) s *= axis_shape(i, x[i]);
    return s;
}

double MarginalIntensity::density(const Vec& x) const {
    if (x.size() != dim_) throw std::invalid_argument("density: dimension mismatch");
    if (!in_latent_ball(x)) return 0.0;
    if (kind_ == Kind::GridTabulated) return field_->values[field_->locate(x)];
    return scale_ * shape(x);
}

bool MarginalIntensity::needs_ball_mask(const BoxRegion& region) const {
    return dim_ > 1 && region.upper.squaredNorm() > 1.0;
}

void MarginalIntensity::init_normalisation() {
    if (kind_ == Kind::UniformBall && dim_ > 2) {
        scale_ = mass_ / ball_orthant_volume(dim_);
        return;
    }
    if (dim_ <= 2 || !needs_ball_mask(support_)) {
        scale_ = mass_ / grid_raw(support_, 256).mass;
        return;
    }
    // Truncated Gaussian in d >= 3 reaching the ball boundary: exact per-axis
    // masses times the Monte Carlo ball acceptance of the per-axis draws.
    double box_mass = 1.0;
    for (int i = 0; i < dim_; ++i) {
        double sigma = 1.0 / std::sqrt(gauss_.kappa[i]);
        double a = (0.0 - gauss_.mean[i]) / sigma;
        double b = (1.0 - gauss_.mean[i]) / sigma;
        box_mass *= sigma * std::sqrt(2.0 * std::numbers::pi) * (std_normal_cdf(b) - std_normal_cdf(a));
    }
    SeededRng rng(kNormalisationSeed, 0);
    std::size_t inside = 0;
    Vec x(dim_);
    for (std::size_t n = 0; n < kNormalisationSamples; ++n) {
        for (int i = 0; i < dim_; ++i) {
            x[i] = trunc_normal_draw(gauss_.mean[i], 1.0 / std::sqrt(gauss_.kappa[i]), 0.0, 1.0, rng);
        }
        if (x.squaredNorm() <= 1.0) ++inside;
    }
    if (inside == 0) throw std::runtime_error("truncated Gaussian has no mass inside the ball");
    scale_ = mass_ / (box_mass * static_cast<double>(inside) / kNormalisationSamples);
}

Vec MarginalIntensity::sample(SeededRng& rng) const {
    Vec x(dim_);
    switch (kind_) {
        case Kind::UniformBall: {
            for (int i = 0; i < dim_; ++i) x[i] = std::fabs(rng.normal());
            double n = x.norm();
            while (n == 0.0) {
                for (int i = 0; i < dim_; ++i) x[i] = std::fabs(rng.normal());
                n = x.norm();
            }
            return x * (std::pow(rng.uniform(), 1.0 / dim_) / n);
        }
        case Kind::TruncGaussian: {
            for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
                for (int i = 0; i < dim_; ++i) {
                    x[i] = trunc_normal_draw(gauss_.mean[i], 1.0 / std::sqrt(gauss_.kappa[i]), 0.0, 1.0, rng);
                }
                if (x.squaredNorm() <= 1.0) return x;
            }
            throw std::runtime_error("rejection sampler exceeded 1e7 consecutive rejections");
        }
        case Kind::GridTabulated:
            return draw_from_grid(*field_, *cdf_, rng, true);
    }
    return x;
}

RegionIntegrals MarginalIntensity::grid_raw(const BoxRegion& region, int cells) const {
    RegionIntegrals out = RegionIntegrals::zero(dim_);
    if (region.empty()) return out;
    std::vector<std::vector<quad::Node>> nodes(dim_);
    for (int a = 0; a < dim_; ++a) nodes[a] = quad::gauss_legendre_cells(region.lower[a], region.upper[a], cells);

    if (!needs_ball_mask(region)) {
        // Separable: the tensor rule factorises into per-axis sums.
        Vec m0(dim_), m1(dim_), m2(dim_), q0(dim_), q1(dim_), q2(dim_);
        for (int a = 0; a < dim_; ++a) {
            double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0, t2 = 0;
            for (const auto& n : nodes[a]) {
                double f = axis_shape(a, n.x);
                double wf = n.w * f;
                double wff = wf * f;
                s0 += wf;
                s1 += wf * n.x;
                s2 += wf * n.x * n.x;
                t0 += wff;
                t1 += wff * n.x;
                t2 += wff * n.x * n.x;
            }
            m0[a] = s0; m1[a] = s1; m2[a] = s2;
            q0[a] = t0; q1[a] = t1; q2[a] = t2;
        }
        auto prod_except = [&](const Vec& v, int i, int j) {
            double p = 1.0;
            for (int a = 0; a < dim_; ++a) {
                if (a != i && a != j) p *= v[a];
            }
            return p;
        };
        out.mass = prod_except(m0, -1, -1);
        for (int j = 0; j < dim_; ++j) {
            out.first[j] = m1[j] * prod_except(m0, j, -1);
            out.second(j, j) = m2[j] * prod_except(m0, j, -1);
            out.gram(j, j) = q2[j] * prod_except(q0, j, -1);
            for (int k = j + 1; k < dim_; ++k) {
                out.second(j, k) = out.second(k, j) = m1[j] * m1[k] * prod_except(m0, j, k);
                out.gram(j, k) = out.gram(k, j) = q1[j] * q1[k] * prod_except(q0, j, k);
            }
        }
        return out;
    }

    if (dim_ != 2) throw std::invalid_argument("grid quadrature over the ball needs d <= 2; use Monte Carlo");
    // d = 2 tensor rule with a staircase mask by cell centre.
    const int per = quad::kNodesPerCell;
    const double hx = (region.upper[0] - region.lower[0]) / cells;
    const double hy = (region.upper[1] - region.lower[1]) / cells;
    Vec x(2);
    for (int cx = 0; cx < cells; ++cx) {
        double centre_x = region.lower[0] + (cx + 0.5) * hx;
        for (int cy = 0; cy < cells; ++cy) {
            double centre_y = region.lower[1] + (cy + 0.5) * hy;
            if (centre_x * centre_x + centre_y * centre_y > 1.0) continue;
            for (int i = 0; i < per; ++i) {
                const auto& nx = nodes[0][cx * per + i];
                double fx = axis_shape(0, nx.x);
                for (int j = 0; j < per; ++j) {
                    const auto& ny = nodes[1][cy * per + j];
                    double f = fx * axis_shape(1, ny.x);
                    double w = nx.w * ny.w;
                    x << nx.x, ny.x;
                    out.mass += w * f;
                    out.first += (w * f) * x;
                    out.second += (w * f) * (x * x.transpose());
                    out.gram += (w * f * f) * (x * x.transpose());
                }
            }
        }
    }
    return out;
}

RegionIntegrals MarginalIntensity::integrate_grid(const BoxRegion& box, int cells) const {
    BoxRegion region = intersect(box, support_);
    RegionIntegrals raw = grid_raw(region, cells);
    double full = cells == 256 ? mass_ / scale_ : grid_raw(support_, cells).mass;
    double s = mass_ / full;
    raw.mass *= s;
    raw.first *= s;
    raw.second *= s;
    raw.gram *= s * s;
    return raw;
}

RegionIntegrals MarginalIntensity::integrate_mc(const BoxRegion& box, std::size_t samples,
                                                std::uint64_t seed, std::uint64_t tag) const {
    if (samples == 0) throw std::invalid_argument("Monte Carlo needs at least one sample");
    RegionIntegrals out = RegionIntegrals::zero(dim_);
    SeededRng rng(seed, splitmix64(tag));
    for (std::size_t n = 0; n < samples; ++n) {
        Vec x = sample(rng);
        if (!box.contains(x)) continue;
        Mat xx = x * x.transpose();
        out.mass += 1.0;
        out.first += x;
        out.second += xx;
        out.gram += density(x) * xx;
    }
    double k = mass_ / static_cast<double>(samples);
    out.mass *= k;
    out.first *= k;
    out.second *= k;
    out.gram *= k;
    return out;
}

RegionIntegrals MarginalIntensity::integrate_tabulated(const BoxRegion& box) const {
    return quad::integrate_piecewise(*field_, box);
}

RegionIntegrals MarginalIntensity::integrate(const BoxRegion& box, const QuadratureSpec& scheme,
                                             std::uint64_t stream_tag) const {
    if (box.dim() != dim_) throw std::invalid_argument("integrate: box dimension mismatch");
    if (box.empty()) return RegionIntegrals::zero(dim_);
    if (kind_ == Kind::GridTabulated) return integrate_tabulated(box);
    switch (scheme.kind) {
        case QuadratureSpec::Kind::Grid:
            return integrate_grid(box, scheme.points_per_axis);
        case QuadratureSpec::Kind::MonteCarlo:
            if (!scheme.seed) throw std::invalid_argument("Monte Carlo quadrature requires a seed");
            return integrate_mc(box, scheme.samples, *scheme.seed, stream_tag);
        case QuadratureSpec::Kind::Auto:
            if (dim_ <= 2 || !needs_ball_mask(support_)) return integrate_grid(box, scheme.points_per_axis);
            return integrate_mc(box, scheme.samples, scheme.seed.value_or(kNormalisationSeed), stream_tag);
    }
    return RegionIntegrals::zero(dim_);
}

// ------------------------------------------------------------------- model

IntensityModel IntensityModel::product(MarginalIntensity green, MarginalIntensity red) {
    if (green.dim() != red.dim()) throw std::invalid_argument("green and red dimensions differ");
    IntensityModel m;
    m.kind_ = Kind::Product;
    m.dim_ = green.dim();
    m.lambda_ = green.mass() * red.mass();
    m.components_.push_back({"", std::move(green), std::move(red)});
    m.component_cdf_ = {1.0};
    return m;
}

IntensityModel IntensityModel::mixture(std::vector<MixtureComponent> components) {
    if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
    IntensityModel m;
    m.kind_ = Kind::Mixture;
    m.dim_ = components.front().green.dim();
    double acc = 0.0;
    for (const auto& c : components) {
        if (c.green.dim() != m.dim_ || c.red.dim() != m.dim_)
            throw std::invalid_argument("mixture components must share the dimension");
        if (!(c.gamma() > 0.0)) throw std::invalid_argument("mixture component contribution must be positive");
        acc += c.gamma();
        m.component_cdf_.push_back(acc);
    }
    m.lambda_ = acc;
    for (double& v : m.component_cdf_) v /= acc;
    m.components_ = std::move(components);
    return m;
}

IntensityModel IntensityModel::tabulated(GridField joint) {
    if (joint.dim != 2) throw std::invalid_argument("tabulated joint must be a 2-axis grid over (g, r) with d = 1");
    joint.mask.assign(joint.values.size(), 1);
    joint.validate();
    double total = joint.integral();
    if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("tabulated joint: non-integrable or zero field");
    IntensityModel m;
    m.kind_ = Kind::Tabulated;
    m.dim_ = 1;
    m.lambda_ = total;
    m.joint_cdf_ = std::make_shared<const std::vector<double>>(build_cdf(joint));
    m.joint_ = std::make_shared<const GridField>(std::move(joint));
    return m;
}

bool IntensityModel::is_product() const {
    return kind_ != Kind::Tabulated && components_.size() == 1;
}

const GridField& IntensityModel::joint() const {
    if (kind_ != Kind::Tabulated) throw std::logic_error("model is not a tabulated joint");
    return *joint_;
}

std::vector<double> IntensityModel::weights() const {
    std::vector<double> w;
    for (const auto& c : components_) w.push_back(c.gamma() / lambda_);
    if (w.empty()) w.push_back(1.0);
    return w;
}

Position IntensityModel::draw(SeededRng& rng, int* species) const {
    if (kind_ == Kind::Tabulated) {
        Vec x = draw_from_grid(*joint_, *joint_cdf_, rng, false);
        if (species) *species = 0;
        return {Vec::Constant(1, x[0]), Vec::Constant(1, x[1])};
    }
    std::size_t m = 0;
    if (components_.size() > 1) {
        double u = rng.uniform();
        m = static_cast<std::size_t>(std::upper_bound(component_cdf_.begin(), component_cdf_.end(), u) -
                                     component_cdf_.begin());
        m = std::min(m, components_.size() - 1);
    }
    if (species) *species = static_cast<int>(m);
    Vec g = components_[m].green.sample(rng);
    Vec r = components_[m].red.sample(rng);
    return {std::move(g), std::move(r)};
}

double evaluate_intensity(const IntensityModel& model, const Position& p) {
    int d = model.dim();
    if (p.g.size() != d || p.r.size() != d) throw std::invalid_argument("evaluate_intensity: dimension mismatch");
    if (!in_latent_ball(p.g) || !in_latent_ball(p.r)) return 0.0;
    if (model.kind() == IntensityModel::Kind::Tabulated) {
        const GridField& j = model.joint();
        Vec x(2);
        x << p.g[0], p.r[0];
        return j.values[j.locate(x)];
    }
    double s = 0.0;
    for (const auto& c : model.components()) s += c.green.density(p.g) * c.red.density(p.r);
    return s;
}

MomentSummary moments(const IntensityModel& model, const QuadratureSpec& scheme) {
    if (scheme.kind == QuadratureSpec::Kind::MonteCarlo && !scheme.seed)
        throw std::invalid_argument("Monte Carlo quadrature requires a seed");
    const int d = model.dim();
    MomentSummary s;
    s.dim = d;
    s.lambda = model.total_intensity();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    if (model.kind() == IntensityModel::Kind::Tabulated) {
        RegionIntegrals t = quad::integrate_piecewise(model.joint(), BoxRegion::unit(2));
        s.is_product = false;
        s.c_G = s.c_R = nan;
        s.mu_G = s.mu_R = Vec::Constant(1, nan);
        s.mu_G_norm = Vec::Constant(1, t.first[0] / t.mass);
        s.mu_R_norm = Vec::Constant(1, t.first[1] / t.mass);
        s.sigma_G = Mat::Constant(1, 1, t.second(0, 0) / t.mass);
        s.sigma_R = Mat::Constant(1, 1, t.second(1, 1) / t.mass);
        return s;
    }

    const BoxRegion full = BoxRegion::unit(d);
    const auto& comps = model.components();
    s.mu_G_norm = Vec::Zero(d);
    s.mu_R_norm = Vec::Zero(d);
    s.sigma_G = Mat::Zero(d, d);
    s.sigma_R = Mat::Zero(d, d);
    for (std::size_t m = 0; m < comps.size(); ++m) {
        RegionIntegrals g = comps[m].green.integrate(full, scheme, 2 * m);
        RegionIntegrals r = comps[m].red.integrate(full, scheme, 2 * m + 1);
        double pi = comps[m].gamma() / s.lambda;
        s.mu_G_norm += pi * g.first / g.mass;
        s.mu_R_norm += pi * r.first / r.mass;
        s.sigma_G += pi * g.second / g.mass;
        s.sigma_R += pi * r.second / r.mass;
        if (comps.size() == 1) {
            s.c_G = comps[m].green.mass();
            s.c_R = comps[m].red.mass();
            // Normalise by the quadrature mass so every quantity shares one rule.
            s.gram_A = g.gram * (s.c_G / g.mass);
            s.gram_B = r.gram * (s.c_R / r.mass);
        }
    }
    s.sigma_G = 0.5 * (s.sigma_G + s.sigma_G.transpose());
    s.sigma_R = 0.5 * (s.sigma_R + s.sigma_R.transpose());
    if (comps.size() == 1) {
        s.is_product = true;
        s.mu_G = s.c_G * s.mu_G_norm;
        s.mu_R = s.c_R * s.mu_R_norm;
    } else {
        s.is_product = false;
        s.c_G = s.c_R = nan;
        s.mu_G = s.mu_R = Vec::Constant(d, nan);
    }
    return s;
}

std::pair<BoxRegion, BoxRegion> split_omega_box(const BoxRegion& box) {
    if (box.dim() % 2 != 0) throw std::invalid_argument("Omega box must have 2d coordinates");
    int d = box.dim() / 2;
    return {BoxRegion{box.lower.head(d), box.upper.head(d)}, BoxRegion{box.lower.tail(d), box.upper.tail(d)}};
}

OmegaIntegrals integrate_omega(const IntensityModel& model, const BoxRegion& box, const QuadratureSpec& scheme) {
    const int d = model.dim();
    if (box.dim() != 2 * d) throw std::invalid_argument("Omega box dimension mismatch");
    OmegaIntegrals out{0.0, Vec::Zero(d), Vec::Zero(d)};
    if (box.empty()) return out;
    if (model.kind() == IntensityModel::Kind::Tabulated) {
        RegionIntegrals t = quad::integrate_piecewise(model.joint(), box);
        out.mass = t.mass;
        out.g_moment[0] = t.first[0];
        out.r_moment[0] = t.first[1];
        return out;
    }
    auto [gb, rb] = split_omega_box(box);
    const auto& comps = model.components();
    for (std::size_t m = 0; m < comps.size(); ++m) {
        RegionIntegrals g = comps[m].green.integrate(gb, scheme, 2 * m);
        RegionIntegrals r = comps[m].red.integrate(rb, scheme, 2 * m + 1);
        out.mass += g.mass * r.mass;
        out.g_moment += g.first * r.mass;
        out.r_moment += r.first * g.mass;
    }
    return out;
}

}  // namespace idpg

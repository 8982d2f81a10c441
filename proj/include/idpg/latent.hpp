#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "idpg/grid.hpp"
#include "idpg/rng.hpp"

namespace idpg {

constexpr int kMaxDim = 16;

/// An individual: giving coordinate g and receiving coordinate r, both in B^d_+.
struct Position {
    Vec g;
    Vec r;
};

bool in_latent_ball(const Vec& x, double tol = 1e-12);
/// Throws unless x is a valid latent vector of dimension d.
void check_latent(const Vec& x, int d, const char* what);

/// Dot-product affinity g.r; the edge probability between a source and a target.
double kernel_affinity(const Vec& g, const Vec& r);

struct TruncGaussianSpec {
    Vec mean;
    Vec kappa;  // per-dimension precision 1/sigma^2
    double mass = 1.0;
};

struct QuadratureSpec {
    enum class Kind { Auto, Grid, MonteCarlo };
    Kind kind = Kind::Auto;
    int points_per_axis = 256;
    std::size_t samples = 1'000'000;
    std::optional<std::uint64_t> seed;

    static QuadratureSpec grid(int cells = 256);
    static QuadratureSpec monte_carlo(std::size_t samples, std::optional<std::uint64_t> seed);
};

/// Raw integrals of a marginal over a region: int rho, int x rho, int x x^T rho, int x x^T rho^2.
struct RegionIntegrals {
    double mass = 0.0;
    Vec first;
    Mat second;
    Mat gram;

    static RegionIntegrals zero(int d);
    RegionIntegrals& operator+=(const RegionIntegrals& o);
};

class MarginalIntensity {
public:
    enum class Kind { UniformBall, TruncGaussian, GridTabulated };

    static MarginalIntensity uniform_ball(int dim, double mass);
    static MarginalIntensity trunc_gaussian(const TruncGaussianSpec& spec);
    /// Piecewise-constant density on a ball-masked grid.
    static MarginalIntensity tabulated(GridField field);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double mass() const { return mass_; }
    const TruncGaussianSpec& gaussian() const;
    const GridField& grid() const;

    double density(const Vec& x) const;
    /// Draw from density / mass.
    Vec sample(SeededRng& rng) const;
    /// Integrals over box (intersected with the support). Grid quadrature is
    /// renormalised so the full-domain integral equals mass() exactly.
    RegionIntegrals integrate(const BoxRegion& box, const QuadratureSpec& scheme,
                              std::uint64_t stream_tag = 0) const;
    MarginalIntensity with_mass(double mass) const;

    /// Box outside of which the density is zero or negligible (+-10 sigma).
    const BoxRegion& support() const { return support_; }

private:
    MarginalIntensity() = default;
    double shape(const Vec& x) const;
    double axis_shape(int axis, double x) const;
    bool needs_ball_mask(const BoxRegion& region) const;
    RegionIntegrals grid_raw(const BoxRegion& region, int cells) const;
    RegionIntegrals integrate_grid(const BoxRegion& box, int cells) const;
    RegionIntegrals integrate_mc(const BoxRegion& box, std::size_t samples, std::uint64_t seed,
                                 std::uint64_t tag) const;
    RegionIntegrals integrate_tabulated(const BoxRegion& box) const;
    void init_normalisation();

    Kind kind_ = Kind::UniformBall;
    int dim_ = 0;
    double mass_ = 0.0;
    double scale_ = 0.0;  // density = scale_ * shape
    TruncGaussianSpec gauss_;
    std::shared_ptr<const GridField> field_;
    std::shared_ptr<const std::vector<double>> cdf_;
    BoxRegion support_;
};

struct MixtureComponent {
    std::string label;
    MarginalIntensity green;
    MarginalIntensity red;

    double gamma() const { return green.mass() * red.mass(); }
};

class IntensityModel {
public:
    enum class Kind { Product, Mixture, Tabulated };

    static IntensityModel product(MarginalIntensity green, MarginalIntensity red);
    static IntensityModel mixture(std::vector<MixtureComponent> components);
    /// Non-product joint density over (g, r) at d = 1, as a 2-axis grid.
    static IntensityModel tabulated(GridField joint);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double total_intensity() const { return lambda_; }
    /// True for Product and single-component mixtures.
    bool is_product() const;
    const std::vector<MixtureComponent>& components() const { return components_; }
    const GridField& joint() const;
    /// gamma_m / Lambda.
    std::vector<double> weights() const;

    /// Draw a position from rho / Lambda; species is the component index (0 for non-mixtures).
    Position draw(SeededRng& rng, int* species = nullptr) const;

private:
    IntensityModel() = default;
    Kind kind_ = Kind::Product;
    int dim_ = 0;
    double lambda_ = 0.0;
    std::vector<MixtureComponent> components_;
    std::shared_ptr<const GridField> joint_;
    std::shared_ptr<const std::vector<double>> joint_cdf_;
    std::vector<double> component_cdf_;
};

double evaluate_intensity(const IntensityModel& model, const Position& p);

struct MomentSummary {
    bool is_product = true;
    int dim = 0;
    double c_G = 0.0;
    double c_R = 0.0;
    double lambda = 0.0;
    Vec mu_G, mu_R;
    Vec mu_G_norm, mu_R_norm;
    Mat sigma_G, sigma_R;
    Mat gram_A, gram_B;
};

/// Moments of the model. For non-product models c_G, c_R, mu_G, mu_R are NaN and
/// the Gram matrices are empty; normalised means and sigma use the full marginals.
MomentSummary moments(const IntensityModel& model, const QuadratureSpec& scheme = {});

/// Integrals over a box in Omega given as 2d coordinates (g then r).
struct OmegaIntegrals {
    double mass = 0.0;
    Vec g_moment;  // int_A g rho
    Vec r_moment;  // int_A r rho
};

OmegaIntegrals integrate_omega(const IntensityModel& model, const BoxRegion& box,
                               const QuadratureSpec& scheme = {});

/// Split a 2d box over Omega into its green and red parts.
std::pair<BoxRegion, BoxRegion> split_omega_box(const BoxRegion& box);

}  // namespace idpg

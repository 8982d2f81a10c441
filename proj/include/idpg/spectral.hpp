#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "idpg/grid.hpp"
#include "idpg/latent.hpp"
#include "idpg/sampling.hpp"

namespace idpg {

struct SpectralSummary {
    Vec singular_values;  // descending
    int rank_bound = 0;
    double hs_norm_sq = 0.0;
    Mat factor_C;
};

/// Square root of a symmetric PSD matrix; negative eigenvalues are clamped to zero.
Mat psd_sqrt(const Mat& m);

/// Singular values of the bound-heat operator from the Gram matrices A and B:
/// those of C = S_A^{1/2} U_A^T U_B S_B^{1/2}. hs_norm_sq = tr(AB).
SpectralSummary bound_heat_svd(const Mat& gram_A, const Mat& gram_B);

struct DesireSpectrum {
    enum class Route { Symmetrized, SwappedSymmetrized, PseudoRoot };
    Vec values;  // descending
    Route route = Route::Symmetrized;
    bool warning = false;  // both covariance matrices singular
};

/// sigma_k = sqrt(lambda_k(Sigma_G Sigma_R)) through the similar symmetric matrix
/// Sigma_G^{1/2} Sigma_R Sigma_G^{1/2}.
DesireSpectrum desire_singular_values(const Mat& sigma_G, const Mat& sigma_R);

/// A(i, j) = 1 iff edge i -> j.
Mat adjacency_matrix(const SampledGraph& graph);

struct TruncatedSvd {
    Mat U;
    Vec S;
    Mat V;
};

/// Top-k SVD. Dense for small matrices, otherwise a seeded randomized range finder
/// (oversampling 10, 4 power iterations) followed by a dense SVD of the projection.
TruncatedSvd truncated_svd(const Mat& a, int k, std::uint64_t seed = 0x5eed5eedULL);

/// Top-k singular values of the adjacency matrix divided by N.
Vec adjacency_spectrum(const SampledGraph& graph, int k, std::uint64_t seed = 0x5eed5eedULL);

struct Embedding {
    Mat left;   // N x d_hat, U sqrt(S)
    Mat right;  // d_hat x N, sqrt(S) V^T
};

Embedding embed_adjacency(const SampledGraph& graph, int d_hat, std::uint64_t seed = 0x5eed5eedULL);

struct DimensionChoice {
    int dim = 1;
    bool flat_spectrum = false;
};

/// Largest-gap elbow over k <= ceil(n / 2) for a descending list of length n.
DimensionChoice select_dimension(const std::vector<double>& singular_values);

struct MultiGraphSpectrum {
    Vec mean;
    Vec stddev;     // sample standard deviation across graphs
    Vec std_error;  // stddev / sqrt(m), the spread of the averaged estimator
};

MultiGraphSpectrum multi_graph_average(const std::vector<SampledGraph>& graphs, int k);

struct LaplacianResult {
    GridField d_out;
    GridField Lf;
};

/// Out-degree density and (L f)(s) = d_out(s) f(s) - int h(s, t) f(t) dt on a d = 1
/// Omega grid (axes g, r). d_out uses the closed form rho(s) c_G c_R (g . mu~_R); the
/// integral is a midpoint sum over the grid of f.
LaplacianResult out_degree_and_laplacian_apply(const IntensityModel& model, const GridField& f);

}  // namespace idpg

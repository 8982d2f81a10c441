#include "idpg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "idpg/rng.hpp"

namespace idpg {

namespace {

void check_symmetric(const Mat& m, const char* what) {
    if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + " is not square");
    if ((m - m.transpose()).norm() > 1e-9) throw std::invalid_argument(std::string(what) + " is not symmetric");
}

Vec sorted_descending(Vec v) {
    std::sort(v.data(), v.data() + v.size(), std::greater<double>());
    return v;
}

Vec sqrt_clamped(const Vec& eig) { return eig.cwiseMax(0.0).cwiseSqrt(); }

bool positive_definite(const Vec& eig) {
    double top = eig.cwiseAbs().maxCoeff();
    return top > 0.0 && eig.minCoeff() > 1e-12 * top;
}

Mat orthonormal_basis(const Mat& y) {
    Eigen::HouseholderQR<Mat> qr(y);
    return qr.householderQ() * Mat::Identity(y.rows(), y.cols());
}

}  // namespace

Mat psd_sqrt(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    return es.eigenvectors() * sqrt_clamped(es.eigenvalues()).asDiagonal() * es.eigenvectors().transpose();
}

SpectralSummary bound_heat_svd(const Mat& gram_A, const Mat& gram_B) {
    check_symmetric(gram_A, "Gram matrix A");
    check_symmetric(gram_B, "Gram matrix B");
    if (gram_A.rows() != gram_B.rows()) throw std::invalid_argument("Gram matrices differ in size");
    Eigen::SelfAdjointEigenSolver<Mat> ea(gram_A), eb(gram_B);
    Mat c = sqrt_clamped(ea.eigenvalues()).asDiagonal() * ea.eigenvectors().transpose() * eb.eigenvectors() *
            sqrt_clamped(eb.eigenvalues()).asDiagonal();
    SpectralSummary out;
    out.factor_C = c;
    out.singular_values = sorted_descending(Eigen::JacobiSVD<Mat>(c).singularValues());
    out.rank_bound = static_cast<int>(gram_A.rows());
    out.hs_norm_sq = (gram_A * gram_B).trace();
    return out;
}

DesireSpectrum desire_singular_values(const Mat& sigma_G, const Mat& sigma_R) {
    check_symmetric(sigma_G, "Sigma_G");
    check_symmetric(sigma_R, "Sigma_R");
    if (sigma_G.rows() != sigma_R.rows()) throw std::invalid_argument("covariance matrices differ in size");
    Eigen::SelfAdjointEigenSolver<Mat> eg(sigma_G), er(sigma_R);
    DesireSpectrum out;
    const Mat* root_side = &sigma_G;
    const Mat* other = &sigma_R;
    if (!positive_definite(eg.eigenvalues())) {
        if (positive_definite(er.eigenvalues())) {
            out.route = DesireSpectrum::Route::SwappedSymmetrized;
            std::swap(root_side, other);
        } else {
            out.route = DesireSpectrum::Route::PseudoRoot;
            out.warning = true;
        }
    }
    Mat root = psd_sqrt(*root_side);
    Mat sym = root * (*other) * root;
    sym = 0.5 * (sym + sym.transpose());
    out.values = sorted_descending(sqrt_clamped(Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues()));
    return out;
}

Mat adjacency_matrix(const SampledGraph& graph) {
    const auto n = static_cast<Eigen::Index>(graph.node_count());
    Mat a = Mat::Zero(n, n);
    for (const auto& e : graph.edges) a(static_cast<Eigen::Index>(e.first), static_cast<Eigen::Index>(e.second)) = 1.0;
    return a;
}

TruncatedSvd truncated_svd(const Mat& a, int k, std::uint64_t seed) {
    const Eigen::Index small = std::min(a.rows(), a.cols());
    if (k < 1 || k > small) throw std::invalid_argument("requested rank out of range");
    constexpr int kOversample = 10;
    constexpr int kPowerIterations = 4;
    TruncatedSvd out;
    if (small <= 200 || 2 * (k + kOversample) >= small) {
        Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.U = svd.matrixU().leftCols(k);
        out.S = svd.singularValues().head(k);
        out.V = svd.matrixV().leftCols(k);
        return out;
    }
    SeededRng rng(seed, 0);
    const int l = k + kOversample;
    Mat omega(a.cols(), l);
    for (Eigen::Index j = 0; j < omega.cols(); ++j)
        for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = rng.normal();
    Mat q = orthonormal_basis(a * omega);
    for (int it = 0; it < kPowerIterations; ++it) {
        Mat z = orthonormal_basis(a.transpose() * q);
        q = orthonormal_basis(a * z);
    }
    Mat b = q.transpose() * a;
    Eigen::BDCSVD<Mat> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = q * svd.matrixU().leftCols(k);
    out.S = svd.singularValues().head(k);
    out.V = svd.matrixV().leftCols(k);
    return out;
}

Vec adjacency_spectrum(const SampledGraph& graph, int k, std::uint64_t seed) {
    const std::size_t n = graph.node_count();
    if (n == 0) throw std::invalid_argument("adjacency spectrum of an empty graph");
    if (k < 1 || static_cast<std::size_t>(k) > n) throw std::invalid_argument("k must lie in [1, N]");
    return truncated_svd(adjacency_matrix(graph), k, seed).S / static_cast<double>(n);
}

Embedding embed_adjacency(const SampledGraph& graph, int d_hat, std::uint64_t seed) {
    const std::size_t n = graph.node_count();
    if (d_hat < 1 || static_cast<std::size_t>(d_hat) > n) throw std::invalid_argument("d_hat must lie in [1, N]");
    TruncatedSvd svd = truncated_svd(adjacency_matrix(graph), d_hat, seed);
    Vec root = svd.S.cwiseSqrt();
    return {svd.U * root.asDiagonal(), root.asDiagonal() * svd.V.transpose()};
}

DimensionChoice select_dimension(const std::vector<double>& sv) {
    if (sv.empty()) throw std::invalid_argument("empty spectrum");
    const std::size_t n = sv.size();
    const std::size_t kmax = std::min((n + 1) / 2, n - 1);
    double best = 0.0;
    int dim = 1;
    for (std::size_t k = 1; k <= kmax; ++k) {
        double gap = sv[k - 1] - sv[k];
        if (gap > best) {
            best = gap;
            dim = static_cast<int>(k);
        }
    }
    double scale = std::max(std::fabs(sv.front()), std::numeric_limits<double>::min());
    if (best <= 1e-12 * scale) return {1, true};
    return {dim, false};
}

MultiGraphSpectrum multi_graph_average(const std::vector<SampledGraph>& graphs, int k) {
    if (graphs.empty()) throw std::invalid_argument("no graphs");
    const auto m = static_cast<double>(graphs.size());
    Mat values(k, static_cast<Eigen::Index>(graphs.size()));
    for (std::size_t l = 0; l < graphs.size(); ++l) values.col(static_cast<Eigen::Index>(l)) = adjacency_spectrum(graphs[l], k);
    MultiGraphSpectrum out;
    out.mean = values.rowwise().mean();
    out.stddev = Vec::Zero(k);
    if (graphs.size() > 1) {
        Mat centred = values.colwise() - out.mean;
        out.stddev = (centred.array().square().rowwise().sum() / (m - 1.0)).sqrt().matrix();
    }
    out.std_error = out.stddev / std::sqrt(m);
    return out;
}

LaplacianResult out_degree_and_laplacian_apply(const IntensityModel& model, const GridField& f) {
    if (!model.is_product() || model.kind() == IntensityModel::Kind::Tabulated)
        throw std::invalid_argument("the Laplacian closed form needs a product model");
    if (model.dim() != 1) throw std::invalid_argument("the Laplacian grid is defined for d = 1");
    if (f.dim != 2) throw std::invalid_argument("f must live on a 2-axis Omega grid");
    const auto& comp = model.components().front();
    const double c_g = comp.green.mass(), c_r = comp.red.mass();
    const double mu_r_norm = moments(model).mu_R_norm[0];

    GridField d_out = GridField::on_box(2, f.points_per_axis);
    d_out.mask = f.mask;
    GridField lf = d_out;
    std::vector<double> rho(f.size(), 0.0);
    double weighted = 0.0;  // sum_t r_t rho(t) f(t) dA
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.mask[i]) continue;
        Vec c = f.center(i);
        rho[i] = comp.green.density(c.head(1)) * comp.red.density(c.tail(1));
        weighted += c[1] * rho[i] * f.values[i];
    }
    weighted *= f.cell_volume();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.mask[i]) {
            d_out.values[i] = lf.values[i] = 0.0;
            continue;
        }
        double g = f.center(i)[0];
        d_out.values[i] = rho[i] * c_g * c_r * g * mu_r_norm;
        lf.values[i] = d_out.values[i] * f.values[i] - rho[i] * g * weighted;
    }
    return {std::move(d_out), std::move(lf)};
}

}  // namespace idpg

// Monte Carlo reference for the d = 4 spectral mixture: sigma_k(D~) = sqrt(lambda_k(Sigma_G Sigma_R))
// with Sigma the normalised second moment of each full marginal. Deliberately independent of the
// library samplers: plain rejection from the untruncated Gaussian onto the non-negative unit ball.
//
//   spectral_reference [draws=10000000] [seed=20241]
//
// Prints sigma_1..4 and a batch-based standard error for each.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct Component {
    double weight;
    Vec4 green, red;
};

const double kKappa = 40.0;

Mat4 second_moment(const Vec4& mean, long draws, std::mt19937_64& eng) {
    std::normal_distribution<double> z(0.0, 1.0 / std::sqrt(kKappa));
    Mat4 acc = Mat4::Zero();
    long kept = 0;
    while (kept < draws) {
        Vec4 x;
        for (int a = 0; a < 4; ++a) x[a] = mean[a] + z(eng);
        if ((x.array() < 0.0).any() || x.squaredNorm() > 1.0) continue;
        acc += x * x.transpose();
        ++kept;
    }
    return acc / static_cast<double>(draws);
}

Vec4 spectrum(const Mat4& sg, const Mat4& sr) {
    Eigen::SelfAdjointEigenSolver<Mat4> eg(sg);
    Mat4 root = eg.eigenvectors() * eg.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eg.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<Mat4> es(root * sr * root);
    Vec4 ev = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    return ev;
}

}  // namespace

int main(int argc, char** argv) {
    const long draws = argc > 1 ? std::atol(argv[1]) : 10'000'000L;
    const unsigned long long seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20241ULL;
    const std::vector<Component> comps = {
        {0.6, Vec4(0.7, 0.3, 0.2, 0.1), Vec4(0.2, 0.6, 0.3, 0.2)},
        {0.4, Vec4(0.1, 0.2, 0.6, 0.5), Vec4(0.5, 0.1, 0.2, 0.6)},
    };
    constexpr int kBatches = 10;
    std::mt19937_64 eng(seed);
    Mat4 sg = Mat4::Zero(), sr = Mat4::Zero();
    std::vector<Vec4> batch_spectra;
    for (int b = 0; b < kBatches; ++b) {
        Mat4 bg = Mat4::Zero(), br = Mat4::Zero();
        for (const auto& c : comps) {
            bg += c.weight * second_moment(c.green, draws / kBatches, eng);
            br += c.weight * second_moment(c.red, draws / kBatches, eng);
        }
        batch_spectra.push_back(spectrum(bg, br));
        sg += bg / kBatches;
        sr += br / kBatches;
    }
    Vec4 s = spectrum(sg, sr);
    for (int k = 0; k < 4; ++k) {
        double ss = 0.0;
        for (const auto& bs : batch_spectra) ss += (bs[k] - s[k]) * (bs[k] - s[k]);
        double se = std::sqrt(ss / (kBatches - 1) / kBatches);
        std::printf("sigma%d %.17g se %.3g\n", k + 1, s[k], se);
    }
    return 0;
}

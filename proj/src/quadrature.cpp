#include "idpg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace idpg::quad {

std::vector<Node> gauss_legendre_cells(double lo, double hi, int cells) {
    if (cells < 1) throw std::invalid_argument("quadrature needs at least one cell");
    static const double xs[kNodesPerCell] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double ws[kNodesPerCell] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    std::vector<Node> out;
    out.reserve(static_cast<std::size_t>(cells) * kNodesPerCell);
    const double h = (hi - lo) / cells;
    for (int c = 0; c < cells; ++c) {
        double mid = lo + (c + 0.5) * h;
        for (int k = 0; k < kNodesPerCell; ++k) out.push_back({mid + 0.5 * h * xs[k], 0.5 * h * ws[k]});
    }
    return out;
}

RegionIntegrals integrate_piecewise(const GridField& field, const BoxRegion& box) {
    const int d = field.dim;
    if (box.dim() != d) throw std::invalid_argument("box dimension does not match the grid");
    RegionIntegrals out = RegionIntegrals::zero(d);
    if (box.empty()) return out;
    const int n = field.points_per_axis;
    const double h = field.spacing;
    // Per-axis overlap length and first/second moments of x over each cell's overlap.
    std::vector<std::vector<double>> len(d, std::vector<double>(n)), i1 = len, i2 = len;
    for (int a = 0; a < d; ++a) {
        for (int i = 0; i < n; ++i) {
            double lo = std::max(i * h, box.lower[a]);
            double hi = std::min((i + 1) * h, box.upper[a]);
            if (hi <= lo) continue;
            len[a][i] = hi - lo;
            i1[a][i] = 0.5 * (hi * hi - lo * lo);
            i2[a][i] = (hi * hi * hi - lo * lo * lo) / 3.0;
        }
    }
    for (std::size_t idx = 0; idx < field.size(); ++idx) {
        double v = field.values[idx];
        if (!field.mask[idx] || v == 0.0) continue;
        std::vector<int> ix = field.unravel(idx);
        double vol = 1.0;
        for (int a = 0; a < d; ++a) vol *= len[a][ix[a]];
        if (vol == 0.0) continue;
        auto others = [&](int j, int k) {
            double p = 1.0;
            for (int a = 0; a < d; ++a) {
                if (a != j && a != k) p *= len[a][ix[a]];
            }
            return p;
        };
        out.mass += v * vol;
        for (int j = 0; j < d; ++j) {
            double pj = others(j, -1);
            out.first[j] += v * i1[j][ix[j]] * pj;
            out.second(j, j) += v * i2[j][ix[j]] * pj;
            out.gram(j, j) += v * v * i2[j][ix[j]] * pj;
            for (int k = j + 1; k < d; ++k) {
                double c = i1[j][ix[j]] * i1[k][ix[k]] * others(j, k);
                out.second(j, k) += v * c;
                out.gram(j, k) += v * v * c;
            }
        }
    }
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            out.second(k, j) = out.second(j, k);
            out.gram(k, j) = out.gram(j, k);
        }
    }
    return out;
}

}  // namespace idpg::quad

#include "idpg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace idpg {

BoxRegion BoxRegion::unit(int dim) {
    return {Vec::Zero(dim), Vec::Ones(dim)};
}

bool BoxRegion::empty() const {
    for (int i = 0; i < dim(); ++i) {
        if (!(upper[i] > lower[i])) return true;
    }
    return false;
}

bool BoxRegion::contains(const Vec& x) const {
    for (int i = 0; i < dim(); ++i) {
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
}

static std::size_t checked_size(int dim, int n) {
    if (dim < 1 || n < 1) throw std::invalid_argument("grid needs dim >= 1 and n >= 1");
    double total = std::pow(static_cast<double>(n), dim);
    if (total > 2e8) throw std::invalid_argument("grid too large");
    return static_cast<std::size_t>(total);
}

GridField GridField::on_box(int dim, int n) {
    GridField f;
    f.dim = dim;
    f.points_per_axis = n;
    f.spacing = 1.0 / n;
    std::size_t total = checked_size(dim, n);
    f.values.assign(total, 0.0);
    f.mask.assign(total, 1);
    return f;
}

GridField GridField::on_ball(int dim, int n) {
    GridField f = on_box(dim, n);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.mask[i] = f.center(i).squaredNorm() <= 1.0 ? 1 : 0;
    }
    return f;
}

double GridField::cell_volume() const { return std::pow(spacing, dim); }

std::vector<int> GridField::unravel(std::size_t idx) const {
    std::vector<int> ix(dim);
    for (int a = dim - 1; a >= 0; --a) {
        ix[a] = static_cast<int>(idx % points_per_axis);
        idx /= points_per_axis;
    }
    return ix;
}

std::size_t GridField::ravel(const std::vector<int>& ix) const {
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) idx = idx * points_per_axis + ix[a];
    return idx;
}

Vec GridField::center(std::size_t idx) const {
    Vec c(dim);
    for (int a = dim - 1; a >= 0; --a) {
        c[a] = (static_cast<double>(idx % points_per_axis) + 0.5) * spacing;
        idx /= points_per_axis;
    }
    return c;
}

std::size_t GridField::locate(const Vec& x) const {
    std::vector<int> ix(dim);
    for (int a = 0; a < dim; ++a) {
        int i = static_cast<int>(std::floor(x[a] / spacing));
        ix[a] = std::clamp(i, 0, points_per_axis - 1);
    }
    return ravel(ix);
}

double GridField::integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        if (mask[i]) s += values[i];
    }
    return s * cell_volume();
}

bool GridField::same_layout(const GridField& other) const {
    return dim == other.dim && points_per_axis == other.points_per_axis && mask == other.mask;
}

void GridField::validate() const {
    if (values.size() != mask.size()) throw std::invalid_argument("grid values/mask size mismatch");
    if (values.size() != checked_size(dim, points_per_axis))
        throw std::invalid_argument("grid size does not match dims");
    for (std::size_t i = 0; i < size(); ++i) {
        double v = values[i];
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("grid value negative or non-finite");
        if (!mask[i] && v != 0.0) throw std::invalid_argument("grid value nonzero outside mask");
    }
}

}  // namespace idpg

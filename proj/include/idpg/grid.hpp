#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace idpg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box. Empty when any upper < lower is impossible by invariant,
/// but a zero-width side gives an empty (measure zero) region.
struct BoxRegion {
    Vec lower;
    Vec upper;

    static BoxRegion unit(int dim);
    int dim() const { return static_cast<int>(lower.size()); }
    bool empty() const;
    bool contains(const Vec& x) const;
};

/// Regular cell-centred grid on [0,1]^dim with a boolean mask.
/// Cell i along an axis covers [i*h, (i+1)*h] and has centre (i+0.5)*h.
struct GridField {
    int dim = 0;
    int points_per_axis = 0;
    double spacing = 0.0;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    /// Mask = cell centre inside the non-negative unit ball.
    static GridField on_ball(int dim, int n);
    /// Mask = every cell (product of balls at d=1, or a joint over (g, r)).
    static GridField on_box(int dim, int n);

    std::size_t size() const { return values.size(); }
    double cell_volume() const;
    std::vector<int> unravel(std::size_t idx) const;
    std::size_t ravel(const std::vector<int>& ix) const;
    Vec center(std::size_t idx) const;
    /// Index of the cell containing x (clamped to the grid).
    std::size_t locate(const Vec& x) const;

    double integral() const;
    bool same_layout(const GridField& other) const;
    /// Throws unless values are finite, non-negative and zero off the mask.
    void validate() const;
};

}  // namespace idpg

#pragma once

#include <vector>

#include "idpg/grid.hpp"
#include "idpg/latent.hpp"

namespace idpg::quad {

struct Node {
    double x;
    double w;
};

constexpr int kNodesPerCell = 3;

/// Composite 3-point Gauss-Legendre rule on [lo, hi] split into `cells` cells.
/// Exact for polynomials of degree <= 5 on each cell.
std::vector<Node> gauss_legendre_cells(double lo, double hi, int cells);

/// Exact integrals of a piecewise-constant field over a box
/// (values are densities, constant within each masked cell).
RegionIntegrals integrate_piecewise(const GridField& field, const BoxRegion& box);

}  // namespace idpg::quad

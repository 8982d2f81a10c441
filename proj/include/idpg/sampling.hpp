#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idpg/latent.hpp"
#include "idpg/rng.hpp"

namespace idpg {

enum class RealizationRule { Perennial, Ephemeral, Lifetime, AsymmetricEphemeral };

std::string to_string(RealizationRule rule);
RealizationRule rule_from_string(const std::string& name);

struct GraphNode {
    Position position;
    std::optional<int> species;
    std::optional<double> birth;
    std::optional<double> lifetime;
};

using Edge = std::pair<std::size_t, std::size_t>;

struct SampledGraph {
    RealizationRule rule = RealizationRule::Perennial;
    double eta = 0.0;     // Lifetime only
    double window = 0.0;  // Lifetime only
    bool include_self_loops = false;
    std::vector<GraphNode> nodes;
    std::vector<Edge> edges;
    std::vector<Edge> pairs;  // Ephemeral and AsymmetricEphemeral pairing

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }
    /// Throws std::logic_error when a structural invariant is broken.
    void validate() const;
};

/// N ~ Poisson(Lambda) positions drawn i.i.d. from rho / Lambda.
std::vector<GraphNode> sample_positions(const IntensityModel& model, SeededRng& rng);

SampledGraph sample_perennial(const IntensityModel& model, SeededRng& rng, bool include_self_loops);
/// Edge trials of the perennial rule for fixed nodes.
std::vector<Edge> roll_perennial_edges(const std::vector<GraphNode>& nodes, SeededRng& rng, bool include_self_loops);
/// M ~ Poisson(Lambda/2) pairs; four trials per pair (i->j, j->i, i->i, j->j).
SampledGraph sample_ephemeral(const IntensityModel& model, SeededRng& rng);
/// Births ~ U(0, window), lifetimes ~ Exp(mean eta); ordered pairs with overlapping
/// lifetimes get an edge trial. Self-pairs always overlap and are tried unless excluded.
SampledGraph sample_lifetime(const IntensityModel& model, double eta, double window, SeededRng& rng,
                             bool include_self_pairs = true);
SampledGraph sample_asymmetric_ephemeral(const IntensityModel& source_model, const IntensityModel& target_model,
                                         double lambda_ref, SeededRng& rng);

/// Induced subgraph on nodes with total degree >= 1 (self-loops count).
SampledGraph observed_subgraph(const SampledGraph& graph);

bool lifetimes_overlap(const GraphNode& a, const GraphNode& b);

}  // namespace idpg

#include "idpg/sampling.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace idpg {

std::string to_string(RealizationRule rule) {
    switch (rule) {
        case RealizationRule::Perennial: return "perennial";
        case RealizationRule::Ephemeral: return "ephemeral";
        case RealizationRule::Lifetime: return "lifetime";
        case RealizationRule::AsymmetricEphemeral: return "asymmetric_ephemeral";
    }
    return "unknown";
}

RealizationRule rule_from_string(const std::string& name) {
    if (name == "perennial") return RealizationRule::Perennial;
    if (name == "ephemeral") return RealizationRule::Ephemeral;
    if (name == "lifetime") return RealizationRule::Lifetime;
    if (name == "asymmetric_ephemeral") return RealizationRule::AsymmetricEphemeral;
    throw std::invalid_argument("unknown realization rule: " + name);
}

bool lifetimes_overlap(const GraphNode& a, const GraphNode& b) {
    if (!a.birth || !a.lifetime || !b.birth || !b.lifetime) throw std::logic_error("node has no lifetime");
    return std::max(*a.birth, *b.birth) < std::min(*a.birth + *a.lifetime, *b.birth + *b.lifetime);
}

void SampledGraph::validate() const {
    const std::size_t n = nodes.size();
    std::set<Edge> seen;
    for (const auto& e : edges) {
        if (e.first >= n || e.second >= n) throw std::logic_error("edge endpoint out of range");
        if (!seen.insert(e).second) throw std::logic_error("duplicate edge");
        if (e.first == e.second && rule == RealizationRule::Perennial && !include_self_loops)
            throw std::logic_error("self-loop in a graph sampled without self-loops");
    }
    if (rule == RealizationRule::Ephemeral || rule == RealizationRule::AsymmetricEphemeral) {
        if (n % 2 != 0) throw std::logic_error("paired graph with an odd node count");
        std::vector<std::size_t> partner(n, n);
        for (const auto& p : pairs) {
            if (p.first >= n || p.second >= n || p.first == p.second) throw std::logic_error("bad pairing entry");
            if (partner[p.first] != n || partner[p.second] != n) throw std::logic_error("node paired twice");
            partner[p.first] = p.second;
            partner[p.second] = p.first;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (partner[i] == n) throw std::logic_error("unpaired node");
        }
        for (const auto& e : edges) {
            if (e.first != e.second && partner[e.first] != e.second) throw std::logic_error("edge crosses pairs");
        }
    }
    if (rule == RealizationRule::Lifetime) {
        for (const auto& e : edges) {
            if (!lifetimes_overlap(nodes[e.first], nodes[e.second])) throw std::logic_error("edge between non-overlapping lifetimes");
        }
    }
}

std::vector<GraphNode> sample_positions(const IntensityModel& model, SeededRng& rng) {
    std::uint64_t n = rng.poisson(model.total_intensity());
    std::vector<GraphNode> nodes;
    nodes.reserve(n);
    const bool labelled = model.kind() == IntensityModel::Kind::Mixture;
    for (std::uint64_t i = 0; i < n; ++i) {
        int species = 0;
        GraphNode node;
        node.position = model.draw(rng, &species);
        if (labelled) node.species = species;
        nodes.push_back(std::move(node));
    }
    return nodes;
}

std::vector<Edge> roll_perennial_edges(const std::vector<GraphNode>& nodes, SeededRng& rng, bool include_self_loops) {
    std::vector<Edge> edges;
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& gi = nodes[i].position.g;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j && !include_self_loops) continue;
            if (rng.bernoulli(gi.dot(nodes[j].position.r))) edges.emplace_back(i, j);
        }
    }
    return edges;
}

SampledGraph sample_perennial(const IntensityModel& model, SeededRng& rng, bool include_self_loops) {
    SampledGraph g;
    g.rule = RealizationRule::Perennial;
    g.include_self_loops = include_self_loops;
    g.nodes = sample_positions(model, rng);
    g.edges = roll_perennial_edges(g.nodes, rng, include_self_loops);
    return g;
}

namespace {

void try_edge(SampledGraph& g, std::size_t s, std::size_t t, SeededRng& rng) {
    if (rng.bernoulli(g.nodes[s].position.g.dot(g.nodes[t].position.r))) g.edges.emplace_back(s, t);
}

}  // namespace

SampledGraph sample_ephemeral(const IntensityModel& model, SeededRng& rng) {
    SampledGraph g;
    g.rule = RealizationRule::Ephemeral;
    g.include_self_loops = true;
    std::uint64_t m = rng.poisson(model.total_intensity() / 2.0);
    const bool labelled = model.kind() == IntensityModel::Kind::Mixture;
    for (std::uint64_t k = 0; k < m; ++k) {
        std::size_t i = g.nodes.size();
        for (int side = 0; side < 2; ++side) {
            int species = 0;
            GraphNode node;
            node.position = model.draw(rng, &species);
            if (labelled) node.species = species;
            g.nodes.push_back(std::move(node));
        }
        std::size_t j = i + 1;
        g.pairs.emplace_back(i, j);
        try_edge(g, i, j, rng);
        try_edge(g, j, i, rng);
        try_edge(g, i, i, rng);
        try_edge(g, j, j, rng);
    }
    return g;
}

SampledGraph sample_lifetime(const IntensityModel& model, double eta, double window, SeededRng& rng,
                             bool include_self_pairs) {
    if (!(eta > 0.0) || !(window > 0.0)) throw std::invalid_argument("eta and window must be positive");
    SampledGraph g;
    g.rule = RealizationRule::Lifetime;
    g.eta = eta;
    g.window = window;
    g.include_self_loops = include_self_pairs;
    g.nodes = sample_positions(model, rng);
    for (auto& node : g.nodes) {
        node.birth = rng.uniform() * window;
        node.lifetime = rng.exponential(eta);
    }
    const std::size_t n = g.nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j ? !include_self_pairs : !lifetimes_overlap(g.nodes[i], g.nodes[j])) continue;
            try_edge(g, i, j, rng);
        }
    }
    return g;
}

SampledGraph sample_asymmetric_ephemeral(const IntensityModel& source_model, const IntensityModel& target_model,
                                         double lambda_ref, SeededRng& rng) {
    if (source_model.dim() != target_model.dim()) throw std::invalid_argument("source and target dimensions differ");
    if (!(lambda_ref > 0.0)) throw std::invalid_argument("lambda_ref must be positive");
    if (!(source_model.total_intensity() > 0.0) || !(target_model.total_intensity() > 0.0))
        throw std::invalid_argument("zero-mass model");
    SampledGraph g;
    g.rule = RealizationRule::AsymmetricEphemeral;
    std::uint64_t m = rng.poisson(lambda_ref / 2.0);
    auto labelled = [](const IntensityModel& mdl) { return mdl.kind() == IntensityModel::Kind::Mixture; };
    for (std::uint64_t k = 0; k < m; ++k) {
        std::size_t s = g.nodes.size();
        int species = 0;
        GraphNode src;
        src.position = source_model.draw(rng, &species);
        if (labelled(source_model)) src.species = species;
        GraphNode tgt;
        tgt.position = target_model.draw(rng, &species);
        if (labelled(target_model)) tgt.species = species;
        g.nodes.push_back(std::move(src));
        g.nodes.push_back(std::move(tgt));
        g.pairs.emplace_back(s, s + 1);
        try_edge(g, s, s + 1, rng);
    }
    return g;
}

SampledGraph observed_subgraph(const SampledGraph& graph) {
    const std::size_t n = graph.nodes.size();
    std::vector<std::size_t> degree(n, 0);
    for (const auto& e : graph.edges) {
        ++degree[e.first];
        ++degree[e.second];
    }
    std::vector<std::size_t> remap(n, n);
    SampledGraph out;
    out.rule = graph.rule;
    out.eta = graph.eta;
    out.window = graph.window;
    out.include_self_loops = graph.include_self_loops;
    for (std::size_t i = 0; i < n; ++i) {
        if (degree[i] == 0) continue;
        remap[i] = out.nodes.size();
        out.nodes.push_back(graph.nodes[i]);
    }
    for (const auto& e : graph.edges) out.edges.emplace_back(remap[e.first], remap[e.second]);
    for (const auto& p : graph.pairs) {
        if (remap[p.first] != n && remap[p.second] != n) out.pairs.emplace_back(remap[p.first], remap[p.second]);
    }
    return out;
}

}  // namespace idpg

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "idpg/foodweb.hpp"
#include "idpg/latent.hpp"
#include "idpg/sampling.hpp"

namespace idpg {

using Json = nlohmann::json;

// Grid fields are stored as a JSON header plus a float64 little-endian row-major
// payload (last axis fastest). The header's "payload" is relative to the header.

/// Writes header to `header_path` and the payload next to it with extension .bin.
void write_grid_field(const GridField& field, const std::filesystem::path& header_path);
GridField read_grid_field(const std::filesystem::path& header_path);

// Intensity models:
//   {"dim": d, "kind": "product", "green": M, "red": M}
//   {"dim": d, "kind": "mixture", "components": [{"label", "green": M, "red": M}]}
//   {"dim": 1, "kind": "tabulated", "joint": "joint.json"}
// with marginals M one of
//   {"type": "uniform_ball", "mass"}
//   {"type": "trunc_gaussian", "mean": [..], "kappa": [..] or scalar, "mass"}
//   {"type": "grid", "field": "field.json"}
// File references resolve against `base_dir`.

IntensityModel model_from_json(const Json& j, const std::filesystem::path& base_dir = {});
IntensityModel load_model(const std::filesystem::path& path);
/// Tabulated parts are written as grid files beside `path`.
void save_model(const IntensityModel& model, const std::filesystem::path& path);

Json graph_to_json(const SampledGraph& graph);
SampledGraph graph_from_json(const Json& j);
/// One "s t" line per edge.
void write_edge_list(const SampledGraph& graph, std::ostream& out);

struct GuildConfig {
    std::vector<GuildSpec> guilds;
    Mat target_affinity;  // empty when absent
    int dim = 0;
};

GuildConfig guild_config_from_json(const Json& j);
GuildConfig load_guild_config(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace idpg

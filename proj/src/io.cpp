#include "idpg/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace idpg {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "grid payloads assume a little-endian host");

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

Vec vec_of(const Json& j, const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array()) throw std::invalid_argument(std::string(key) + " must be an array");
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

/// Scalar or per-dimension array.
Vec kappa_of(const Json& j, const char* key, int d) {
    if (j.at(key).is_number()) return Vec::Constant(d, j.at(key).get<double>());
    Vec k = vec_of(j, key);
    if (k.size() != d) throw std::invalid_argument(std::string(key) + " length differs from the mean");
    return k;
}

Json array_of(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

std::string mask_kind(const GridField& f) {
    if (f.mask == GridField::on_ball(f.dim, f.points_per_axis).mask) return "ball";
    if (f.mask == GridField::on_box(f.dim, f.points_per_axis).mask) return "box";
    return "explicit";
}

MarginalIntensity marginal_from_json(const Json& j, const fs::path& base, int dim_hint) {
    const auto type = j.at("type").get<std::string>();
    if (type == "uniform_ball") return MarginalIntensity::uniform_ball(j.value("dim", dim_hint), j.value("mass", 1.0));
    if (type == "trunc_gaussian") {
        Vec mean = vec_of(j, "mean");
        return MarginalIntensity::trunc_gaussian(
            {mean, kappa_of(j, "kappa", static_cast<int>(mean.size())), j.value("mass", 1.0)});
    }
    if (type == "grid") return MarginalIntensity::tabulated(read_grid_field(base / j.at("field").get<std::string>()));
    throw std::invalid_argument("unknown marginal type: " + type);
}

Json marginal_to_json(const MarginalIntensity& m, const fs::path& path, const std::string& stem) {
    switch (m.kind()) {
        case MarginalIntensity::Kind::UniformBall:
            return {{"type", "uniform_ball"}, {"dim", m.dim()}, {"mass", m.mass()}};
        case MarginalIntensity::Kind::TruncGaussian:
            return {{"type", "trunc_gaussian"},
                    {"mean", array_of(m.gaussian().mean)},
                    {"kappa", array_of(m.gaussian().kappa)},
                    {"mass", m.mass()}};
        case MarginalIntensity::Kind::GridTabulated: {
            auto header = path.parent_path() / (path.stem().string() + "." + stem + ".json");
            write_grid_field(m.grid(), header);
            return {{"type", "grid"}, {"field", header.filename().string()}};
        }
    }
    throw std::logic_error("unreachable");
}

Json position_array(const Vec& v) { return array_of(v); }

}  // namespace

Json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open for reading");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(path, e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << text;
    if (!out) fail(path, "write failed");
}

void write_grid_field(const GridField& field, const fs::path& header_path) {
    field.validate();
    fs::path payload = header_path;
    payload.replace_extension(".bin");
    Json h = {{"dim", field.dim},
              {"points_per_axis", field.points_per_axis},
              {"spacing", field.spacing},
              {"dtype", "float64"},
              {"byte_order", "little"},
              {"layout", "row-major"},
              {"payload", payload.filename().string()}};
    std::string kind = mask_kind(field);
    if (kind == "explicit") {
        h["mask"] = field.mask;
    } else {
        h["mask"] = kind;
    }
    write_text_file(header_path, h.dump(2) + "\n");
    std::ofstream out(payload, std::ios::binary);
    if (!out) fail(payload, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (!out) fail(payload, "write failed");
}

GridField read_grid_field(const fs::path& header_path) {
    Json h = read_json_file(header_path);
    if (h.value("dtype", "float64") != "float64" || h.value("byte_order", "little") != "little")
        fail(header_path, "only float64 little-endian payloads are supported");
    const int dim = h.at("dim").get<int>();
    const int n = h.at("points_per_axis").get<int>();
    GridField f = h.at("mask").is_string() && h.at("mask") == "ball" ? GridField::on_ball(dim, n) : GridField::on_box(dim, n);
    if (h.at("mask").is_array()) {
        f.mask = h.at("mask").get<std::vector<std::uint8_t>>();
        if (f.mask.size() != f.values.size()) fail(header_path, "mask length does not match the grid");
    } else if (h.at("mask") != "ball" && h.at("mask") != "box") {
        fail(header_path, "unknown mask kind");
    }
    if (std::fabs(h.at("spacing").get<double>() - f.spacing) > 1e-12) fail(header_path, "spacing is not 1/points_per_axis");
    fs::path payload = header_path.parent_path() / h.at("payload").get<std::string>();
    std::ifstream in(payload, std::ios::binary | std::ios::ate);
    if (!in) fail(payload, "cannot open for reading");
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != f.values.size() * sizeof(double)) fail(payload, "payload size does not match the header");
    in.seekg(0);
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(bytes));
    if (!in) fail(payload, "read failed");
    f.validate();
    return f;
}

IntensityModel model_from_json(const Json& j, const fs::path& base_dir) {
    const auto kind = j.at("kind").get<std::string>();
    const int hint = j.value("dim", 0);
    IntensityModel model = [&] {
        if (kind == "product")
            return IntensityModel::product(marginal_from_json(j.at("green"), base_dir, hint), marginal_from_json(j.at("red"), base_dir, hint));
        if (kind == "mixture") {
            std::vector<MixtureComponent> comps;
            for (const auto& c : j.at("components"))
                comps.push_back({c.value("label", ""), marginal_from_json(c.at("green"), base_dir, hint),
                                 marginal_from_json(c.at("red"), base_dir, hint)});
            return IntensityModel::mixture(std::move(comps));
        }
        if (kind == "tabulated") return IntensityModel::tabulated(read_grid_field(base_dir / j.at("joint").get<std::string>()));
        throw std::invalid_argument("unknown model kind: " + kind);
    }();
    if (j.contains("dim") && j.at("dim").get<int>() != model.dim())
        throw std::invalid_argument("model dim does not match its marginals");
    return model;
}

IntensityModel load_model(const fs::path& path) {
    try {
        return model_from_json(read_json_file(path), path.parent_path());
    } catch (const Json::exception& e) {
        fail(path, e.what());
    }
}

void save_model(const IntensityModel& model, const fs::path& path) {
    Json j = {{"dim", model.dim()}};
    switch (model.kind()) {
        case IntensityModel::Kind::Product:
            j["kind"] = "product";
            j["green"] = marginal_to_json(model.components()[0].green, path, "green");
            j["red"] = marginal_to_json(model.components()[0].red, path, "red");
            break;
        case IntensityModel::Kind::Mixture: {
            j["kind"] = "mixture";
            Json comps = Json::array();
            for (std::size_t i = 0; i < model.components().size(); ++i) {
                const auto& c = model.components()[i];
                comps.push_back({{"label", c.label},
                                 {"green", marginal_to_json(c.green, path, "green" + std::to_string(i))},
                                 {"red", marginal_to_json(c.red, path, "red" + std::to_string(i))}});
            }
            j["components"] = comps;
            break;
        }
        case IntensityModel::Kind::Tabulated: {
            j["kind"] = "tabulated";
            auto header = path.parent_path() / (path.stem().string() + ".joint.json");
            write_grid_field(model.joint(), header);
            j["joint"] = header.filename().string();
            break;
        }
    }
    write_text_file(path, j.dump(2) + "\n");
}

Json graph_to_json(const SampledGraph& graph) {
    Json nodes = Json::array();
    for (const auto& n : graph.nodes) {
        Json node = {{"g", position_array(n.position.g)}, {"r", position_array(n.position.r)}};
        node["species"] = n.species ? Json(*n.species) : Json(nullptr);
        node["birth"] = n.birth ? Json(*n.birth) : Json(nullptr);
        node["lifetime"] = n.lifetime ? Json(*n.lifetime) : Json(nullptr);
        nodes.push_back(std::move(node));
    }
    Json j = {{"rule", to_string(graph.rule)}, {"nodes", std::move(nodes)}};
    j["edges"] = Json::array();
    for (const auto& e : graph.edges) j["edges"].push_back({e.first, e.second});
    j["pairs"] = Json::array();
    for (const auto& p : graph.pairs) j["pairs"].push_back({p.first, p.second});
    j["include_self_loops"] = graph.include_self_loops;
    if (graph.rule == RealizationRule::Lifetime) {
        j["eta"] = graph.eta;
        j["window"] = graph.window;
    }
    return j;
}

SampledGraph graph_from_json(const Json& j) {
    SampledGraph g;
    g.rule = rule_from_string(j.at("rule").get<std::string>());
    g.include_self_loops = j.value("include_self_loops", false);
    g.eta = j.value("eta", 0.0);
    g.window = j.value("window", 0.0);
    for (const auto& n : j.at("nodes")) {
        GraphNode node{{vec_of(n, "g"), vec_of(n, "r")}, {}, {}, {}};
        if (n.contains("species") && !n["species"].is_null()) node.species = n["species"].get<int>();
        if (n.contains("birth") && !n["birth"].is_null()) node.birth = n["birth"].get<double>();
        if (n.contains("lifetime") && !n["lifetime"].is_null()) node.lifetime = n["lifetime"].get<double>();
        g.nodes.push_back(std::move(node));
    }
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    if (j.contains("pairs"))
        for (const auto& p : j.at("pairs")) g.pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    g.validate();
    return g;
}

void write_edge_list(const SampledGraph& graph, std::ostream& out) {
    for (const auto& e : graph.edges) out << e.first << ' ' << e.second << '\n';
}

GuildConfig guild_config_from_json(const Json& j) {
    GuildConfig cfg;
    for (const auto& g : j.at("guilds")) {
        Vec mg = vec_of(g, "mean_g"), mr = vec_of(g, "mean_r");
        const int d = static_cast<int>(mg.size());
        if (mr.size() != d) throw std::invalid_argument("guild mean_g and mean_r dimensions differ");
        if (cfg.dim == 0) cfg.dim = d;
        if (cfg.dim != d) throw std::invalid_argument("guilds must share the latent dimension");
        GuildSpec spec;
        spec.label = g.at("label").get<std::string>();
        spec.green = {mg, kappa_of(g, "kappa_g", d), g.at("mass_g").get<double>()};
        spec.red = {mr, kappa_of(g, "kappa_r", d), g.at("mass_r").get<double>()};
        spec.w_S = g.value("w_S", 1.0);
        spec.w_T = g.value("w_T", 1.0);
        check_latent(spec.green.mean, d, "guild mean_g");
        check_latent(spec.red.mean, d, "guild mean_r");
        cfg.guilds.push_back(std::move(spec));
    }
    if (cfg.guilds.empty()) throw std::invalid_argument("guild config has no guilds");
    if (j.contains("target_affinity")) {
        const auto& t = j.at("target_affinity");
        const auto m = static_cast<Eigen::Index>(cfg.guilds.size());
        if (t.size() != cfg.guilds.size()) throw std::invalid_argument("target_affinity must be M x M");
        cfg.target_affinity.resize(m, m);
        for (Eigen::Index a = 0; a < m; ++a) {
            const auto& row = t.at(static_cast<std::size_t>(a));
            if (row.size() != cfg.guilds.size()) throw std::invalid_argument("target_affinity must be M x M");
            for (Eigen::Index b = 0; b < m; ++b) cfg.target_affinity(a, b) = row.at(static_cast<std::size_t>(b)).get<double>();
        }
    }
    return cfg;
}

GuildConfig load_guild_config(const fs::path& path) {
    try {
        return guild_config_from_json(read_json_file(path));
    } catch (const Json::exception& e) {
        fail(path, e.what());
    }
}

}  // namespace idpg

#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "idpg/io.hpp"
#include "test_util.hpp"

using namespace idpg;
using testutil::v;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "idpg_test_io" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("grid field round trip is bit exact, including explicit masks") {
    auto dir = scratch("grid");
    GridField f = GridField::on_ball(2, 17);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.mask[i]) f.values[i] = 1.0 / 3.0 + static_cast<double>(i) * 1e-7;
    write_grid_field(f, dir / "f.json");
    CHECK(fs::file_size(dir / "f.bin") == f.size() * sizeof(double));
    GridField back = read_grid_field(dir / "f.json");
    CHECK(back.same_layout(f));
    CHECK(back.values == f.values);
    CHECK(back.mask == f.mask);

    GridField g = GridField::on_box(1, 8);
    g.mask[3] = 0;
    g.values.assign(8, 2.0);
    g.values[3] = 0.0;
    write_grid_field(g, dir / "g.json");
    CHECK(read_json_file(dir / "g.json")["mask"].is_array());
    CHECK(read_grid_field(dir / "g.json").mask == g.mask);
}

TEST_CASE("truncated payload is rejected with the path in the message") {
    auto dir = scratch("bad");
    GridField f = GridField::on_box(1, 4);
    f.values.assign(4, 1.0);
    write_grid_field(f, dir / "f.json");
    fs::resize_file(dir / "f.bin", 8);
    try {
        read_grid_field(dir / "f.json");
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("f.bin") != std::string::npos);
    }
}

TEST_CASE("model round trips preserve densities and total intensity") {
    auto dir = scratch("model");
    GridField tab = GridField::on_ball(1, 32);
    for (std::size_t i = 0; i < tab.size(); ++i) tab.values[i] = 1.0 + static_cast<double>(i);
    std::vector<IntensityModel> models = {
        testutil::uniform_product(2, 3.0, 2.0),
        IntensityModel::mixture({{"a", MarginalIntensity::trunc_gaussian({v({0.2, 0.7}), v({30, 50}), 4.0}),
                                  MarginalIntensity::uniform_ball(2, 1.5)},
                                 {"b", MarginalIntensity::uniform_ball(2, 2.0),
                                  MarginalIntensity::trunc_gaussian({v({0.6, 0.3}), v({20, 20}), 1.0})}}),
        IntensityModel::product(MarginalIntensity::tabulated(tab), MarginalIntensity::uniform_ball(1, 2.0)),
    };
    GridField joint = GridField::on_box(2, 16);
    for (std::size_t i = 0; i < joint.size(); ++i) joint.values[i] = 0.5 + 0.01 * static_cast<double>(i % 7);
    models.push_back(IntensityModel::tabulated(joint));

    for (std::size_t k = 0; k < models.size(); ++k) {
        auto path = dir / ("m" + std::to_string(k) + ".json");
        save_model(models[k], path);
        IntensityModel back = load_model(path);
        CHECK(back.kind() == models[k].kind());
        CHECK(back.dim() == models[k].dim());
        CHECK(back.total_intensity() == doctest::Approx(models[k].total_intensity()).epsilon(1e-12));
        const int d = models[k].dim();
        for (double a : {0.1, 0.35, 0.6}) {
            Position p{Vec::Constant(d, a / std::sqrt(d)), Vec::Constant(d, (0.7 - a) / std::sqrt(d))};
            CHECK(evaluate_intensity(back, p) == doctest::Approx(evaluate_intensity(models[k], p)).epsilon(1e-12));
        }
    }
}

TEST_CASE("model JSON accepts scalar kappa and checks dim and kind") {
    Json j = Json::parse(R"({"dim": 2, "kind": "product",
        "green": {"type": "trunc_gaussian", "mean": [0.6, 0.4], "kappa": 15, "mass": 10},
        "red": {"type": "uniform_ball", "mass": 10}})");
    IntensityModel m = model_from_json(j);
    CHECK(m.total_intensity() == doctest::Approx(100.0));
    CHECK(m.components()[0].green.gaussian().kappa == v({15, 15}));
    j["dim"] = 3;
    CHECK_THROWS(model_from_json(j));
    j["kind"] = "bogus";
    CHECK_THROWS_WITH(model_from_json(j), doctest::Contains("unknown model kind"));
}

TEST_CASE("sampled graph JSON and edge list round trip") {
    SeededRng rng(5, 1);
    auto model = testutil::uniform_product(1, 4.0, 4.0);
    for (auto graph : {sample_perennial(model, rng, false), sample_ephemeral(model, rng),
                       sample_lifetime(model, 0.5, 1.0, rng)}) {
        Json j = graph_to_json(graph);
        CHECK(j["rule"] == to_string(graph.rule));
        SampledGraph back = graph_from_json(Json::parse(j.dump()));
        CHECK(back.rule == graph.rule);
        REQUIRE(back.nodes.size() == graph.nodes.size());
        CHECK(back.edges == graph.edges);
        CHECK(back.pairs == graph.pairs);
        for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
            CHECK(back.nodes[i].position.g == graph.nodes[i].position.g);
            CHECK(back.nodes[i].birth == graph.nodes[i].birth);
            CHECK(back.nodes[i].lifetime == graph.nodes[i].lifetime);
        }
        std::ostringstream out;
        write_edge_list(graph, out);
        std::istringstream in(out.str());
        std::size_t s = 0, t = 0, count = 0;
        while (in >> s >> t) {
            CHECK(Edge{s, t} == graph.edges[count]);
            ++count;
        }
        CHECK(count == graph.edges.size());
    }
}

TEST_CASE("guild config parsing") {
    Json j = Json::parse(R"({"guilds": [
        {"label": "P", "mean_g": [0.8, 0.1], "mean_r": [0.1, 0.1], "kappa_g": [500, 30], "kappa_r": 30,
         "mass_g": 4, "mass_r": 2, "w_S": 1, "w_T": 0},
        {"label": "H", "mean_g": [0.2, 0.6], "mean_r": [0.7, 0.2], "kappa_g": 30, "kappa_r": 30,
         "mass_g": 2, "mass_r": 2}],
        "target_affinity": [[0.1, 0.6], [0.05, 0.2]]})");
    GuildConfig cfg = guild_config_from_json(j);
    REQUIRE(cfg.guilds.size() == 2);
    CHECK(cfg.dim == 2);
    CHECK(cfg.guilds[0].gamma() == 8.0);
    CHECK(cfg.guilds[0].w_T == 0.0);
    CHECK(cfg.guilds[1].w_S == 1.0);
    CHECK(cfg.guilds[0].green.kappa == v({500, 30}));
    CHECK(cfg.target_affinity(0, 1) == 0.6);
    j["target_affinity"] = Json::parse("[[0.1, 0.6]]");
    CHECK_THROWS(guild_config_from_json(j));
    j.erase("target_affinity");
    j["guilds"][0]["mean_g"] = Json::parse("[0.9, 0.9]");
    CHECK_THROWS(guild_config_from_json(j));
}

TEST_CASE("shipped five-guild config loads and its centroids fit") {
    GuildConfig cfg = load_guild_config(fs::path(IDPG_SOURCE_DIR) / "configs" / "foodweb_five_guilds.json");
    REQUIRE(cfg.guilds.size() == 5);
    CHECK(cfg.dim == 4);
    CHECK(cfg.guilds[0].green.kappa == v({500, 30, 30, 30}));
    REQUIRE(cfg.target_affinity.rows() == 5);
    CentroidFit fit = fit_guild_centroids(cfg.target_affinity, cfg.dim, 7);
    CHECK(fit.converged);
}

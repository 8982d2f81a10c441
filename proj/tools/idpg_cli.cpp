// idpg: command-line front end for sampling, expectations, heat, spectra, PDE runs,
// food-web guild matrices and the experiment harness.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "idpg/expectations.hpp"
#include "idpg/experiments.hpp"
#include "idpg/foodweb.hpp"
#include "idpg/heat.hpp"
#include "idpg/io.hpp"
#include "idpg/pde.hpp"
#include "idpg/sampling.hpp"
#include "idpg/spectral.hpp"

namespace fs = std::filesystem;
using namespace idpg;

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_text_file(out, text);
    }
}

EdgeRule edge_rule(const std::string& rule, double eta, double window, bool self) {
    if (rule == "perennial") return EdgeRule{self ? EdgeRule::Kind::PerennialWithLoops : EdgeRule::Kind::PerennialDistinct};
    if (rule == "ephemeral") return EdgeRule{EdgeRule::Kind::Ephemeral};
    if (rule == "asymmetric_ephemeral") return EdgeRule{EdgeRule::Kind::AsymmetricEphemeral};
    if (rule == "lifetime") return EdgeRule::lifetime(eta, window, self);
    throw std::invalid_argument("unknown rule: " + rule);
}

std::string trajectory_csv(const Trajectory& traj, int d) {
    std::ostringstream out;
    out << "time,mass_G,mass_R,lambda,bound_heat,expected_perennial_edges,expected_ephemeral_edges,ratio";
    for (int a = 0; a < d; ++a) out << ",centroid_G" << a + 1;
    for (int a = 0; a < d; ++a) out << ",centroid_R" << a + 1;
    out << "\n";
    for (const auto& s : traj.snapshots) {
        out << num(s.time) << ',' << num(s.mass_G) << ',' << num(s.mass_R) << ',' << num(s.lambda) << ','
            << num(s.bound_heat) << ',' << num(s.expected_perennial_edges) << ',' << num(s.expected_ephemeral_edges) << ','
            << num(s.ratio);
        for (int a = 0; a < d; ++a) out << ',' << num(s.centroid_G[a]);
        for (int a = 0; a < d; ++a) out << ',' << num(s.centroid_R[a]);
        out << "\n";
    }
    return out.str();
}

std::string matrix_csv(const std::vector<std::string>& labels, const Mat& m) {
    std::ostringstream out;
    out << "source";
    for (const auto& l : labels) out << ',' << l;
    out << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << num(m(i, j));
        out << "\n";
    }
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intensity dot product graph toolkit"};
    app.require_subcommand(1);

    // sample
    auto* sample = app.add_subcommand("sample", "Sample a graph from an intensity model");
    std::string model_path, rule = "perennial", out, edge_list;
    double eta = 1.0, window = 1.0;
    std::uint64_t seed = 1;
    bool self_loops = false;
    sample->add_option("--model", model_path, "Intensity model JSON")->required()->check(CLI::ExistingFile);
    sample->add_option("--rule", rule, "perennial | ephemeral | lifetime");
    sample->add_option("--eta", eta, "Mean lifetime (lifetime rule)");
    sample->add_option("--window", window, "Observation window (lifetime rule)");
    sample->add_option("--seed", seed, "Root seed");
    sample->add_flag("--self-loops", self_loops, "Perennial: allow self-loops; lifetime: try self-pairs");
    sample->add_option("--out", out, "Graph JSON path ('-' for stdout)");
    sample->add_option("--edge-list", edge_list, "Also write an 's t' edge list");

    // expect
    auto* expect = app.add_subcommand("expect", "Closed-form expected edge count");
    expect->add_option("--model", model_path, "Intensity model JSON")->required()->check(CLI::ExistingFile);
    expect->add_option("--rule", rule, "perennial | ephemeral | lifetime | asymmetric_ephemeral");
    expect->add_option("--eta", eta, "Mean lifetime (lifetime rule)");
    expect->add_option("--window", window, "Observation window (lifetime rule)");
    expect->add_flag("--self-loops", self_loops, "Count self-loops / self-pairs");

    // heat
    auto* heat = app.add_subcommand("heat", "Bound heat on a grid over (g, r) as CSV");
    int resolution = 64;
    heat->add_option("--model", model_path, "Product intensity model JSON, d <= 2")->required()->check(CLI::ExistingFile);
    heat->add_option("--resolution", resolution, "Cells per axis");
    heat->add_option("--out", out, "CSV path ('-' for stdout)");

    // spectral
    auto* spectral = app.add_subcommand("spectral", "Scaled adjacency spectrum of a sampled graph");
    int top_k = 4;
    spectral->add_option("--model", model_path, "Intensity model JSON")->required()->check(CLI::ExistingFile);
    spectral->add_option("--k", top_k, "Number of singular values");
    spectral->add_option("--seed", seed, "Root seed");
    spectral->add_option("--out", out, "JSON path ('-' for stdout)");

    // pde
    auto* pde = app.add_subcommand("pde", "Evolve the marginals and write the trajectory CSV");
    std::string regime = "diffusion", bc = "reflecting";
    double nu = 0.01, t_end = 1.0, rate = 1.0, capacity = 1.0, robin_alpha = 1.0, robin_beta = 1.0;
    double alpha = 1.0, beta = 1.0, gamma = 0.2;
    std::vector<double> velocity, x0;
    int grid = 64, every = 10;
    pde->add_option("--model", model_path, "Product intensity model JSON, d <= 2")->required()->check(CLI::ExistingFile);
    pde->add_option("--regime", regime, "diffusion | advection | reaction_diffusion | pursuit_evasion");
    pde->add_option("--bc", bc, "reflecting | absorbing | robin");
    pde->add_option("--robin-alpha", robin_alpha);
    pde->add_option("--robin-beta", robin_beta);
    pde->add_option("--nu", nu, "Diffusion coefficient");
    pde->add_option("--velocity", velocity, "Advection velocity, one entry per dimension");
    pde->add_option("--rate", rate, "Logistic growth rate");
    pde->add_option("--capacity", capacity, "Logistic capacity");
    pde->add_option("--alpha", alpha);
    pde->add_option("--beta", beta);
    pde->add_option("--gamma", gamma);
    pde->add_option("--x0", x0, "Pursuit reference point");
    pde->add_option("--grid", grid, "Cells per axis");
    pde->add_option("--t-end", t_end, "Final time");
    pde->add_option("--snapshot-every", every, "Steps between snapshots");
    pde->add_option("--out", out, "Trajectory CSV path ('-' for stdout)");

    // foodweb
    auto* foodweb = app.add_subcommand("foodweb", "Guild edge matrix, centroid fit and a sampled graph");
    std::string config_path, out_dir = ".";
    foodweb->add_option("--config", config_path, "Guild config JSON")->required()->check(CLI::ExistingFile);
    foodweb->add_option("--out", out_dir, "Output directory");
    foodweb->add_option("--seed", seed, "Root seed");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Run a configured experiment");
    std::string format = "csv";
    int threads = 1;
    std::optional<std::uint64_t> seed_override;
    bool check = false;
    experiment->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    experiment->add_option("--out", out_dir, "Output directory");
    experiment->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    auto* threads_opt = experiment->add_option("--threads", threads, "Worker threads (default: $IDPG_THREADS or 1)")
                              ->check(CLI::PositiveNumber);
    experiment->add_option("--seed", seed_override, "Override the config root seed");
    experiment->add_flag("--check", check, "Exit 2 when an acceptance band is violated");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) {
            IntensityModel model = load_model(model_path);
            SeededRng rng(seed, hash64("sample", 0));
            SampledGraph g;
            if (rule == "perennial") {
                g = sample_perennial(model, rng, self_loops);
            } else if (rule == "ephemeral") {
                g = sample_ephemeral(model, rng);
            } else if (rule == "lifetime") {
                g = sample_lifetime(model, eta, window, rng, self_loops);
            } else {
                throw std::invalid_argument("unknown rule: " + rule);
            }
            emit(graph_to_json(g).dump() + "\n", out);
            if (!edge_list.empty()) {
                std::ostringstream s;
                write_edge_list(g, s);
                write_text_file(edge_list, s.str());
            }
        } else if (*expect) {
            IntensityModel model = load_model(model_path);
            auto s = moments(model);
            Json j = {{"rule", rule},
                      {"lambda", model.total_intensity()},
                      {"expected_edges", expected_edges(s, edge_rule(rule, eta, window, self_loops))}};
            std::cout << j.dump(2) << "\n";
        } else if (*heat) {
            IntensityModel model = load_model(model_path);
            GridField h = bound_heat_grid(model, resolution);
            const int d = model.dim();
            std::ostringstream s;
            for (int a = 0; a < d; ++a) s << (a ? "," : "") << (d == 1 ? "g" : "g" + std::to_string(a + 1));
            for (int a = 0; a < d; ++a) s << ',' << (d == 1 ? "r" : "r" + std::to_string(a + 1));
            s << ",value\n";
            for (std::size_t i = 0; i < h.size(); ++i) {
                if (!h.mask[i]) continue;
                Vec c = h.center(i);
                for (int a = 0; a < 2 * d; ++a) s << num(c[a]) << ',';
                s << num(h.values[i]) << "\n";
            }
            emit(s.str(), out);
        } else if (*spectral) {
            IntensityModel model = load_model(model_path);
            SeededRng rng(seed, hash64("spectral", 0));
            SampledGraph g = sample_perennial(model, rng, false);
            Vec sv = adjacency_spectrum(g, top_k, seed);
            auto m = moments(model);
            Vec ref = desire_singular_values(m.sigma_G, m.sigma_R).values;
            Json j = {{"nodes", g.node_count()},
                      {"singular_values", std::vector<double>(sv.data(), sv.data() + sv.size())},
                      {"reference", std::vector<double>(ref.data(), ref.data() + ref.size())},
                      {"noise_floor", 1.0 / std::sqrt(model.total_intensity())}};
            emit(j.dump(2) + "\n", out);
        } else if (*pde) {
            IntensityModel model = load_model(model_path);
            const int d = model.dim();
            auto vec_arg = [d](const std::vector<double>& xs, double fill) {
                Vec v = Vec::Constant(d, fill);
                if (!xs.empty()) {
                    if (static_cast<int>(xs.size()) != d) throw std::invalid_argument("vector option needs one entry per dimension");
                    for (int a = 0; a < d; ++a) v[a] = xs[static_cast<std::size_t>(a)];
                }
                return v;
            };
            RegimeSpec spec;
            if (regime == "diffusion") {
                spec = RegimeSpec::diffusion(nu);
            } else if (regime == "advection") {
                spec = RegimeSpec::advection(vec_arg(velocity, 0.0));
            } else if (regime == "reaction_diffusion") {
                spec = RegimeSpec::reaction_diffusion(nu, rate, capacity);
            } else if (regime == "pursuit_evasion") {
                spec = RegimeSpec::pursuit_evasion(alpha, beta, gamma, vec_arg(x0, 0.5));
            } else {
                throw std::invalid_argument("unknown regime: " + regime);
            }
            BoundaryCondition b = bc == "reflecting"  ? BoundaryCondition::reflecting()
                                  : bc == "absorbing" ? BoundaryCondition::absorbing()
                                  : bc == "robin"     ? BoundaryCondition::robin(robin_alpha, robin_beta)
                                                      : throw std::invalid_argument("unknown boundary condition: " + bc);
            PdeState state = PdeState::from_model(model, grid, b, spec);
            Trajectory traj = evolve(state, t_end, 0.9 * stable_dt(state), every);
            emit(trajectory_csv(traj, d), out);
        } else if (*foodweb) {
            GuildConfig cfg = load_guild_config(config_path);
            double lambda = 0.0;
            for (const auto& g : cfg.guilds) lambda += g.gamma();
            GuildEdgeMatrix e = expected_guild_edges(cfg.guilds, lambda);
            fs::create_directories(out_dir);
            write_text_file(fs::path(out_dir) / "guild_expected_edges.csv", matrix_csv(e.labels, e.expected));
            write_text_file(fs::path(out_dir) / "guild_affinity.csv", matrix_csv(e.labels, e.affinity));
            Json summary = {{"lambda", lambda}, {"labels", e.labels}};
            if (cfg.target_affinity.size() > 0) {
                CentroidFit fit = fit_guild_centroids(cfg.target_affinity, cfg.dim, seed);
                Mat fitted(cfg.target_affinity.rows(), cfg.target_affinity.cols());
                for (Eigen::Index i = 0; i < fitted.rows(); ++i)
                    for (Eigen::Index j = 0; j < fitted.cols(); ++j)
                        fitted(i, j) = fit.green[static_cast<std::size_t>(i)].dot(fit.red[static_cast<std::size_t>(j)]);
                write_text_file(fs::path(out_dir) / "guild_fitted_affinity.csv", matrix_csv(e.labels, fitted));
                summary["fit_rmse"] = fit.rmse;
                summary["fit_converged"] = fit.converged;
            }
            SeededRng rng(seed, hash64("foodweb", 0));
            SampledGraph g = sample_perennial(build_mixture(cfg.guilds), rng, false);
            write_text_file(fs::path(out_dir) / "foodweb_graph.json", graph_to_json(g).dump() + "\n");
            summary["nodes"] = g.node_count();
            summary["edges"] = g.edge_count();
            std::cout << summary.dump(2) << "\n";
        } else if (*experiment) {
            ExperimentConfig cfg = ExperimentConfig::load(config_path);
            if (seed_override) cfg.root_seed = *seed_override;
            // Read by hand: an invalid environment value should be an error, not a silent default.
            if (threads_opt->count() == 0) {
                if (const char* env = std::getenv("IDPG_THREADS")) {
                    char* end = nullptr;
                    long v = std::strtol(env, &end, 10);
                    if (end == env || *end != '\0' || v < 1 || v > 4096)
                        throw std::invalid_argument(std::string("IDPG_THREADS must be a positive integer, got '") + env + "'");
                    threads = static_cast<int>(v);
                }
            }
            cfg.threads = threads;
            ResultTable table = run_experiment(cfg);
            const auto ext = format == "json" ? ".json" : ".csv";
            fs::path path = fs::path(out_dir) / (to_string(cfg.kind) + ext);
            write_results(table, path, format == "json" ? ResultFormat::JSON : ResultFormat::CSV);
            std::cout << path.string() << "\n";
            if (check) {
                bool ok = true;
                for (const auto& b : check_bands(table, cfg.kind)) {
                    std::cout << (b.pass ? "PASS " : "FAIL ") << b.name << ": " << num(b.value) << " in [" << num(b.lower) << ", "
                              << num(b.upper) << "]\n";
                    ok = ok && b.pass;
                }
                if (!ok) return 2;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "idpg: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

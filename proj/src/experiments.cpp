#include "idpg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "idpg/expectations.hpp"
#include "idpg/pde.hpp"
#include "idpg/rng.hpp"
#include "idpg/sampling.hpp"
#include "idpg/spectral.hpp"

namespace idpg {

namespace fs = std::filesystem;

namespace {

constexpr double kMaxNodeSamples = 1e8;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<ExperimentKind, std::string>> kNames = {
    {ExperimentKind::Scaling, "Scaling"},
    {ExperimentKind::Overlap, "Overlap"},
    {ExperimentKind::RatioTracking, "RatioTracking"},
    {ExperimentKind::SpectralConvergence, "SpectralConvergence"},
    {ExperimentKind::MultiGraph, "MultiGraph"},
    {ExperimentKind::GrowthOverlap, "GrowthOverlap"},
};

const std::vector<std::string> kRegimes = {"static", "diffusion", "advection_absorbing", "pursuit_evasion"};

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

IntensityModel scaling_model() {
    return IntensityModel::product(MarginalIntensity::trunc_gaussian({vec2(0.6, 0.4), Vec::Constant(2, 15.0), 1.0}),
                                   MarginalIntensity::trunc_gaussian({vec2(0.5, 0.5), Vec::Constant(2, 15.0), 1.0}));
}

IntensityModel ratio_model() {
    return IntensityModel::product(MarginalIntensity::trunc_gaussian({vec2(0.6, 0.3), Vec::Constant(2, 30.0), 1.0}),
                                   MarginalIntensity::trunc_gaussian({vec2(0.3, 0.5), Vec::Constant(2, 30.0), 1.0}));
}

/// Runs f(i) for i in [0, n) on a pool; results must be written by index.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n, 1)))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
};

MeanSe summarize(const std::vector<double>& xs) {
    MeanSe out;
    if (xs.empty()) return {kNaN, kNaN, kNaN};
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    out.se = out.sd / std::sqrt(static_cast<double>(xs.size()));
    return out;
}

/// Replication r of an experiment; tag separates grid points.
SeededRng stream(const ExperimentConfig& cfg, std::uint64_t r, std::uint64_t tag) {
    return SeededRng(cfg.root_seed, hash64(to_string(cfg.kind), r)).child(tag);
}

std::uint64_t svd_seed(std::uint64_t r, std::uint64_t tag) { return hash64("svd", r) ^ splitmix64(tag); }

const IntensityModel& base_model(const ExperimentConfig& cfg, std::optional<IntensityModel>& holder) {
    if (cfg.model) return *cfg.model;
    switch (cfg.kind) {
        case ExperimentKind::Scaling: holder = scaling_model(); break;
        case ExperimentKind::RatioTracking: holder = ratio_model(); break;
        default: holder = spectral_mixture(1.0); break;
    }
    return *holder;
}

std::string key_of(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
}

ResultTable run_scaling(const ExperimentConfig& cfg, const IntensityModel& base) {
    const std::size_t L = cfg.lambdas.size(), R = static_cast<std::size_t>(cfg.replications);
    std::vector<IntensityModel> models;
    std::vector<double> th_p, th_e;
    for (double lam : cfg.lambdas) {
        models.push_back(rescale_intensity(base, lam));
        auto s = moments(models.back());
        th_p.push_back(expected_edges(s, EdgeRule{EdgeRule::Kind::PerennialDistinct}));
        th_e.push_back(expected_edges(s, EdgeRule{EdgeRule::Kind::Ephemeral}));
    }
    std::vector<double> per(L * R), eph(L * R);
    parallel_for(L * R, cfg.threads, [&](std::size_t i) {
        const std::size_t l = i / R, r = i % R;
        SeededRng rng = stream(cfg, r, l);
        per[i] = static_cast<double>(sample_perennial(models[l], rng, false).edge_count());
        eph[i] = static_cast<double>(sample_ephemeral(models[l], rng).edge_count());
    });
    std::vector<double> mp, sp, me, se;
    for (std::size_t l = 0; l < L; ++l) {
        auto a = summarize({per.begin() + static_cast<long>(l * R), per.begin() + static_cast<long>((l + 1) * R)});
        auto b = summarize({eph.begin() + static_cast<long>(l * R), eph.begin() + static_cast<long>((l + 1) * R)});
        mp.push_back(a.mean);
        sp.push_back(a.se);
        me.push_back(b.mean);
        se.push_back(b.se);
    }
    ResultTable t;
    t.add_column("lambda", cfg.lambdas);
    t.add_column("mean_perennial", mp);
    t.add_column("se_perennial", sp);
    t.add_column("theory_perennial", th_p);
    t.add_column("mean_ephemeral", me);
    t.add_column("se_ephemeral", se);
    t.add_column("theory_ephemeral", th_e);
    if (L >= 2) {
        auto fp = loglog_fit(cfg.lambdas, mp, sp);
        auto fe = loglog_fit(cfg.lambdas, me, se);
        t.metadata["slope_perennial"] = fp.slope;
        t.metadata["slope_perennial_se"] = fp.slope_se;
        t.metadata["slope_ephemeral"] = fe.slope;
        t.metadata["slope_ephemeral_se"] = fe.slope_se;
    }
    return t;
}

ResultTable run_overlap(const ExperimentConfig& cfg) {
    const std::size_t P = cfg.eta_over_w.size(), R = static_cast<std::size_t>(cfg.replications);
    std::vector<double> hit(P * R);
    parallel_for(P * R, cfg.threads, [&](std::size_t i) {
        const std::size_t p = i / R, r = i % R;
        SeededRng rng = stream(cfg, r, p);
        const double W = cfg.window, eta = cfg.eta_over_w[p] * W;
        double b1 = W * rng.uniform(), b2 = W * rng.uniform();
        double t1 = rng.exponential(eta), t2 = rng.exponential(eta);
        hit[i] = (b1 <= b2 + t2 && b2 <= b1 + t1) ? 1.0 : 0.0;
    });
    std::vector<double> mean, se, closed, rel, z;
    double worst = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        auto s = summarize({hit.begin() + static_cast<long>(p * R), hit.begin() + static_cast<long>((p + 1) * R)});
        double c = overlap_probability(cfg.eta_over_w[p] * cfg.window, cfg.window);
        mean.push_back(s.mean);
        se.push_back(s.se);
        closed.push_back(c);
        rel.push_back(std::fabs(s.mean - c) / c);
        z.push_back(s.se > 0.0 ? (s.mean - c) / s.se : kNaN);
        worst = std::max(worst, rel.back());
    }
    ResultTable t;
    t.add_column("eta_over_w", cfg.eta_over_w);
    t.add_column("overlap_mean", mean);
    t.add_column("overlap_se", se);
    t.add_column("closed_form", closed);
    t.add_column("rel_error", rel);
    t.add_column("z_score", z);
    t.metadata["max_rel_error"] = worst;
    t.metadata["window"] = cfg.window;
    return t;
}

struct RegimeRun {
    BoundaryCondition bc;
    std::optional<RegimeSpec> regime;  // empty: static
    double t_end = 1.0;
};

RegimeRun regime_of(const std::string& name, int d) {
    const Vec centre = Vec::Constant(d, 0.5);
    Vec velocity = vec2(0.3, 0.2).head(d);
    if (name == "static") return {BoundaryCondition::reflecting(), std::nullopt, 1.0};
    if (name == "diffusion") return {BoundaryCondition::reflecting(), RegimeSpec::diffusion(0.01), 2.0};
    if (name == "advection_absorbing") return {BoundaryCondition::absorbing(), RegimeSpec::advection(velocity), 2.0};
    if (name == "pursuit_evasion")
        return {BoundaryCondition::reflecting(), RegimeSpec::pursuit_evasion(1.0, 1.0, 0.2, centre), 5.0};
    throw std::invalid_argument("unknown regime: " + name);
}

ResultTable run_ratio_tracking(const ExperimentConfig& cfg, const IntensityModel& base) {
    const IntensityModel start = rescale_intensity(base, cfg.lambdas.front());
    const std::size_t G = cfg.regimes.size(), S = static_cast<std::size_t>(cfg.snapshots) + 1;
    const std::size_t R = static_cast<std::size_t>(cfg.replications);
    std::vector<std::vector<Snapshot>> snaps(G);
    std::vector<std::vector<IntensityModel>> models(G);
    parallel_for(G, cfg.threads, [&](std::size_t g) {
        RegimeRun run = regime_of(cfg.regimes[g], start.dim());
        PdeState state = PdeState::from_model(start, cfg.pde_grid, run.bc, run.regime.value_or(RegimeSpec::diffusion(0.0)));
        const double dt = run.regime ? 0.9 * stable_dt(state) : 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double t = run.t_end * static_cast<double>(s) / static_cast<double>(S - 1);
            if (run.regime && s > 0) evolve(state, t, dt, std::numeric_limits<int>::max());
            Snapshot snap = snapshot_of(state);
            snap.time = t;
            snaps[g].push_back(std::move(snap));
            models[g].push_back(model_of(state));
        }
    });
    std::vector<double> per(G * S * R), eph(G * S * R);
    parallel_for(G * S * R, cfg.threads, [&](std::size_t i) {
        const std::size_t gs = i / R, r = i % R;
        const std::size_t g = gs / S, s = gs % S;
        SeededRng rng = stream(cfg, r, g * 1024 + s);
        per[i] = static_cast<double>(sample_perennial(models[g][s], rng, false).edge_count());
        eph[i] = static_cast<double>(sample_ephemeral(models[g][s], rng).edge_count());
    });
    ResultTable t;
    std::vector<double> regime_idx, snap_idx, time, lambda, mp, sp, me, se, ratio, ratio_se, theory, err;
    Json mae = Json::object();
    for (std::size_t g = 0; g < G; ++g) {
        double total = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const std::size_t off = (g * S + s) * R;
            auto a = summarize({per.begin() + static_cast<long>(off), per.begin() + static_cast<long>(off + R)});
            auto b = summarize({eph.begin() + static_cast<long>(off), eph.begin() + static_cast<long>(off + R)});
            const Snapshot& snap = snaps[g][s];
            double q = a.mean / b.mean;
            double th = edge_ratio(snap.lambda, RatioConvention::Distinct);
            regime_idx.push_back(static_cast<double>(g));
            snap_idx.push_back(static_cast<double>(s));
            time.push_back(snap.time);
            lambda.push_back(snap.lambda);
            mp.push_back(a.mean);
            sp.push_back(a.se);
            me.push_back(b.mean);
            se.push_back(b.se);
            ratio.push_back(q);
            // Delta method; the two rules use independent graphs.
            ratio_se.push_back(q * std::hypot(a.se / a.mean, b.se / b.mean));
            theory.push_back(th);
            err.push_back(std::fabs(q - th));
            total += err.back();
        }
        mae[cfg.regimes[g]] = total / static_cast<double>(S);
    }
    t.add_column("regime_index", regime_idx);
    t.add_column("snapshot", snap_idx);
    t.add_column("time", time);
    t.add_column("lambda", lambda);
    t.add_column("mean_perennial", mp);
    t.add_column("se_perennial", sp);
    t.add_column("mean_ephemeral", me);
    t.add_column("se_ephemeral", se);
    t.add_column("ratio", ratio);
    t.add_column("ratio_se", ratio_se);
    t.add_column("theory_ratio", theory);
    t.add_column("abs_error", err);
    t.metadata["regimes"] = cfg.regimes;
    t.metadata["mae"] = mae;
    return t;
}

std::vector<double> reference_spectrum(const ExperimentConfig& cfg, const IntensityModel& base) {
    if (!cfg.reference.empty()) return cfg.reference;
    if (!cfg.model) return spectral_mixture_reference();
    auto s = moments(base);
    Vec v = desire_singular_values(s.sigma_G, s.sigma_R).values;
    return {v.data(), v.data() + v.size()};
}

ResultTable run_spectral(const ExperimentConfig& cfg, const IntensityModel& base) {
    const std::size_t L = cfg.lambdas.size(), R = static_cast<std::size_t>(cfg.replications);
    const auto K = static_cast<std::size_t>(cfg.top_k);
    std::vector<double> ref = reference_spectrum(cfg, base);
    ref.resize(std::max(ref.size(), K), 0.0);
    std::vector<IntensityModel> models;
    for (double lam : cfg.lambdas) models.push_back(rescale_intensity(base, lam));
    std::vector<double> sig(L * R * K, kNaN), nodes(L * R);
    parallel_for(L * R, cfg.threads, [&](std::size_t i) {
        const std::size_t l = i / R, r = i % R;
        SeededRng rng = stream(cfg, r, l);
        SampledGraph g = sample_perennial(models[l], rng, false);
        nodes[i] = static_cast<double>(g.node_count());
        if (g.node_count() < K) return;
        Vec s = adjacency_spectrum(g, cfg.top_k, svd_seed(r, l));
        for (std::size_t k = 0; k < K; ++k) sig[i * K + k] = s[static_cast<Eigen::Index>(k)];
    });
    ResultTable t;
    t.add_column("lambda", cfg.lambdas);
    std::vector<std::vector<double>> mean(K), se(K);
    std::vector<double> floor, dev_mean, dev_se, dev_max, node_mean;
    for (std::size_t l = 0; l < L; ++l) {
        std::vector<double> dev;
        for (std::size_t k = 0; k < K; ++k) {
            std::vector<double> xs;
            for (std::size_t r = 0; r < R; ++r) xs.push_back(sig[(l * R + r) * K + k]);
            auto s = summarize(xs);
            mean[k].push_back(s.mean);
            se[k].push_back(s.se);
            if (k == 0)
                for (double x : xs) dev.push_back(std::fabs(x - ref[0]));
        }
        auto d = summarize(dev);
        dev_mean.push_back(d.mean);
        dev_se.push_back(d.se);
        dev_max.push_back(*std::max_element(dev.begin(), dev.end(), [](double a, double b) {
            return std::isnan(b) ? false : (std::isnan(a) || a < b);
        }));
        floor.push_back(1.0 / std::sqrt(cfg.lambdas[l]));
        node_mean.push_back(summarize({nodes.begin() + static_cast<long>(l * R), nodes.begin() + static_cast<long>((l + 1) * R)}).mean);
    }
    for (std::size_t k = 0; k < K; ++k) {
        t.add_column("sigma" + std::to_string(k + 1) + "_mean", mean[k]);
        t.add_column("sigma" + std::to_string(k + 1) + "_se", se[k]);
        t.add_column("reference" + std::to_string(k + 1), std::vector<double>(L, ref[k]));
    }
    t.add_column("noise_floor", floor);
    t.add_column("abs_dev_mean", dev_mean);
    t.add_column("abs_dev_se", dev_se);
    t.add_column("abs_dev_max", dev_max);
    t.add_column("mean_nodes", node_mean);
    if (L >= 2) {
        auto f = loglog_fit(cfg.lambdas, dev_mean, dev_se);
        t.metadata["bias_slope"] = f.slope;
        t.metadata["bias_slope_se"] = f.slope_se;
    }
    return t;
}

ResultTable run_multigraph(const ExperimentConfig& cfg, const IntensityModel& base) {
    const IntensityModel model = rescale_intensity(base, cfg.lambdas.front());
    const auto K = static_cast<std::size_t>(cfg.top_k);
    const std::size_t B = static_cast<std::size_t>(cfg.replications);
    const auto M = static_cast<std::size_t>(*std::max_element(cfg.m_values.begin(), cfg.m_values.end()));
    // Batch b holds graphs 0..M-1; an m-graph estimate averages the first m of them.
    std::vector<double> sig(B * M * K, kNaN);
    parallel_for(B * M, cfg.threads, [&](std::size_t i) {
        const std::size_t b = i / M, j = i % M;
        SeededRng rng = stream(cfg, b, j);
        SampledGraph g = sample_perennial(model, rng, false);
        if (g.node_count() < K) return;
        Vec s = adjacency_spectrum(g, cfg.top_k, svd_seed(b, j));
        for (std::size_t k = 0; k < K; ++k) sig[i * K + k] = s[static_cast<Eigen::Index>(k)];
    });
    ResultTable t;
    std::vector<double> ms;
    for (int m : cfg.m_values) ms.push_back(m);
    t.add_column("m", ms);
    std::vector<double> std_by_m;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> single;
        for (std::size_t i = 0; i < B * M; ++i) single.push_back(sig[i * K + k]);
        const double single_sd = summarize(single).sd;
        std::vector<double> mean, sd, sd_se, predicted;
        for (int m : cfg.m_values) {
            std::vector<double> avg;
            for (std::size_t b = 0; b < B; ++b) {
                double acc = 0.0;
                for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) acc += sig[((b * M) + j) * K + k];
                avg.push_back(acc / m);
            }
            auto s = summarize(avg);
            mean.push_back(s.mean);
            sd.push_back(s.sd);
            sd_se.push_back(s.sd / std::sqrt(2.0 * static_cast<double>(B - 1)));
            predicted.push_back(single_sd / std::sqrt(static_cast<double>(m)));
        }
        if (k == 0) std_by_m = sd;
        const std::string p = "sigma" + std::to_string(k + 1);
        t.add_column(p + "_mean", mean);
        t.add_column(p + "_std", sd);
        t.add_column(p + "_std_se", sd_se);
        t.add_column(p + "_predicted_std", predicted);
    }
    auto lo = std::min_element(cfg.m_values.begin(), cfg.m_values.end()) - cfg.m_values.begin();
    auto hi = std::max_element(cfg.m_values.begin(), cfg.m_values.end()) - cfg.m_values.begin();
    t.metadata["lambda"] = cfg.lambdas.front();
    t.metadata["batches"] = B;
    t.metadata["std_ratio"] = std_by_m[static_cast<std::size_t>(hi)] / std_by_m[static_cast<std::size_t>(lo)];
    t.metadata["expected_std_ratio"] = std::sqrt(static_cast<double>(cfg.m_values[static_cast<std::size_t>(lo)]) /
                                                 cfg.m_values[static_cast<std::size_t>(hi)]);
    return t;
}

struct GrowthSample {
    double window = 0.0;
    double copresent_pairs = 0.0;
};

/// Births at rate b0 N^(1 - delta) with N counting founders and all births so far; each
/// newborn lives Exp(eta). Runs until n births and counts unordered pairs alive together.
GrowthSample simulate_growth(double delta, int n, double b0, double founders, double eta, SeededRng& rng) {
    std::vector<double> birth(static_cast<std::size_t>(n)), death(static_cast<std::size_t>(n));
    double t = 0.0, N = founders;
    for (std::size_t k = 0; k < birth.size(); ++k) {
        t += rng.exponential(1.0 / (b0 * std::pow(N, 1.0 - delta)));
        birth[k] = t;
        death[k] = t + rng.exponential(eta);
        N += 1.0;
    }
    // Births are increasing, so j > i overlaps i iff birth[j] <= death[i].
    double pairs = 0.0;
    for (std::size_t i = 0; i < birth.size(); ++i) {
        auto end = std::upper_bound(birth.begin() + static_cast<long>(i) + 1, birth.end(), death[i]);
        pairs += static_cast<double>(end - (birth.begin() + static_cast<long>(i) + 1));
    }
    return {t, pairs};
}

ResultTable run_growth(const ExperimentConfig& cfg) {
    const std::size_t D = cfg.deltas.size(), P = cfg.population_sizes.size(), R = static_cast<std::size_t>(cfg.replications);
    std::vector<GrowthSample> out(D * P * R);
    parallel_for(D * P * R, cfg.threads, [&](std::size_t i) {
        const std::size_t dp = i / R, r = i % R;
        const std::size_t d = dp / P, p = dp % P;
        SeededRng rng = stream(cfg, r, d * 64 + p);
        out[i] = simulate_growth(cfg.deltas[d], cfg.population_sizes[p], cfg.birth_rate, cfg.founders, cfg.eta, rng);
    });
    ResultTable t;
    std::vector<double> delta, n, window, p_mean, p_se, e_mean, e_se, p_ref, theory;
    Json exponents = Json::object(), exponent_se = Json::object();
    for (std::size_t d = 0; d < D; ++d) {
        std::vector<double> xs, ys, yse;
        for (std::size_t p = 0; p < P; ++p) {
            const double nn = cfg.population_sizes[p];
            std::vector<double> w, prob, edges;
            for (std::size_t r = 0; r < R; ++r) {
                const auto& s = out[(d * P + p) * R + r];
                w.push_back(s.window);
                prob.push_back(s.copresent_pairs / (0.5 * nn * (nn - 1.0)));
                edges.push_back(2.0 * s.copresent_pairs);
            }
            auto sw = summarize(w), sp = summarize(prob), se = summarize(edges);
            const double dl = cfg.deltas[d];
            double ref = kNaN;
            if (dl == 0.0) ref = cfg.birth_rate * cfg.eta / (cfg.birth_rate * cfg.eta + 1.0);
            if (dl == 1.0) ref = overlap_probability(cfg.eta, sw.mean);
            delta.push_back(dl);
            n.push_back(nn);
            window.push_back(sw.mean);
            p_mean.push_back(sp.mean);
            p_se.push_back(sp.se);
            e_mean.push_back(se.mean);
            e_se.push_back(se.se);
            p_ref.push_back(ref);
            theory.push_back(2.0 - dl);
            xs.push_back(nn);
            ys.push_back(se.mean);
            yse.push_back(se.se);
        }
        if (P >= 2) {
            auto f = loglog_fit(xs, ys, yse);
            exponents[key_of(cfg.deltas[d])] = f.slope;
            exponent_se[key_of(cfg.deltas[d])] = f.slope_se;
        }
    }
    t.add_column("delta", delta);
    t.add_column("n", n);
    t.add_column("window_mean", window);
    t.add_column("p_overlap_mean", p_mean);
    t.add_column("p_overlap_se", p_se);
    t.add_column("edges_mean", e_mean);
    t.add_column("edges_se", e_se);
    t.add_column("p_overlap_reference", p_ref);
    t.add_column("theory_exponent", theory);
    t.metadata["edge_exponent"] = exponents;
    t.metadata["edge_exponent_se"] = exponent_se;
    return t;
}

std::vector<double> doubles(const Json& j, const char* key, std::vector<double> fallback) {
    return j.contains(key) ? j.at(key).get<std::vector<double>>() : fallback;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

BandCheck band(std::string name, double value, double lower, double upper) {
    return {std::move(name), value, lower, upper, value >= lower && value <= upper};
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    for (const auto& [k, n] : kNames)
        if (k == kind) return n;
    throw std::logic_error("unnamed experiment kind");
}

ExperimentKind experiment_from_string(const std::string& name) {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    throw std::invalid_argument("unknown experiment: " + name);
}

IntensityModel spectral_mixture(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    auto v4 = [](double a, double b, double c, double d) {
        Vec v(4);
        v << a, b, c, d;
        return v;
    };
    const Vec kappa = Vec::Constant(4, 40.0);
    const double c1 = std::sqrt(0.6 * lambda), c2 = std::sqrt(0.4 * lambda);
    return IntensityModel::mixture(
        {{"A", MarginalIntensity::trunc_gaussian({v4(0.7, 0.3, 0.2, 0.1), kappa, c1}),
          MarginalIntensity::trunc_gaussian({v4(0.2, 0.6, 0.3, 0.2), kappa, c1})},
         {"B", MarginalIntensity::trunc_gaussian({v4(0.1, 0.2, 0.6, 0.5), kappa, c2}),
          MarginalIntensity::trunc_gaussian({v4(0.5, 0.1, 0.2, 0.6), kappa, c2})}});
}

const std::vector<double>& spectral_mixture_reference() {
    // tools/spectral_reference: 1e7 rejection draws per component marginal, seed 20241.
    // Batch standard errors 3.4e-5, 9.1e-6, 6.4e-6, 3.8e-6.
    static const std::vector<double> ref = {0.47278511500032044, 0.050496647803589464, 0.042818440168638422,
                                            0.019291806599257125};
    return ref;
}

IntensityModel rescale_intensity(const IntensityModel& model, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    const double f = lambda / model.total_intensity();
    if (model.kind() == IntensityModel::Kind::Tabulated) {
        GridField joint = model.joint();
        for (double& v : joint.values) v *= f;
        return IntensityModel::tabulated(std::move(joint));
    }
    const double s = std::sqrt(f);
    std::vector<MixtureComponent> comps;
    for (const auto& c : model.components())
        comps.push_back({c.label, c.green.with_mass(c.green.mass() * s), c.red.with_mass(c.red.mass() * s)});
    if (model.kind() == IntensityModel::Kind::Product)
        return IntensityModel::product(std::move(comps[0].green), std::move(comps[0].red));
    return IntensityModel::mixture(std::move(comps));
}

LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& y_se) {
    if (x.size() != y.size() || x.size() != y_se.size() || x.size() < 2) throw std::invalid_argument("loglog_fit: need two or more matched points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_fit: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    }
    LogLogFit f;
    f.slope = sxy / sxx;
    double var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double w = (std::log(x[i]) - mx) / sxx, rel = y_se[i] / y[i];
        var += w * w * rel * rel;
    }
    f.slope_se = std::sqrt(var);
    return f;
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.root_seed = 20240601;
    switch (kind) {
        case ExperimentKind::Scaling:
            c.lambdas = {10, 25, 50, 100, 200};
            c.replications = 1000;
            break;
        case ExperimentKind::Overlap:
            c.eta_over_w = {0.01, 0.1, 1, 10, 100};
            c.replications = 10000;
            break;
        case ExperimentKind::RatioTracking:
            c.lambdas = {100};
            c.regimes = kRegimes;
            c.replications = 400;
            break;
        case ExperimentKind::SpectralConvergence:
            c.lambdas = {100, 300, 1000, 3000};
            c.replications = 50;
            break;
        case ExperimentKind::MultiGraph:
            c.lambdas = {300};
            c.m_values = {25, 100};
            c.replications = 100;
            c.top_k = 2;
            break;
        case ExperimentKind::GrowthOverlap:
            c.deltas = {0, 0.5, 1};
            c.population_sizes = {100, 200, 400, 800, 1600, 3200};
            c.replications = 200;
            break;
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j, const fs::path& base_dir) {
    ExperimentConfig c = defaults(experiment_from_string(j.at("experiment").get<std::string>()));
    if (j.contains("model")) {
        c.model_json = j.at("model");
        c.model = c.model_json.is_string() ? load_model(base_dir / c.model_json.get<std::string>())
                                           : model_from_json(c.model_json, base_dir);
    }
    c.lambdas = doubles(j, "lambdas", c.lambdas);
    c.eta_over_w = doubles(j, "eta_over_w", c.eta_over_w);
    c.deltas = doubles(j, "deltas", c.deltas);
    c.reference = doubles(j, "reference", c.reference);
    if (j.contains("m_values")) c.m_values = j.at("m_values").get<std::vector<int>>();
    if (j.contains("regimes")) c.regimes = j.at("regimes").get<std::vector<std::string>>();
    if (j.contains("population_sizes")) c.population_sizes = j.at("population_sizes").get<std::vector<int>>();
    c.replications = j.value("replications", c.replications);
    c.root_seed = j.value("root_seed", c.root_seed);
    c.top_k = j.value("top_k", c.top_k);
    c.snapshots = j.value("snapshots", c.snapshots);
    c.pde_grid = j.value("pde_grid", c.pde_grid);
    c.window = j.value("window", c.window);
    c.birth_rate = j.value("birth_rate", c.birth_rate);
    c.founders = j.value("founders", c.founders);
    c.eta = j.value("eta", c.eta);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    try {
        return from_json(read_json_file(path), path.parent_path());
    } catch (const Json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

Json ExperimentConfig::to_json() const {
    Json j = {{"experiment", to_string(kind)},
              {"replications", replications},
              {"root_seed", root_seed},
              {"lambdas", lambdas},
              {"eta_over_w", eta_over_w},
              {"m_values", m_values},
              {"regimes", regimes},
              {"deltas", deltas},
              {"population_sizes", population_sizes},
              {"top_k", top_k},
              {"snapshots", snapshots},
              {"pde_grid", pde_grid},
              {"window", window},
              {"birth_rate", birth_rate},
              {"founders", founders},
              {"eta", eta},
              {"reference", reference}};
    j["model"] = model_json.is_null() ? Json("default") : model_json;
    return j;
}

std::string ExperimentConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash64(to_json().dump(), 0)));
    return buf;
}

void ExperimentConfig::validate() const {
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    auto need = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string(what) + " must be nonempty");
    };
    auto positive = [](const std::vector<double>& xs, const char* what) {
        for (double x : xs)
            if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + " entries must be positive");
    };
    switch (kind) {
        case ExperimentKind::Scaling:
        case ExperimentKind::SpectralConvergence:
            need(!lambdas.empty(), "lambdas");
            positive(lambdas, "lambdas");
            break;
        case ExperimentKind::Overlap:
            need(!eta_over_w.empty(), "eta_over_w");
            positive(eta_over_w, "eta_over_w");
            if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
            break;
        case ExperimentKind::RatioTracking:
            need(!lambdas.empty(), "lambdas");
            need(!regimes.empty(), "regimes");
            positive(lambdas, "lambdas");
            for (const auto& r : regimes)
                if (std::find(kRegimes.begin(), kRegimes.end(), r) == kRegimes.end())
                    throw std::invalid_argument("unknown regime: " + r);
            if (snapshots < 1 || pde_grid < 4) throw std::invalid_argument("snapshots >= 1 and pde_grid >= 4 required");
            if (model && (model->dim() > 2 || !model->is_product() || model->kind() == IntensityModel::Kind::Tabulated))
                throw std::invalid_argument("ratio tracking needs a product model with d <= 2");
            break;
        case ExperimentKind::MultiGraph:
            need(!lambdas.empty(), "lambdas");
            need(!m_values.empty(), "m_values");
            positive(lambdas, "lambdas");
            for (int m : m_values)
                if (m < 1) throw std::invalid_argument("m_values entries must be positive");
            if (replications < 2) throw std::invalid_argument("multi-graph needs at least two batches");
            break;
        case ExperimentKind::GrowthOverlap:
            need(!deltas.empty(), "deltas");
            need(!population_sizes.empty(), "population_sizes");
            for (double d : deltas)
                if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("deltas must lie in [0, 1]");
            for (int n : population_sizes)
                if (n < 2) throw std::invalid_argument("population sizes must be at least 2");
            if (!(birth_rate > 0.0) || !(founders >= 1.0) || !(eta > 0.0))
                throw std::invalid_argument("birth_rate, eta > 0 and founders >= 1 required");
            break;
    }
    if ((kind == ExperimentKind::SpectralConvergence || kind == ExperimentKind::MultiGraph) && top_k < 1)
        throw std::invalid_argument("top_k must be positive");
}

double ExperimentConfig::node_budget() const {
    const double R = replications;
    double sum_lambda = 0.0;
    for (double l : lambdas) sum_lambda += l;
    switch (kind) {
        case ExperimentKind::Scaling: return 2.0 * R * sum_lambda;
        case ExperimentKind::Overlap: return 2.0 * R * static_cast<double>(eta_over_w.size());
        case ExperimentKind::RatioTracking:
            return 2.0 * R * static_cast<double>(regimes.size()) * (snapshots + 1) * lambdas.front();
        case ExperimentKind::SpectralConvergence: return R * sum_lambda;
        case ExperimentKind::MultiGraph:
            return R * *std::max_element(m_values.begin(), m_values.end()) * lambdas.front();
        case ExperimentKind::GrowthOverlap: {
            double n = 0.0;
            for (int p : population_sizes) n += p;
            return R * static_cast<double>(deltas.size()) * n;
        }
    }
    return 0.0;
}

void ResultTable::add_column(std::string name, std::vector<double> values) {
    if (has_column(name)) throw std::invalid_argument("duplicate column: " + name);
    if (!columns.empty() && values.size() != rows()) throw std::invalid_argument("column length mismatch: " + name);
    names.push_back(std::move(name));
    columns.push_back(std::move(values));
}

bool ResultTable::has_column(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& ResultTable::column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("no column named " + name);
    return columns[static_cast<std::size_t>(it - names.begin())];
}

void ResultTable::validate() const {
    if (names.size() != columns.size()) throw std::logic_error("names and columns differ in count");
    for (const auto& c : columns)
        if (c.size() != rows()) throw std::logic_error("columns differ in length");
}

ResultTable run_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.node_budget() > kMaxNodeSamples)
        throw std::invalid_argument("experiment budget of " + format_double(config.node_budget()) +
                                    " node samples exceeds the 1e8 limit");
    const auto start = std::chrono::steady_clock::now();
    std::optional<IntensityModel> holder;
    ResultTable t;
    switch (config.kind) {
        case ExperimentKind::Scaling: t = run_scaling(config, base_model(config, holder)); break;
        case ExperimentKind::Overlap: t = run_overlap(config); break;
        case ExperimentKind::RatioTracking: t = run_ratio_tracking(config, base_model(config, holder)); break;
        case ExperimentKind::SpectralConvergence: t = run_spectral(config, base_model(config, holder)); break;
        case ExperimentKind::MultiGraph: t = run_multigraph(config, base_model(config, holder)); break;
        case ExperimentKind::GrowthOverlap: t = run_growth(config); break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    t.metadata["experiment"] = to_string(config.kind);
    t.metadata["config_hash"] = config.hash();
    t.metadata["seed"] = config.root_seed;
    t.metadata["wall_time_s"] = wall;
    t.metadata["config"] = config.to_json();
    t.validate();
    return t;
}

Json results_to_json(const ResultTable& table) {
    Json cols = Json::object();
    for (std::size_t i = 0; i < table.names.size(); ++i) {
        Json values = Json::array();
        for (double x : table.columns[i]) values.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
        cols[table.names[i]] = std::move(values);
    }
    return {{"column_order", table.names}, {"columns", std::move(cols)}, {"rows", table.rows()}, {"metadata", table.metadata}};
}

void write_results(const ResultTable& table, const fs::path& path, ResultFormat format) {
    table.validate();
    if (format == ResultFormat::JSON) {
        // 17 significant digits survive the round trip through the JSON number formatter.
        write_text_file(path, results_to_json(table).dump(2) + "\n");
        return;
    }
    std::ostringstream out;
    for (const auto& [key, value] : table.metadata.items()) out << "# " << key << ": " << value.dump() << "\n";
    for (std::size_t i = 0; i < table.names.size(); ++i) out << (i ? "," : "") << csv_quote(table.names[i]);
    out << "\n";
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << format_double(table.columns[i][r]);
        out << "\n";
    }
    write_text_file(path, out.str());
}

ResultTable read_results_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    ResultTable t;
    std::string line;
    bool header = false;
    std::vector<std::vector<double>> cols;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header && line.rfind("#", 0) == 0) {
            auto colon = line.find(": ");
            if (colon == std::string::npos) throw std::runtime_error(path.string() + ": malformed metadata line");
            t.metadata[line.substr(2, colon - 2)] = Json::parse(line.substr(colon + 2));
            continue;
        }
        auto fields = csv_split(line);
        if (!header) {
            t.names = fields;
            cols.assign(fields.size(), {});
            header = true;
            continue;
        }
        if (line.empty()) continue;
        if (fields.size() != cols.size()) throw std::runtime_error(path.string() + ": ragged row");
        for (std::size_t i = 0; i < fields.size(); ++i) cols[i].push_back(std::strtod(fields[i].c_str(), nullptr));
    }
    if (!header) throw std::runtime_error(path.string() + ": missing header row");
    if (t.names.size() == 1 && t.names[0].empty()) t.names.clear(), cols.clear();
    t.columns = std::move(cols);
    t.validate();
    return t;
}

std::vector<BandCheck> check_bands(const ResultTable& t, ExperimentKind kind) {
    std::vector<BandCheck> out;
    const auto& m = t.metadata;
    switch (kind) {
        case ExperimentKind::Scaling:
            out.push_back(band("perennial slope", m.at("slope_perennial").get<double>(), 1.92, 2.02));
            out.push_back(band("ephemeral slope", m.at("slope_ephemeral").get<double>(), 0.96, 1.06));
            break;
        case ExperimentKind::Overlap: {
            out.push_back(band("max relative error", m.at("max_rel_error").get<double>(), 0.0, 0.01));
            const auto& x = t.column("eta_over_w");
            for (std::size_t i = 0; i < x.size(); ++i) {
                double spot = x[i] == 0.1 ? 0.180 : x[i] == 1.0 ? 0.7358 : kNaN;
                if (std::isnan(spot)) continue;
                double z = (t.column("overlap_mean")[i] - spot) / t.column("overlap_se")[i];
                out.push_back(band("spot value z at eta/W=" + key_of(x[i]), z, -3.0, 3.0));
            }
            break;
        }
        case ExperimentKind::RatioTracking: {
            const auto& idx = t.column("regime_index");
            const auto regimes = m.at("regimes").get<std::vector<std::string>>();
            for (std::size_t g = 0; g < regimes.size(); ++g) {
                double count = static_cast<double>(std::count(idx.begin(), idx.end(), static_cast<double>(g)));
                out.push_back(band(regimes[g] + " snapshots", count, 10.0, std::numeric_limits<double>::infinity()));
                out.push_back(band(regimes[g] + " ratio MAE", m.at("mae").at(regimes[g]).get<double>(), 0.0, 3.0));
            }
            break;
        }
        case ExperimentKind::SpectralConvergence: {
            const auto& lam = t.column("lambda");
            for (std::size_t i = 0; i < lam.size(); ++i) {
                if (lam[i] < 300.0) continue;
                out.push_back(band("max |sigma1/N - sigma1| at Lambda=" + key_of(lam[i]), t.column("abs_dev_max")[i], 0.0,
                                   2.0 / std::sqrt(lam[i])));
            }
            out.push_back(band("bias log-log slope", m.at("bias_slope").get<double>(), -0.75, -0.3));
            break;
        }
        case ExperimentKind::MultiGraph: {
            double expect = m.at("expected_std_ratio").get<double>();
            out.push_back(band("std ratio across m", m.at("std_ratio").get<double>(), 0.7 * expect, 1.3 * expect));
            break;
        }
        case ExperimentKind::GrowthOverlap: {
            const auto& e = m.at("edge_exponent");
            for (const auto& [delta, target] : {std::pair{0.0, 2.0}, std::pair{1.0, 1.0}}) {
                if (!e.contains(key_of(delta))) continue;
                out.push_back(band("edge exponent at delta=" + key_of(delta), e.at(key_of(delta)).get<double>(), target - 0.15,
                                   target + 0.15));
            }
            break;
        }
    }
    return out;
}

}  // namespace idpg

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "idpg/io.hpp"
#include "idpg/latent.hpp"

namespace idpg {

enum class ExperimentKind { Scaling, Overlap, RatioTracking, SpectralConvergence, MultiGraph, GrowthOverlap };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

/// Grids not used by an experiment are ignored. Defaults reproduce the shipped studies.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Scaling;
    std::optional<IntensityModel> model;  // base model, rescaled to each Lambda; per-kind default when empty
    Json model_json;                      // the model as given, for hashing and echoing
    std::vector<double> lambdas;
    std::vector<double> eta_over_w;
    std::vector<int> m_values;
    std::vector<std::string> regimes;
    std::vector<double> deltas;
    std::vector<int> population_sizes;
    int replications = 1;
    std::uint64_t root_seed = 0;
    int threads = 1;  // not part of the configuration identity

    int top_k = 4;              // SpectralConvergence, MultiGraph
    int snapshots = 10;         // RatioTracking: snapshots after t = 0
    int pde_grid = 48;          // RatioTracking cells per axis
    double window = 1.0;        // Overlap W
    double birth_rate = 1.0;    // GrowthOverlap b0
    double founders = 1.0;      // GrowthOverlap N0
    double eta = 1.0;           // GrowthOverlap mean lifetime
    std::vector<double> reference;  // SpectralConvergence sigma_k(D~); computed from moments when empty

    static ExperimentConfig defaults(ExperimentKind kind);
    /// Missing keys keep the defaults of the named experiment.
    static ExperimentConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);
    Json to_json() const;
    /// hash64 of the canonical JSON, as 16 hex digits.
    std::string hash() const;
    void validate() const;
    /// Node draws the run will make; run_experiment refuses more than 1e8.
    double node_budget() const;
};

struct ResultTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    Json metadata = Json::object();

    void add_column(std::string name, std::vector<double> values);
    const std::vector<double>& column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    void validate() const;
};

ResultTable run_experiment(const ExperimentConfig& config);

enum class ResultFormat { CSV, JSON };

void write_results(const ResultTable& table, const std::filesystem::path& path, ResultFormat format);
/// Parses the CSV written by write_results; '#' lines fill metadata.
ResultTable read_results_csv(const std::filesystem::path& path);
Json results_to_json(const ResultTable& table);

struct BandCheck {
    std::string name;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
};

/// Acceptance bands for a finished table.
std::vector<BandCheck> check_bands(const ResultTable& table, ExperimentKind kind);

/// The d = 4 two-component mixture of the spectral studies at total intensity lambda.
IntensityModel spectral_mixture(double lambda);
/// sigma_k(D~) of spectral_mixture from a 1e7-draw Monte Carlo estimate of Sigma_G, Sigma_R.
const std::vector<double>& spectral_mixture_reference();

/// Same shape with every mass scaled so the total intensity is lambda.
IntensityModel rescale_intensity(const IntensityModel& model, double lambda);

/// OLS slope of log y on log x, and its standard error from per-point standard errors of y.
struct LogLogFit {
    double slope = 0.0;
    double slope_se = 0.0;
};
LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& y_se);

}  // namespace idpg

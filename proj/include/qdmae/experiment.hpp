#ifndef QDMAE_EXPERIMENT_HPP
#define QDMAE_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdmae/archive.hpp"
#include "qdmae/archive_io.hpp"
#include "qdmae/domains.hpp"
#include "qdmae/emitters.hpp"
#include "qdmae/scheduler.hpp"

namespace qdmae {

enum class Algorithm { MapElites, MapElitesLine, CmaMe, CmaMae, CmaMega, CmaMaega };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);
bool algorithm_is_annealed(Algorithm a);  // uses the configured alpha / min_f
bool algorithm_is_dqd(Algorithm a);

/// Declarative description of one benchmark run. Defaults follow the
/// standard benchmark configuration for each domain and algorithm.
struct ExperimentConfig {
    DomainKind domain = DomainKind::LpSphere;
    int dimension = 100;
    Algorithm algorithm = Algorithm::CmaMae;

    double alpha = 0.01;
    double min_quality = 0.0;
    std::vector<int> resolution = {100, 100};

    int emitters = 15;
    int batch = 36;  // lambda
    long iterations = 10000;
    int trials = 5;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    // Operator parameters.
    double sigma = 0.5;        // isotropic / initial step size
    double sigma_line = 0.2;   // line term of MAP-Elites (line)
    double sigma_g = 10.0;     // initial coefficient step size (DQD)
    double eta = 1.0;          // gradient step rate (DQD)
    SelectionMode selection = SelectionMode::Mu;
    RestartPolicy restart = RestartPolicy::basic();
    StepOptimizerKind step_optimizer = StepOptimizerKind::GradientAscent;
    bool batch_thresholds = false;  // order-invariant batch insertion mode
    bool rastrigin_squared_cosine = false;

    int metrics_every = 1;
    int threads = 0;  // 0 = hardware concurrency
    bool write_svg = false;
    int seed_solutions = 100;  // archive initialization for perturbation algorithms

    static ExperimentConfig defaults_for(DomainKind domain, Algorithm algorithm);

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    std::string config_hash() const;  // FNV-1a over the canonical JSON

    /// Elitist algorithms run on an alpha = 1 archive with a large negative
    /// threshold floor; annealed ones use the configured alpha and min_f.
    double effective_alpha() const;
    double effective_min_quality() const;

    ArchiveConfig archive_config() const;
};

struct TrialFinal {
    int trial = 0;
    double qd_score = 0.0;
    double coverage = 0.0;
    double best = 0.0;
};

struct ExperimentResult {
    std::vector<MetricsRow> rows;     // all trials, trial-major
    std::vector<TrialFinal> finals;   // one per trial
};

/// Builds the emitter ensemble of one trial, each emitter on its own rng
/// substream of the trial seed.
std::vector<std::unique_ptr<Emitter>> build_emitters(const ExperimentConfig& config,
                                                     std::uint64_t trial_seed,
                                                     const Domain& domain);

/// Runs one trial to completion. The observer, when given, is forwarded to
/// the scheduler loop.
ExperimentResult run_trial(const ExperimentConfig& config, int trial, Archive* archive_out = nullptr,
                           const StepObserver& observer = nullptr);

/// Runs all trials (concurrently when threads allow) and, unless `dir` is
/// empty, writes metrics.csv, summary.csv, and per-trial archive snapshots
/// and heatmaps into it.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& dir);
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    return run_experiment(config, config.output_dir);
}

struct SummaryRow {
    std::string label;
    int trials = 0;
    double qd_mean = 0.0, qd_se = 0.0;
    double coverage_mean = 0.0, coverage_se = 0.0;
    double best_mean = 0.0, best_se = 0.0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;
    std::string to_csv() const;
    std::string to_markdown() const;
};

/// Mean and standard error (sample stddev / sqrt(trials); 0 for one trial)
/// of the final metrics. Throws on an empty result set.
SummaryRow summarize(const std::string& label, const std::vector<TrialFinal>& finals);

SummaryTable sweep_alpha(const ExperimentConfig& base, const std::vector<double>& alphas,
                         const std::string& dir);
SummaryTable sweep_min_quality(const ExperimentConfig& base, const std::vector<double>& values,
                               const std::string& dir);
/// Square resolutions; alpha is converted from the base resolution before
/// each run and recorded in that run's metadata.
SummaryTable sweep_resolution(const ExperimentConfig& base,
                              const std::vector<int>& resolutions, const std::string& dir);

/// Derived trial seed; documented mixing so runs are reproducible from the
/// experiment seed alone.
std::uint64_t trial_seed(std::uint64_t experiment_seed, int trial);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const FileMeta& meta);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace qdmae

#endif

#include "qdmae/experiment.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qdmae {

namespace {
constexpr double kElitistFloor = -1e9;
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::MapElites: return "map_elites";
        case Algorithm::MapElitesLine: return "map_elites_line";
        case Algorithm::CmaMe: return "cma_me";
        case Algorithm::CmaMae: return "cma_mae";
        case Algorithm::CmaMega: return "cma_mega";
        case Algorithm::CmaMaega: return "cma_maega";
    }
    throw std::logic_error("unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "map_elites") return Algorithm::MapElites;
    if (name == "map_elites_line") return Algorithm::MapElitesLine;
    if (name == "cma_me") return Algorithm::CmaMe;
    if (name == "cma_mae") return Algorithm::CmaMae;
    if (name == "cma_mega") return Algorithm::CmaMega;
    if (name == "cma_maega") return Algorithm::CmaMaega;
    throw std::invalid_argument("unknown algorithm: " + name);
}

bool algorithm_is_annealed(Algorithm a) {
    return a == Algorithm::CmaMae || a == Algorithm::CmaMaega;
}

bool algorithm_is_dqd(Algorithm a) {
    return a == Algorithm::CmaMega || a == Algorithm::CmaMaega;
}

ExperimentConfig ExperimentConfig::defaults_for(DomainKind domain, Algorithm algorithm) {
    ExperimentConfig c;
    c.domain = domain;
    c.algorithm = algorithm;
    const bool arm = domain == DomainKind::ArmRepertoire;
    switch (algorithm) {
        case Algorithm::MapElites:
            c.sigma = arm ? 0.1 : 0.5;
            break;
        case Algorithm::MapElitesLine:
            c.sigma = arm ? 0.1 : 0.5;
            c.sigma_line = 0.2;
            break;
        case Algorithm::CmaMe:
        case Algorithm::CmaMae:
            c.sigma = arm ? 0.2 : 0.5;
            break;
        case Algorithm::CmaMega:
        case Algorithm::CmaMaega:
            c.sigma_g = arm ? 0.05 : 10.0;
            c.eta = 1.0;
            break;
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    if (domain != DomainKind::ArmRepertoire && dimension % 2 != 0)
        throw std::invalid_argument("linear projection domains need an even dimension");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in [0, 1]");
    if (resolution.size() != 2) throw std::invalid_argument("resolution must name two dimensions");
    for (int r : resolution)
        if (r < 1) throw std::invalid_argument("resolution must be positive");
    if (emitters < 1) throw std::invalid_argument("need at least one emitter");
    if (batch < 1) throw std::invalid_argument("batch size must be positive");
    if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    if (metrics_every < 1) throw std::invalid_argument("metrics cadence must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(sigma_g > 0.0)) throw std::invalid_argument("sigma_g must be positive");
    if (restart.kind == RestartKind::Timeout && restart.timeout_iterations < 1)
        throw std::invalid_argument("timeout restarts need at least one iteration");
    if (seed_solutions < 1 &&
        (algorithm == Algorithm::MapElites || algorithm == Algorithm::MapElitesLine))
        throw std::invalid_argument("perturbation algorithms need seed solutions");
}

double ExperimentConfig::effective_alpha() const {
    return algorithm_is_annealed(algorithm) ? alpha : 1.0;
}

double ExperimentConfig::effective_min_quality() const {
    return algorithm_is_annealed(algorithm) ? min_quality : kElitistFloor;
}

ArchiveConfig ExperimentConfig::archive_config() const {
    const auto domain_ptr = make_domain(domain, dimension, rastrigin_squared_cosine);
    const DomainSpec& spec = domain_ptr->spec();
    ArchiveConfig cfg;
    cfg.lower_bounds = spec.measure_lower;
    cfg.upper_bounds = spec.measure_upper;
    cfg.resolution = resolution;
    cfg.learning_rate = effective_alpha();
    cfg.min_quality = effective_min_quality();
    return cfg;
}

namespace {

std::string restart_name(const RestartPolicy& p) {
    switch (p.kind) {
        case RestartKind::Basic: return "basic";
        case RestartKind::NoImprovement: return "no_improvement";
        case RestartKind::Timeout: return "timeout";
    }
    return "basic";
}

RestartPolicy restart_from_name(const std::string& name, int timeout) {
    if (name == "basic") return RestartPolicy::basic();
    if (name == "no_improvement") return RestartPolicy::no_improvement();
    if (name == "timeout") return RestartPolicy::timeout(timeout);
    throw std::invalid_argument("unknown restart rule: " + name);
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
    return {{"domain", domain_name(domain)},
            {"dimension", dimension},
            {"algorithm", algorithm_name(algorithm)},
            {"alpha", alpha},
            {"min_quality", min_quality},
            {"resolution", resolution},
            {"emitters", emitters},
            {"batch", batch},
            {"iterations", iterations},
            {"trials", trials},
            {"seed", seed},
            {"sigma", sigma},
            {"sigma_line", sigma_line},
            {"sigma_g", sigma_g},
            {"eta", eta},
            {"selection", selection == SelectionMode::Filter ? "filter" : "mu"},
            {"restart", restart_name(restart)},
            {"restart_timeout", restart.timeout_iterations},
            {"step_optimizer",
             step_optimizer == StepOptimizerKind::Adam ? "adam" : "gradient_ascent"},
            {"batch_thresholds", batch_thresholds},
            {"rastrigin_squared_cosine", rastrigin_squared_cosine},
            {"metrics_every", metrics_every},
            {"seed_solutions", seed_solutions}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig base;
    const DomainKind dom = domain_from_name(j.value("domain", "lp_sphere"));
    const Algorithm algo = algorithm_from_name(j.value("algorithm", "cma_mae"));
    ExperimentConfig c = defaults_for(dom, algo);
    c.dimension = j.value("dimension", base.dimension);
    c.alpha = j.value("alpha", base.alpha);
    c.min_quality = j.value("min_quality", base.min_quality);
    c.resolution = j.value("resolution", base.resolution);
    c.emitters = j.value("emitters", base.emitters);
    c.batch = j.value("batch", base.batch);
    c.iterations = j.value("iterations", base.iterations);
    c.trials = j.value("trials", base.trials);
    c.seed = j.value("seed", base.seed);
    if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
    if (j.contains("sigma_line")) c.sigma_line = j.at("sigma_line").get<double>();
    if (j.contains("sigma_g")) c.sigma_g = j.at("sigma_g").get<double>();
    if (j.contains("eta")) c.eta = j.at("eta").get<double>();
    c.selection =
        j.value("selection", "mu") == std::string("filter") ? SelectionMode::Filter
                                                            : SelectionMode::Mu;
    c.restart = restart_from_name(j.value("restart", "basic"),
                                  j.value("restart_timeout", 50));
    c.step_optimizer = j.value("step_optimizer", "gradient_ascent") == std::string("adam")
                           ? StepOptimizerKind::Adam
                           : StepOptimizerKind::GradientAscent;
    c.batch_thresholds = j.value("batch_thresholds", false);
    c.rastrigin_squared_cosine = j.value("rastrigin_squared_cosine", false);
    c.metrics_every = j.value("metrics_every", 1);
    c.seed_solutions = j.value("seed_solutions", 100);
    return c;
}

std::string ExperimentConfig::config_hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t trial_seed(std::uint64_t experiment_seed, int trial) {
    return substream_seed(experiment_seed, static_cast<std::uint64_t>(trial));
}

std::vector<std::unique_ptr<Emitter>> build_emitters(const ExperimentConfig& config,
                                                     std::uint64_t tseed,
                                                     const Domain& domain) {
    std::vector<std::unique_ptr<Emitter>> out;
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(config.dimension);
    for (int e = 0; e < config.emitters; ++e) {
        const std::uint64_t eseed = substream_seed(tseed, static_cast<std::uint64_t>(e) + 1);
        switch (config.algorithm) {
            case Algorithm::MapElites:
                out.push_back(std::make_unique<GaussianEmitter>(eseed, config.batch, config.sigma));
                break;
            case Algorithm::MapElitesLine:
                out.push_back(std::make_unique<LineEmitter>(eseed, config.batch, config.sigma,
                                                            config.sigma_line));
                break;
            case Algorithm::CmaMe:
                out.push_back(std::make_unique<EsEmitter>(
                    eseed, config.batch, origin, config.sigma, RankingMode::TwoStage,
                    config.selection, config.restart, config.batch_thresholds));
                break;
            case Algorithm::CmaMae:
                out.push_back(std::make_unique<EsEmitter>(
                    eseed, config.batch, origin, config.sigma, RankingMode::Annealed,
                    config.selection, config.restart, config.batch_thresholds));
                break;
            case Algorithm::CmaMega:
                out.push_back(std::make_unique<GradientArborescenceEmitter>(
                    eseed, config.batch, origin, domain.spec().measure_dims(), config.sigma_g,
                    config.eta, config.step_optimizer, RankingMode::TwoStage, config.restart));
                break;
            case Algorithm::CmaMaega:
                out.push_back(std::make_unique<GradientArborescenceEmitter>(
                    eseed, config.batch, origin, domain.spec().measure_dims(), config.sigma_g,
                    config.eta, config.step_optimizer, RankingMode::Annealed, config.restart));
                break;
        }
    }
    return out;
}

ExperimentResult run_trial(const ExperimentConfig& config, int trial, Archive* archive_out,
                           const StepObserver& observer) {
    const auto domain = make_domain(config.domain, config.dimension,
                                    config.rastrigin_squared_cosine);
    Archive archive(config.archive_config());
    const std::uint64_t tseed = trial_seed(config.seed, trial);
    Rng scheduler_rng(substream_seed(tseed, 0));
    if (config.algorithm == Algorithm::MapElites || config.algorithm == Algorithm::MapElitesLine)
        seed_archive(archive, *domain, config.seed_solutions, scheduler_rng);
    auto emitters = build_emitters(config, tseed, *domain);

    ExperimentResult result;
    result.rows = run_ensemble(emitters, archive, *domain, config.iterations,
                               config.metrics_every, trial, observer);
    const Metrics m = archive.metrics();
    result.finals.push_back({trial, m.qd_score, m.coverage, m.best});
    if (archive_out) *archive_out = std::move(archive);
    return result;
}

namespace {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const FileMeta& meta) {
    std::ostringstream out;
    out << meta_comment(meta) << "\n";
    out << "trial,iteration,evaluations,qd_score,coverage,best\n";
    for (const MetricsRow& r : rows) {
        out << r.trial << "," << r.iteration << "," << r.evaluations << ","
            << format_double(r.qd_score) << "," << format_double(r.coverage) << ","
            << format_double(r.best) << "\n";
    }
    write_text_atomic(path, out.str());
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<MetricsRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {  // column header
            header_seen = true;
            continue;
        }
        MetricsRow r;
        std::istringstream fields(line);
        std::string field;
        std::getline(fields, field, ',');
        r.trial = std::stoi(field);
        std::getline(fields, field, ',');
        r.iteration = std::stol(field);
        std::getline(fields, field, ',');
        r.evaluations = std::stol(field);
        std::getline(fields, field, ',');
        r.qd_score = std::stod(field);
        std::getline(fields, field, ',');
        r.coverage = std::stod(field);
        std::getline(fields, field, ',');
        r.best = field == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(field);
        rows.push_back(r);
    }
    return rows;
}

SummaryRow summarize(const std::string& label, const std::vector<TrialFinal>& finals) {
    if (finals.empty()) throw std::invalid_argument("no trials to summarize");
    SummaryRow row;
    row.label = label;
    row.trials = static_cast<int>(finals.size());
    auto stats = [&](auto getter, double& mean, double& se) {
        double sum = 0.0;
        for (const TrialFinal& f : finals) sum += getter(f);
        mean = sum / finals.size();
        if (finals.size() == 1) {
            se = 0.0;
            return;
        }
        double ss = 0.0;
        for (const TrialFinal& f : finals) {
            const double d = getter(f) - mean;
            ss += d * d;
        }
        const double stddev = std::sqrt(ss / (finals.size() - 1));
        se = stddev / std::sqrt(static_cast<double>(finals.size()));
    };
    stats([](const TrialFinal& f) { return f.qd_score; }, row.qd_mean, row.qd_se);
    stats([](const TrialFinal& f) { return f.coverage; }, row.coverage_mean, row.coverage_se);
    stats([](const TrialFinal& f) { return f.best; }, row.best_mean, row.best_se);
    return row;
}

std::string SummaryTable::to_csv() const {
    std::ostringstream out;
    out << "label,trials,qd_score_mean,qd_score_se,coverage_mean,coverage_se,best_mean,best_se\n";
    for (const SummaryRow& r : rows) {
        out << r.label << "," << r.trials << "," << format_double(r.qd_mean) << ","
            << format_double(r.qd_se) << "," << format_double(r.coverage_mean) << ","
            << format_double(r.coverage_se) << "," << format_double(r.best_mean) << ","
            << format_double(r.best_se) << "\n";
    }
    return out.str();
}

std::string SummaryTable::to_markdown() const {
    std::ostringstream out;
    out << "| label | trials | qd_score | coverage | best |\n";
    out << "|---|---|---|---|---|\n";
    char buf[128];
    for (const SummaryRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "| %s | %d | %.2f ± %.2f | %.2f%% ± %.2f | %.2f ± %.2f |",
                      r.label.c_str(), r.trials, r.qd_mean, r.qd_se, 100.0 * r.coverage_mean,
                      100.0 * r.coverage_se, r.best_mean, r.best_se);
        out << buf << "\n";
    }
    return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& dir) {
    config.validate();
    const bool write_outputs = !dir.empty();
    const FileMeta meta{config.config_hash(), config.seed, config.effective_alpha()};
    if (write_outputs) std::filesystem::create_directories(dir);

    std::vector<ExperimentResult> per_trial(config.trials);
    const int workers = std::max(
        1, std::min(config.trials, config.threads > 0
                                       ? config.threads
                                       : static_cast<int>(std::thread::hardware_concurrency())));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= config.trials || failed.load()) break;
            try {
                Archive archive(config.archive_config());
                per_trial[t] = run_trial(config, t, &archive);
                if (write_outputs) {
                    const auto base = std::filesystem::path(dir);
                    nlohmann::json snap = archive_snapshot(archive, meta);
                    write_text_atomic(base / ("archive_t" + std::to_string(t) + ".json"),
                                      snap.dump(2) + "\n");
                    std::ostringstream heat;
                    write_heatmap_csv(heat, archive, meta);
                    write_text_atomic(base / ("heatmap_t" + std::to_string(t) + ".csv"),
                                      heat.str());
                    if (config.write_svg) {
                        std::ostringstream svg;
                        write_heatmap_svg(svg, archive, meta);
                        write_text_atomic(base / ("heatmap_t" + std::to_string(t) + ".svg"),
                                          svg.str());
                    }
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed = true;
                error_message = e.what();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed) throw std::runtime_error("trial failed: " + error_message);

    ExperimentResult merged;
    for (const ExperimentResult& r : per_trial) {
        merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
        merged.finals.insert(merged.finals.end(), r.finals.begin(), r.finals.end());
    }
    if (write_outputs) {
        const auto base = std::filesystem::path(dir);
        write_metrics_csv((base / "metrics.csv").string(), merged.rows, meta);
        SummaryTable table;
        table.rows.push_back(summarize(
            algorithm_name(config.algorithm) + " " + domain_name(config.domain), merged.finals));
        write_text_atomic(base / "summary.csv", meta_comment(meta) + "\n" + table.to_csv());
        write_text_atomic(base / "config.json", config.to_json().dump(2) + "\n");
    }
    return merged;
}

namespace {

SummaryTable run_variants(const ExperimentConfig& base, const std::string& dir,
                          const std::vector<std::pair<std::string, ExperimentConfig>>& variants) {
    SummaryTable table;
    for (const auto& [label, cfg] : variants) {
        const std::string subdir = dir.empty() ? "" : dir + "/" + label;
        const ExperimentResult result = run_experiment(cfg, subdir);
        table.rows.push_back(summarize(label, result.finals));
    }
    if (!dir.empty()) {
        const FileMeta meta{base.config_hash(), base.seed, base.effective_alpha()};
        write_text_atomic(std::filesystem::path(dir) / "summary.csv",
                          meta_comment(meta) + "\n" + table.to_csv());
    }
    return table;
}

}  // namespace

SummaryTable sweep_alpha(const ExperimentConfig& base, const std::vector<double>& alphas,
                         const std::string& dir) {
    std::vector<std::pair<std::string, ExperimentConfig>> variants;
    for (double a : alphas) {
        ExperimentConfig cfg = base;
        cfg.alpha = a;
        variants.emplace_back("alpha_" + format_double(a), cfg);
    }
    return run_variants(base, dir, variants);
}

SummaryTable sweep_min_quality(const ExperimentConfig& base, const std::vector<double>& values,
                               const std::string& dir) {
    std::vector<std::pair<std::string, ExperimentConfig>> variants;
    for (double v : values) {
        ExperimentConfig cfg = base;
        cfg.min_quality = v;
        variants.emplace_back("min_f_" + format_double(v), cfg);
    }
    return run_variants(base, dir, variants);
}

SummaryTable sweep_resolution(const ExperimentConfig& base, const std::vector<int>& resolutions,
                              const std::string& dir) {
    const double base_cells = static_cast<double>(base.resolution[0]) * base.resolution[1];
    std::vector<std::pair<std::string, ExperimentConfig>> variants;
    for (int r : resolutions) {
        ExperimentConfig cfg = base;
        cfg.resolution = {r, r};
        const double cells = static_cast<double>(r) * r;
        if (algorithm_is_annealed(base.algorithm) && cells != base_cells)
            cfg.alpha = convert_learning_rate(base.alpha, base_cells, cells);
        variants.emplace_back("resolution_" + std::to_string(r), cfg);
    }
    return run_variants(base, dir, variants);
}

}  // namespace qdmae

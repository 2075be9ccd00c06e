// Benchmark CLI: seeded experiment runs, ablation sweeps, archive exports,
// and the property verification suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qdmae/experiment.hpp"
#include "qdmae/verify.hpp"

using namespace qdmae;

namespace {

struct RunFlags {
    std::string config_file;
    std::optional<std::string> domain;
    std::optional<std::string> algo;
    std::optional<double> alpha;
    std::optional<double> min_f;
    std::optional<int> resolution;
    std::optional<int> dim;
    std::optional<long> iters;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<int> emitters;
    std::optional<int> batch;
    std::optional<double> sigma;
    std::optional<double> sigma_line;
    std::optional<double> sigma_g;
    std::optional<double> eta;
    std::optional<std::string> selection;
    std::optional<std::string> restart;
    std::optional<int> timeout;
    std::optional<int> metrics_every;
    std::optional<int> threads;
    std::string out = "out";
    bool svg = false;
    bool adam = false;
    bool batch_thresholds = false;
    bool rastrigin_squared_cosine = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_file, "JSON config file (flags override it)");
    cmd->add_option("--domain", f.domain,
                    "lp_sphere | lp_rastrigin | lp_plateau | arm");
    cmd->add_option("--algo", f.algo,
                    "map_elites | map_elites_line | cma_me | cma_mae | cma_mega | cma_maega");
    cmd->add_option("--alpha", f.alpha, "archive learning rate");
    cmd->add_option("--minf", f.min_f, "threshold initialization");
    cmd->add_option("--resolution", f.resolution, "cells per measure dimension (square)");
    cmd->add_option("--dim", f.dim, "solution dimension");
    cmd->add_option("--iters", f.iters, "iterations per trial");
    cmd->add_option("--trials", f.trials, "independent trials");
    cmd->add_option("--seed", f.seed, "experiment seed");
    cmd->add_option("--emitters", f.emitters, "emitters sharing the archive");
    cmd->add_option("--batch", f.batch, "batch size per emitter step");
    cmd->add_option("--sigma", f.sigma, "perturbation / initial step size");
    cmd->add_option("--sigma-line", f.sigma_line, "line term of map_elites_line");
    cmd->add_option("--sigma-g", f.sigma_g, "initial coefficient step size (dqd)");
    cmd->add_option("--eta", f.eta, "gradient step rate (dqd)");
    cmd->add_option("--selection", f.selection, "mu | filter");
    cmd->add_option("--restart", f.restart, "basic | no_improvement | timeout");
    cmd->add_option("--timeout", f.timeout, "iterations per timeout restart");
    cmd->add_option("--metrics-every", f.metrics_every, "metric sampling cadence");
    cmd->add_option("--threads", f.threads, "concurrent trials (0 = auto)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_flag("--svg", f.svg, "also render heatmap SVGs");
    cmd->add_flag("--adam", f.adam, "use the Adam step optimizer (dqd)");
    cmd->add_flag("--batch-thresholds", f.batch_thresholds,
                  "order-invariant batch threshold updates");
    cmd->add_flag("--rastrigin-squared-cosine", f.rastrigin_squared_cosine,
                  "squared-argument Rastrigin cosine variant");
}

ExperimentConfig build_config(const RunFlags& f) {
    ExperimentConfig cfg;
    if (!f.config_file.empty()) {
        std::ifstream in(f.config_file);
        if (!in) throw std::runtime_error("cannot read config " + f.config_file);
        nlohmann::json j;
        in >> j;
        cfg = ExperimentConfig::from_json(j);
        if (f.domain) cfg.domain = domain_from_name(*f.domain);
        if (f.algo) cfg.algorithm = algorithm_from_name(*f.algo);
    } else {
        cfg = ExperimentConfig::defaults_for(domain_from_name(f.domain.value_or("lp_sphere")),
                                             algorithm_from_name(f.algo.value_or("cma_mae")));
    }
    if (f.alpha) cfg.alpha = *f.alpha;
    if (f.min_f) cfg.min_quality = *f.min_f;
    if (f.resolution) cfg.resolution = {*f.resolution, *f.resolution};
    if (f.dim) cfg.dimension = *f.dim;
    if (f.iters) cfg.iterations = *f.iters;
    if (f.trials) cfg.trials = *f.trials;
    if (f.seed) cfg.seed = *f.seed;
    if (f.emitters) cfg.emitters = *f.emitters;
    if (f.batch) cfg.batch = *f.batch;
    if (f.sigma) cfg.sigma = *f.sigma;
    if (f.sigma_line) cfg.sigma_line = *f.sigma_line;
    if (f.sigma_g) cfg.sigma_g = *f.sigma_g;
    if (f.eta) cfg.eta = *f.eta;
    if (f.selection)
        cfg.selection = *f.selection == "filter" ? SelectionMode::Filter : SelectionMode::Mu;
    if (f.restart) {
        const int timeout = f.timeout.value_or(cfg.restart.timeout_iterations);
        if (*f.restart == "basic") cfg.restart = RestartPolicy::basic();
        else if (*f.restart == "no_improvement") cfg.restart = RestartPolicy::no_improvement();
        else if (*f.restart == "timeout") cfg.restart = RestartPolicy::timeout(timeout);
        else throw std::runtime_error("unknown restart rule: " + *f.restart);
    } else if (f.timeout) {
        cfg.restart = RestartPolicy::timeout(*f.timeout);
    }
    if (f.metrics_every) cfg.metrics_every = *f.metrics_every;
    if (f.threads) cfg.threads = *f.threads;
    if (f.adam) cfg.step_optimizer = StepOptimizerKind::Adam;
    cfg.batch_thresholds = cfg.batch_thresholds || f.batch_thresholds;
    cfg.rastrigin_squared_cosine = cfg.rastrigin_squared_cosine || f.rastrigin_squared_cosine;
    cfg.write_svg = f.svg;
    cfg.output_dir = f.out;
    cfg.validate();
    return cfg;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> values;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) values.push_back(std::stod(item));
    return values;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> values;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) values.push_back(std::stoi(item));
    return values;
}

void print_table(const SummaryTable& table, bool markdown) {
    std::cout << (markdown ? table.to_markdown() : table.to_csv());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quality-diversity benchmark runner"};
    app.require_subcommand(1);

    RunFlags run_flags;
    CLI::App* cmd_run = app.add_subcommand("run", "run one experiment");
    add_run_flags(cmd_run, run_flags);

    RunFlags sweep_flags;
    std::string alphas_csv = "0,0.001,0.01,0.1,1";
    CLI::App* cmd_alpha = app.add_subcommand("sweep-alpha", "learning-rate ablation");
    add_run_flags(cmd_alpha, sweep_flags);
    cmd_alpha->add_option("--alphas", alphas_csv, "comma-separated learning rates");

    std::string minf_csv = "-80,-40,0,40,80";
    CLI::App* cmd_minf = app.add_subcommand("sweep-minf", "threshold-floor ablation");
    add_run_flags(cmd_minf, sweep_flags);
    cmd_minf->add_option("--values", minf_csv, "comma-separated min_f values");

    std::string resolutions_csv = "50,100,200";
    CLI::App* cmd_res = app.add_subcommand("sweep-resolution",
                                           "resolution sweep with converted alpha");
    add_run_flags(cmd_res, sweep_flags);
    cmd_res->add_option("--resolutions", resolutions_csv, "comma-separated cells per dimension");

    std::string snapshot_path, heatmap_format = "csv", heatmap_out;
    CLI::App* cmd_heatmap = app.add_subcommand("heatmap", "export a heatmap from a snapshot");
    cmd_heatmap->add_option("snapshot", snapshot_path, "archive snapshot JSON")->required();
    cmd_heatmap->add_option("--format", heatmap_format, "csv | svg");
    cmd_heatmap->add_option("--out", heatmap_out, "output file (default stdout)");

    std::vector<std::string> metric_files;
    bool markdown = false;
    CLI::App* cmd_summarize = app.add_subcommand("summarize", "summarize metrics CSVs");
    cmd_summarize->add_option("metrics", metric_files, "metrics.csv files")->required();
    cmd_summarize->add_flag("--markdown", markdown, "render a markdown table");

    CLI::App* cmd_verify = app.add_subcommand("verify", "run the property suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            const ExperimentConfig cfg = build_config(run_flags);
            const ExperimentResult result = run_experiment(cfg);
            SummaryTable table;
            table.rows.push_back(summarize(
                algorithm_name(cfg.algorithm) + " " + domain_name(cfg.domain), result.finals));
            print_table(table, false);
            std::cout << "wrote " << cfg.output_dir << "\n";
        } else if (cmd_alpha->parsed()) {
            const ExperimentConfig cfg = build_config(sweep_flags);
            print_table(sweep_alpha(cfg, parse_doubles(alphas_csv), cfg.output_dir), markdown);
        } else if (cmd_minf->parsed()) {
            const ExperimentConfig cfg = build_config(sweep_flags);
            print_table(sweep_min_quality(cfg, parse_doubles(minf_csv), cfg.output_dir),
                        markdown);
        } else if (cmd_res->parsed()) {
            const ExperimentConfig cfg = build_config(sweep_flags);
            print_table(sweep_resolution(cfg, parse_ints(resolutions_csv), cfg.output_dir),
                        markdown);
        } else if (cmd_heatmap->parsed()) {
            std::ifstream in(snapshot_path);
            if (!in) throw std::runtime_error("cannot read " + snapshot_path);
            nlohmann::json snap;
            in >> snap;
            const Archive archive = archive_from_snapshot(snap);
            FileMeta meta;
            if (snap.contains("meta")) {
                meta.config_hash = snap["meta"].value("config", "none");
                meta.seed = snap["meta"].value("seed", 0ULL);
                meta.alpha = snap["meta"].value("alpha", 0.0);
            }
            std::ostringstream out;
            if (heatmap_format == "svg") write_heatmap_svg(out, archive, meta);
            else if (heatmap_format == "csv") write_heatmap_csv(out, archive, meta);
            else throw std::runtime_error("unknown heatmap format: " + heatmap_format);
            if (heatmap_out.empty()) {
                std::cout << out.str();
            } else {
                std::ofstream file(heatmap_out, std::ios::binary);
                file << out.str();
                std::cout << "wrote " << heatmap_out << "\n";
            }
        } else if (cmd_summarize->parsed()) {
            SummaryTable table;
            for (const std::string& path : metric_files) {
                const auto rows = read_metrics_csv(path);
                std::map<int, TrialFinal> finals;
                for (const MetricsRow& r : rows) {
                    TrialFinal& f = finals[r.trial];
                    f.trial = r.trial;
                    f.qd_score = r.qd_score;
                    f.coverage = r.coverage;
                    f.best = r.best;
                }
                std::vector<TrialFinal> list;
                for (auto& [trial, f] : finals) list.push_back(f);
                table.rows.push_back(summarize(path, list));
            }
            print_table(table, markdown);
        } else if (cmd_verify->parsed()) {
            const auto results = run_property_suite();
            bool all_pass = true;
            for (const auto& r : results) {
                std::printf("[%s] P%d %s — %s\n", r.pass ? "PASS" : "FAIL", r.id,
                            r.name.c_str(), r.detail.c_str());
                all_pass = all_pass && r.pass;
            }
            if (!all_pass) {
                std::fprintf(stderr, "verification failed\n");
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

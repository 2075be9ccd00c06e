#include "qdmae/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "qdmae/experiment.hpp"

namespace qdmae {

namespace {

std::string fmt(double v) { return format_double(v); }

// Constant-objective test domain: f = 50 everywhere, measures are the first
// two solution coordinates.
class FlatDomain : public Domain {
public:
    explicit FlatDomain(int dimension) {
        spec_.kind = DomainKind::LpPlateau;  // nearest named kind; unused
        spec_.dimension = dimension;
        spec_.measure_lower = Eigen::Vector2d(-2.0, -2.0);
        spec_.measure_upper = Eigen::Vector2d(2.0, 2.0);
        spec_.gradients_available = false;
    }
    const DomainSpec& spec() const override { return spec_; }
    Evaluation evaluate(const Eigen::VectorXd& theta, bool) const override {
        Evaluation eval;
        eval.objective = 50.0;
        eval.raw_objective = 50.0;
        eval.measures = Eigen::Vector2d(theta[0], theta[1]);
        return eval;
    }

private:
    DomainSpec spec_;
};

std::vector<int> argsort_objective_desc(const std::vector<StepCandidate>& candidates) {
    std::vector<int> order(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return candidates[a].objective > candidates[b].objective;
    });
    return order;
}

CheckResult check_objective_ranking_equivalence() {
    // CMA-MAE with a zero learning rate must rank every step exactly like a
    // pure objective sort.
    CheckResult result{1, "alpha=0 ranking equals objective ranking", true, ""};
    long steps_checked = 0, mismatches = 0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        ExperimentConfig cfg = ExperimentConfig::defaults_for(DomainKind::LpSphere,
                                                              Algorithm::CmaMae);
        cfg.dimension = 20;
        cfg.alpha = 0.0;
        cfg.min_quality = 0.0;
        cfg.emitters = 1;
        cfg.iterations = 500;
        cfg.trials = 1;
        cfg.seed = seed;
        cfg.metrics_every = 500;
        auto observer = [&](long, int, const StepReport& report) {
            steps_checked += 1;
            if (report.ranking != argsort_objective_desc(report.candidates)) mismatches += 1;
        };
        run_trial(cfg, 0, nullptr, observer);
    }
    result.pass = mismatches == 0;
    result.detail = std::to_string(steps_checked) + " steps, " + std::to_string(mismatches) +
                    " ranking mismatches";
    return result;
}

CheckResult check_cma_me_equivalence() {
    // With alpha = 1 and a floor of -1e9 the annealed algorithm must replay
    // CMA-ME insertion for insertion.
    CheckResult result{2, "alpha=1 matches the elitist two-stage algorithm", true, ""};
    using Sequence = std::vector<std::pair<long, double>>;
    long compared = 0;
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        auto run = [&](Algorithm algorithm) {
            ExperimentConfig cfg = ExperimentConfig::defaults_for(DomainKind::LpSphere, algorithm);
            cfg.dimension = 20;
            cfg.alpha = 1.0;
            cfg.min_quality = -1e9;
            cfg.emitters = 1;
            cfg.iterations = 500;
            cfg.trials = 1;
            cfg.seed = seed;
            cfg.metrics_every = 500;
            cfg.selection = SelectionMode::Mu;
            cfg.restart = RestartPolicy::basic();
            Sequence accepted;
            auto observer = [&](long, int, const StepReport& report) {
                for (const StepCandidate& c : report.candidates)
                    if (c.changed_archive()) accepted.emplace_back(c.cell_index, c.objective);
            };
            run_trial(cfg, 0, nullptr, observer);
            return accepted;
        };
        const Sequence annealed = run(Algorithm::CmaMae);
        const Sequence elitist = run(Algorithm::CmaMe);
        compared += static_cast<long>(elitist.size());
        if (annealed != elitist) {
            result.pass = false;
            result.detail = "insertion sequences diverge at seed " + std::to_string(seed);
            return result;
        }
    }
    result.detail = std::to_string(compared) + " accepted insertions identical across 3 seeds";
    return result;
}

CheckResult check_threshold_monotonicity() {
    // Replaying one candidate stream into archives of increasing learning
    // rate must keep every cell threshold ordered (larger alpha, larger or
    // equal threshold).
    CheckResult result{3, "thresholds non-decreasing in the learning rate", true, ""};
    ArchiveConfig base;
    base.lower_bounds = Eigen::Vector2d(0.0, 0.0);
    base.upper_bounds = Eigen::Vector2d(1.0, 1.0);
    base.resolution = {10, 10};
    base.min_quality = 0.0;
    std::vector<Archive> archives;
    std::vector<double> alphas;
    for (int i = 0; i <= 10; ++i) {
        alphas.push_back(i / 10.0);
        ArchiveConfig cfg = base;
        cfg.learning_rate = alphas.back();
        archives.emplace_back(cfg);
    }
    Rng rng(202);
    const Eigen::VectorXd solution = Eigen::VectorXd::Zero(2);
    long violations = 0;
    for (int step = 0; step < 1000; ++step) {
        const double f = 100.0 * rng.uniform();
        const Eigen::Vector2d m(rng.uniform(), rng.uniform());
        for (Archive& a : archives) a.try_insert(solution, f, m);
        for (size_t i = 0; i + 1 < archives.size(); ++i)
            for (long cell = 0; cell < archives[i].cell_count(); ++cell)
                if (archives[i].cell(cell).threshold >
                    archives[i + 1].cell(cell).threshold + 1e-12)
                    violations += 1;
    }
    result.pass = violations == 0;
    result.detail = "1000 insertions x 11 learning rates, " + std::to_string(violations) +
                    " ordering violations";
    return result;
}

CheckResult check_density_descent() {
    // Flat objective: the annealed ranking must equal the ranking by the
    // occupancy count of the target cell at the moment each candidate lands.
    CheckResult result{4, "flat objective ranks by ascending occupancy", true, ""};
    const FlatDomain domain(10);
    ArchiveConfig acfg;
    acfg.lower_bounds = domain.spec().measure_lower;
    acfg.upper_bounds = domain.spec().measure_upper;
    acfg.resolution = {32, 32};
    acfg.learning_rate = 0.01;
    acfg.min_quality = 0.0;
    Archive archive(acfg);
    EsEmitter emitter(substream_seed(7, 1), 36, Eigen::VectorXd::Zero(10), 0.5,
                      RankingMode::Annealed, SelectionMode::Mu, RestartPolicy::basic());
    std::map<long, long> counts;
    long mismatches = 0, max_count = 0;
    for (int step = 0; step < 1000; ++step) {
        const StepReport report = emitter.step(archive, domain);
        std::vector<long> seen_before(report.candidates.size());
        for (size_t i = 0; i < report.candidates.size(); ++i) {
            long& count = counts[report.candidates[i].cell_index];
            seen_before[i] = count;
            count += 1;
            max_count = std::max(max_count, count);
        }
        std::vector<int> expected(report.candidates.size());
        for (size_t i = 0; i < expected.size(); ++i) expected[i] = static_cast<int>(i);
        std::stable_sort(expected.begin(), expected.end(),
                         [&](int a, int b) { return seen_before[a] < seen_before[b]; });
        if (expected != report.ranking) mismatches += 1;
    }
    result.pass = mismatches == 0;
    result.detail = "1000 steps, " + std::to_string(mismatches) +
                    " ranking mismatches, max cell occupancy " + std::to_string(max_count);
    return result;
}

CheckResult check_closed_form() {
    CheckResult result{5, "threshold closed form matches the recurrence", true, ""};
    Rng rng(909);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
        const double objective = -50.0 + 150.0 * rng.uniform();
        const double min_quality = objective - (0.1 + 100.0 * rng.uniform());
        const double alpha = 0.01 + 0.98 * rng.uniform();
        double t = min_quality;
        for (long k = 0; k <= 1000; ++k) {
            const double closed = threshold_closed_form(k, objective, min_quality, alpha);
            worst = std::max(worst, std::abs(closed - t));
            t = (1.0 - alpha) * t + alpha * objective;
        }
    }
    result.pass = worst <= 1e-9;
    result.detail = "max |closed - iterated| = " + fmt(worst) + " over 100 instances, k <= 1000";
    return result;
}

CheckResult check_batch_update() {
    CheckResult result{6, "batch update equals permutation-averaged updates", true, ""};
    Rng rng(4242);
    double worst = 0.0;
    bool order_invariant = true;
    for (int instance = 0; instance < 100; ++instance) {
        const double alpha = 0.01 + 0.98 * rng.uniform();
        const double start = 100.0 * rng.uniform() - 50.0;
        const int count = 1 + static_cast<int>(rng.uniform_index(6));
        std::vector<Candidate> group;
        for (int i = 0; i < count; ++i) {
            Candidate c;
            c.solution = Eigen::VectorXd::Constant(3, static_cast<double>(i));
            c.objective = start - 20.0 + 60.0 * rng.uniform();  // some below threshold
            c.measures = Eigen::Vector2d(0.5, 0.5);
            group.push_back(c);
        }

        auto make_archive = [&]() {
            ArchiveConfig cfg;
            cfg.lower_bounds = Eigen::Vector2d(0.0, 0.0);
            cfg.upper_bounds = Eigen::Vector2d(1.0, 1.0);
            cfg.resolution = {2, 2};
            cfg.learning_rate = alpha;
            cfg.min_quality = start;
            return Archive(cfg);
        };
        Archive archive = make_archive();
        archive.batch_insert({group});
        const long cell = archive.calculate_cell(group.front().measures);
        const double batch_threshold = archive.cell(cell).threshold;

        // Brute-force oracle: average the sequential recurrence over every
        // permutation of the candidates that clear the start threshold.
        std::vector<double> accepted;
        for (const Candidate& c : group)
            if (c.objective > start) accepted.push_back(c.objective);
        std::sort(accepted.begin(), accepted.end());
        double mean_threshold = start;
        if (!accepted.empty()) {
            double sum = 0.0;
            long permutations = 0;
            do {
                double t = start;
                for (double f : accepted) t = (1.0 - alpha) * t + alpha * f;
                sum += t;
                permutations += 1;
            } while (std::next_permutation(accepted.begin(), accepted.end()));
            mean_threshold = sum / static_cast<double>(permutations);
        }
        worst = std::max(worst, std::abs(batch_threshold - mean_threshold));

        // Exact order invariance of the implementation itself.
        std::vector<Candidate> shuffled = group;
        for (size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.uniform_index(static_cast<long>(i))]);
        Archive archive2 = make_archive();
        archive2.batch_insert({shuffled});
        const Cell& c1 = archive.cell(cell);
        const Cell& c2 = archive2.cell(cell);
        if (c1.threshold != c2.threshold ||
            c1.occupied() != c2.occupied() ||
            (c1.occupied() && *c1.objective != *c2.objective))
            order_invariant = false;
    }
    result.pass = worst <= 1e-9 && order_invariant;
    result.detail = "max |batch - permutation mean| = " + fmt(worst) +
                    (order_invariant ? ", order-invariant" : ", ORDER DEPENDENT");
    return result;
}

CheckResult check_conversion_invariance() {
    // Constant objective, insertions dispersed evenly: the mean threshold of
    // a 50x50 archive at alpha must match a 100x100 archive at the converted
    // alpha after the same insertion budget.
    CheckResult result{7, "learning-rate conversion preserves mean threshold", true, ""};
    const double alpha1 = 0.01;
    const double alpha2 = convert_learning_rate(alpha1, 50.0 * 50.0, 100.0 * 100.0);
    const double objective = 100.0;
    auto mean_threshold = [&](int res, double alpha) {
        ArchiveConfig cfg;
        cfg.lower_bounds = Eigen::Vector2d(0.0, 0.0);
        cfg.upper_bounds = Eigen::Vector2d(1.0, 1.0);
        cfg.resolution = {res, res};
        cfg.learning_rate = alpha;
        cfg.min_quality = 0.0;
        Archive archive(cfg);
        const Eigen::VectorXd solution = Eigen::VectorXd::Zero(1);
        const double width = 1.0 / res;
        long inserted = 0;
        while (inserted < 100000) {
            for (int i = 0; i < res && inserted < 100000; ++i)
                for (int j = 0; j < res && inserted < 100000; ++j) {
                    const Eigen::Vector2d m((i + 0.5) * width, (j + 0.5) * width);
                    archive.try_insert(solution, objective, m);
                    inserted += 1;
                }
        }
        double sum = 0.0;
        for (long c = 0; c < archive.cell_count(); ++c) sum += archive.cell(c).threshold;
        return sum / static_cast<double>(archive.cell_count());
    };
    const double m1 = mean_threshold(50, alpha1);
    const double m2 = mean_threshold(100, alpha2);
    const double rel = std::abs(m1 - m2) / std::max(std::abs(m1), std::abs(m2));
    result.pass = rel <= 0.01;
    result.detail = "mean thresholds " + fmt(m1) + " vs " + fmt(m2) + ", relative gap " + fmt(rel);
    return result;
}

double gradient_check(const Domain& domain, const Eigen::VectorXd& theta) {
    // Central finite differences on the transformed objective and measures;
    // error is relative to the gradient norm so near-critical coordinates do
    // not inflate it.
    const Evaluation at = domain.evaluate(theta, true);
    const Eigen::Index n = theta.size();
    const int k = domain.spec().measure_dims();
    Eigen::VectorXd fd_obj(n);
    Eigen::MatrixXd fd_jac(k, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
        Eigen::VectorXd lo = theta, hi = theta;
        lo[i] -= h;
        hi[i] += h;
        const Evaluation elo = domain.evaluate(lo, false);
        const Evaluation ehi = domain.evaluate(hi, false);
        fd_obj[i] = (ehi.objective - elo.objective) / (2.0 * h);
        fd_jac.col(i) = (ehi.measures - elo.measures) / (2.0 * h);
    }
    auto rel = [](double err, double a, double b) {
        return err / std::max({a, b, 1e-6});
    };
    double worst = rel((*at.objective_gradient - fd_obj).norm(), at.objective_gradient->norm(),
                       fd_obj.norm());
    for (int j = 0; j < k; ++j)
        worst = std::max(worst, rel((at.measure_jacobian->row(j) - fd_jac.row(j)).norm(),
                                    at.measure_jacobian->row(j).norm(), fd_jac.row(j).norm()));
    return worst;
}

CheckResult check_gradients() {
    CheckResult result{8, "analytic gradients match finite differences", true, ""};
    Rng rng(5150);
    double worst = 0.0;
    for (DomainKind kind :
         {DomainKind::LpSphere, DomainKind::LpRastrigin, DomainKind::LpPlateau}) {
        const auto domain = make_domain(kind, 20);
        int checked = 0;
        while (checked < 100) {
            Eigen::VectorXd theta(20);
            bool smooth = true;
            for (int i = 0; i < 20; ++i) {
                theta[i] = -8.0 + 16.0 * rng.uniform();
                if (std::abs(std::abs(theta[i]) - 5.12) < 1e-3) smooth = false;
            }
            if (!smooth) continue;
            worst = std::max(worst, gradient_check(*domain, theta));
            checked += 1;
        }
    }
    {
        const auto domain = make_domain(DomainKind::ArmRepertoire, 10);
        for (int checked = 0; checked < 100; ++checked) {
            // Common angle plus noise keeps the variance below the clamp.
            const double base = -std::numbers::pi + 2.0 * std::numbers::pi * rng.uniform();
            Eigen::VectorXd theta =
                Eigen::VectorXd::Constant(10, base) + 0.3 * rng.normal_vector(10);
            worst = std::max(worst, gradient_check(*domain, theta));
        }
    }
    result.pass = worst <= 1e-5;
    result.detail = "max relative error " + fmt(worst) + " over 400 points";
    return result;
}

CheckResult check_arm_coverage() {
    CheckResult result{9, "arm optimal coverage", true, ""};
    const double at100 = arm_optimal_coverage(100);
    const double at2000 = arm_optimal_coverage(2000);
    const double quarter_pi = std::numbers::pi / 4.0;
    const bool exact = std::abs(100.0 * at100 - 80.24) < 0.005;
    const bool limit = std::abs(at2000 - quarter_pi) / quarter_pi <= 0.005;
    result.pass = exact && limit;
    result.detail = "100x100 -> " + fmt(100.0 * at100) + "% (want 80.24%), 2000x2000 -> " +
                    fmt(100.0 * at2000) + "% (pi/4 = " + fmt(100.0 * quarter_pi) + "%)";
    return result;
}

}  // namespace

std::vector<CheckResult> run_property_suite() {
    return {
        check_objective_ranking_equivalence(),
        check_cma_me_equivalence(),
        check_threshold_monotonicity(),
        check_density_descent(),
        check_closed_form(),
        check_batch_update(),
        check_conversion_invariance(),
        check_gradients(),
        check_arm_coverage(),
    };
}

}  // namespace qdmae

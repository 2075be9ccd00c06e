#include "qdmae/emitters.hpp"

#include <algorithm>
#include <stdexcept>

namespace qdmae {

std::vector<int> rank_improvement(const std::vector<StepCandidate>& candidates,
                                  RankingMode mode) {
    std::vector<int> order(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    if (mode == RankingMode::Annealed) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return candidates[a].delta > candidates[b].delta;
        });
    } else {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            const bool new_a = candidates[a].discovered_new_cell();
            const bool new_b = candidates[b].discovered_new_cell();
            if (new_a != new_b) return new_a;
            if (new_a) return candidates[a].objective > candidates[b].objective;
            return candidates[a].delta > candidates[b].delta;
        });
    }
    return order;
}

Eigen::VectorXd normalize_gradient(const Eigen::VectorXd& g) {
    const double norm = g.norm();
    if (norm == 0.0 || !std::isfinite(norm)) return Eigen::VectorXd::Zero(g.size());
    return g / norm;
}

Eigen::VectorXd arborescence_direction(const Eigen::VectorXd& coefficients,
                                       const Eigen::VectorXd& objective_gradient,
                                       const Eigen::MatrixXd& measure_jacobian) {
    if (coefficients.size() != measure_jacobian.rows() + 1)
        throw std::invalid_argument("coefficient vector must have one entry per gradient");
    Eigen::VectorXd dir = coefficients[0] * objective_gradient;
    for (Eigen::Index j = 0; j < measure_jacobian.rows(); ++j)
        dir += coefficients[j + 1] * measure_jacobian.row(j).transpose();
    return dir;
}

namespace {

// Uniform elite for perturbation-based emitters and restart means.
const Eigen::VectorXd& random_elite(const Archive& archive, Rng& rng) {
    const auto& occupied = archive.occupied_cells();
    if (occupied.empty()) throw std::runtime_error("archive has no occupied cells");
    const long cell = occupied[rng.uniform_index(static_cast<long>(occupied.size()))];
    return *archive.cell(cell).solution;
}

StepCandidate to_candidate(int index, const InsertOutcome& outcome, double objective) {
    StepCandidate c;
    c.index = index;
    c.cell_index = outcome.cell_index;
    c.objective = objective;
    c.delta = outcome.delta;
    c.status = outcome.status;
    return c;
}

}  // namespace

StepReport GaussianEmitter::step(Archive& archive, const Domain& domain) {
    StepReport report;
    const int n = domain.spec().dimension;
    for (int i = 0; i < batch_; ++i) {
        const Eigen::VectorXd& parent = random_elite(archive, rng_);
        const Eigen::VectorXd offspring = parent + sigma_ * rng_.normal_vector(n);
        const Evaluation eval = domain.evaluate(offspring, false);
        const InsertOutcome out = archive.try_insert(offspring, eval.objective, eval.measures);
        report.candidates.push_back(to_candidate(i, out, eval.objective));
        if (out.accepted()) report.accepted += 1;
    }
    report.evaluations = batch_;
    return report;
}

StepReport LineEmitter::step(Archive& archive, const Domain& domain) {
    StepReport report;
    const int n = domain.spec().dimension;
    for (int i = 0; i < batch_; ++i) {
        const auto& occupied = archive.occupied_cells();
        if (occupied.empty()) throw std::runtime_error("archive has no occupied cells");
        const long a = occupied[rng_.uniform_index(static_cast<long>(occupied.size()))];
        long b = a;
        if (occupied.size() > 1) {
            do {
                b = occupied[rng_.uniform_index(static_cast<long>(occupied.size()))];
            } while (b == a);
        }
        const Eigen::VectorXd& parent = *archive.cell(a).solution;
        const Eigen::VectorXd& other = *archive.cell(b).solution;
        // Draw order is part of the determinism contract: isotropic vector,
        // then the scalar line coefficient.
        const Eigen::VectorXd iso = rng_.normal_vector(n);
        const double line = rng_.normal();
        const Eigen::VectorXd offspring =
            parent + sigma_iso_ * iso + sigma_line_ * line * (parent - other);
        const Evaluation eval = domain.evaluate(offspring, false);
        const InsertOutcome out = archive.try_insert(offspring, eval.objective, eval.measures);
        report.candidates.push_back(to_candidate(i, out, eval.objective));
        if (out.accepted()) report.accepted += 1;
    }
    report.evaluations = batch_;
    return report;
}

EsEmitter::EsEmitter(std::uint64_t seed, int batch, Eigen::VectorXd initial_mean, double sigma,
                     RankingMode ranking, SelectionMode selection, RestartPolicy policy,
                     bool batch_thresholds, double flat_tolerance, int stagnation_steps)
    : Emitter(seed, batch),
      es_(std::move(initial_mean), sigma, batch),
      sigma0_(sigma),
      ranking_(ranking),
      selection_(selection),
      policy_(policy),
      batch_thresholds_(batch_thresholds),
      flat_tolerance_(flat_tolerance),
      stagnation_steps_(stagnation_steps) {}

StepReport EsEmitter::step(Archive& archive, const Domain& domain) {
    StepReport report;
    const auto samples = es_.sample(batch_, rng_);

    if (batch_thresholds_) {
        std::vector<Candidate> batch;
        std::vector<double> objectives;
        for (int i = 0; i < batch_; ++i) {
            const Evaluation eval = domain.evaluate(samples[i], false);
            batch.push_back({samples[i], eval.objective, eval.measures});
            objectives.push_back(eval.objective);
        }
        const auto outcomes = archive.batch_insert_flat(batch);
        for (int i = 0; i < batch_; ++i)
            report.candidates.push_back(to_candidate(i, outcomes[i], objectives[i]));
    } else {
        // Sequential insertion in sample order; each delta is taken against
        // the threshold in force when the candidate is processed.
        for (int i = 0; i < batch_; ++i) {
            const Evaluation eval = domain.evaluate(samples[i], false);
            const InsertOutcome out = archive.try_insert(samples[i], eval.objective, eval.measures);
            report.candidates.push_back(to_candidate(i, out, eval.objective));
        }
    }
    for (const StepCandidate& c : report.candidates)
        if (c.changed_archive()) report.accepted += 1;

    report.ranking = rank_improvement(report.candidates, ranking_);

    int parents = std::max(1, batch_ / 2);
    std::vector<int> selected;
    if (selection_ == SelectionMode::Filter && report.accepted > 0) {
        for (int idx : report.ranking)
            if (report.candidates[idx].changed_archive()) selected.push_back(idx);
    } else {
        selected.assign(report.ranking.begin(), report.ranking.begin() + parents);
    }
    std::vector<Eigen::VectorXd> parent_solutions;
    parent_solutions.reserve(selected.size());
    for (int idx : selected) parent_solutions.push_back(samples[idx]);
    es_.adapt(parent_solutions);

    const double ranking_span = report.candidates[report.ranking.front()].delta -
                                report.candidates[report.ranking.back()].delta;
    const double best_signal = report.candidates[report.ranking.front()].delta;
    if (best_signal > best_signal_) {
        best_signal_ = best_signal;
        stale_steps_ = 0;
    } else {
        stale_steps_ += 1;
    }
    if (stale_steps_ >= stagnation_steps_ ||
        should_restart(es_, report.accepted > 0, policy_, ranking_span, flat_tolerance_)) {
        report.restarted = true;
        if (!archive.empty()) {
            es_.reset(random_elite(archive, rng_), sigma0_);
        } else {
            es_.reset(Eigen::VectorXd::Zero(es_.dimension()), sigma0_);
        }
        best_signal_ = -std::numeric_limits<double>::infinity();
        stale_steps_ = 0;
    }
    report.evaluations = batch_;
    return report;
}

GradientArborescenceEmitter::GradientArborescenceEmitter(
    std::uint64_t seed, int batch, Eigen::VectorXd initial_solution, int measure_dims,
    double sigma_g, double eta, StepOptimizerKind optimizer, RankingMode ranking,
    RestartPolicy policy, double flat_tolerance)
    : Emitter(seed, batch),
      solution_(std::move(initial_solution)),
      coeff_es_(Eigen::VectorXd::Zero(measure_dims + 1), sigma_g, batch),
      sigma_g_(sigma_g),
      eta_(eta),
      optimizer_kind_(optimizer),
      adam_(solution_.size(), AdamParams{eta}),
      ranking_(ranking),
      policy_(policy),
      flat_tolerance_(flat_tolerance) {}

StepReport GradientArborescenceEmitter::step(Archive& archive, const Domain& domain) {
    StepReport report;
    if (!domain.spec().gradients_available)
        throw std::runtime_error("domain provides no gradients");

    // Evaluate and insert the solution point itself, then branch from it.
    Evaluation at_point = domain.evaluate(solution_, true);
    if (!at_point.objective_gradient || !at_point.measure_jacobian)
        throw std::runtime_error("domain provides no gradients");
    const InsertOutcome point_outcome =
        archive.try_insert(solution_, at_point.objective, at_point.measures);
    if (point_outcome.accepted()) report.accepted += 1;

    const Eigen::VectorXd grad_f = normalize_gradient(*at_point.objective_gradient);
    Eigen::MatrixXd grad_m = *at_point.measure_jacobian;
    for (Eigen::Index j = 0; j < grad_m.rows(); ++j)
        grad_m.row(j) = normalize_gradient(grad_m.row(j).transpose()).transpose();

    const auto coefficients = coeff_es_.sample(batch_, rng_);
    std::vector<Eigen::VectorXd> directions;
    directions.reserve(batch_);
    for (int i = 0; i < batch_; ++i) {
        directions.push_back(arborescence_direction(coefficients[i], grad_f, grad_m));
        const Eigen::VectorXd branched = solution_ + directions[i];
        const Evaluation eval = domain.evaluate(branched, false);
        const InsertOutcome out = archive.try_insert(branched, eval.objective, eval.measures);
        report.candidates.push_back(to_candidate(i, out, eval.objective));
        if (out.accepted()) report.accepted += 1;
    }

    report.ranking = rank_improvement(report.candidates, ranking_);

    // Recombined branch gradient over the top half, then one ascent step.
    const int parents = std::max(1, batch_ / 2);
    Eigen::VectorXd weights(parents);
    for (int i = 0; i < parents; ++i)
        weights[i] = std::log(parents + 0.5) - std::log(static_cast<double>(i + 1));
    weights /= weights.sum();
    Eigen::VectorXd step_gradient = Eigen::VectorXd::Zero(solution_.size());
    for (int i = 0; i < parents; ++i)
        step_gradient += weights[i] * directions[report.ranking[i]];

    if (optimizer_kind_ == StepOptimizerKind::Adam) {
        solution_ += adam_.step(step_gradient);
    } else {
        solution_ += eta_ * step_gradient;
    }

    std::vector<Eigen::VectorXd> parent_coefficients;
    parent_coefficients.reserve(parents);
    for (int i = 0; i < parents; ++i)
        parent_coefficients.push_back(coefficients[report.ranking[i]]);
    coeff_es_.adapt(parent_coefficients);

    const double ranking_span = report.candidates[report.ranking.front()].delta -
                                report.candidates[report.ranking.back()].delta;
    if (should_restart(coeff_es_, report.accepted > 0, policy_, ranking_span, flat_tolerance_) ||
        !solution_.allFinite()) {
        report.restarted = true;
        if (!archive.empty()) solution_ = random_elite(archive, rng_);
        coeff_es_.reset(Eigen::VectorXd::Zero(coeff_es_.dimension()), sigma_g_);
        adam_.reset();
    }
    report.evaluations = batch_ + 1;
    return report;
}

}  // namespace qdmae

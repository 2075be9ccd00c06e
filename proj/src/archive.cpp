#include "qdmae/archive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace qdmae {

long ArchiveConfig::cell_count() const {
    long m = 1;
    for (int r : resolution) m *= r;
    return m;
}

void ArchiveConfig::validate() const {
    const auto k = static_cast<Eigen::Index>(resolution.size());
    if (k < 1) throw std::invalid_argument("archive needs at least one measure dimension");
    if (lower_bounds.size() != k || upper_bounds.size() != k)
        throw std::invalid_argument("measure bounds must match resolution dimensions");
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(lower_bounds[i] < upper_bounds[i]))
            throw std::invalid_argument("lower bound must be below upper bound in every dimension");
    }
    for (int r : resolution) {
        if (r < 1) throw std::invalid_argument("resolution must be at least 1 per dimension");
    }
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
        throw std::invalid_argument("learning rate must lie in [0, 1]");
    if (!std::isfinite(min_quality))
        throw std::invalid_argument("min quality must be finite");
}

Archive::Archive(ArchiveConfig config) : config_(std::move(config)) {
    config_.validate();
    cells_.resize(config_.cell_count());
    for (Cell& c : cells_) c.threshold = config_.min_quality;
    // Row-major strides: last dimension varies fastest.
    const int k = config_.measure_dims();
    strides_.assign(k, 1);
    for (int d = k - 2; d >= 0; --d)
        strides_[d] = strides_[d + 1] * config_.resolution[d + 1];
}

long Archive::calculate_cell(const Eigen::VectorXd& measures) const {
    const int k = config_.measure_dims();
    if (measures.size() != k)
        throw std::invalid_argument("measure vector has wrong dimension");
    long index = 0;
    for (int d = 0; d < k; ++d) {
        const double m = measures[d];
        if (!std::isfinite(m))
            throw std::invalid_argument("non-finite measure value in dimension " + std::to_string(d));
        const double width =
            (config_.upper_bounds[d] - config_.lower_bounds[d]) / config_.resolution[d];
        long bin = static_cast<long>(std::floor((m - config_.lower_bounds[d]) / width));
        bin = std::clamp(bin, 0L, static_cast<long>(config_.resolution[d]) - 1);
        index += bin * strides_[d];
    }
    return index;
}

void Archive::accept(Cell& cell, const Eigen::VectorXd& solution, double objective,
                     const Eigen::VectorXd& measures, long index) {
    if (!cell.occupied()) {
        occupied_ += 1;
        occupied_list_.insert(
            std::lower_bound(occupied_list_.begin(), occupied_list_.end(), index), index);
    }
    // Best-solution retention: the stored occupant never regresses even when
    // the threshold accepts a lower objective.
    if (!cell.objective || objective > *cell.objective) {
        cell.solution = solution;
        cell.objective = objective;
        cell.measures = measures;
    }
}

InsertOutcome Archive::try_insert(const Eigen::VectorXd& solution, double objective,
                                  const Eigen::VectorXd& measures) {
    if (!std::isfinite(objective))
        throw std::invalid_argument("non-finite objective");
    if (solution_dim_ >= 0 && solution.size() != solution_dim_)
        throw std::invalid_argument("candidate dimension mismatch");
    const long index = calculate_cell(measures);
    Cell& cell = cells_[index];

    InsertOutcome out;
    out.cell_index = index;
    out.delta = objective - cell.threshold;
    cell.occupancy += 1;
    if (objective > cell.threshold) {
        out.status = cell.occupied() ? InsertStatus::Improved : InsertStatus::NewlyOccupied;
        cell.threshold =
            (1.0 - config_.learning_rate) * cell.threshold + config_.learning_rate * objective;
        accept(cell, solution, objective, measures, index);
        if (solution_dim_ < 0) solution_dim_ = solution.size();
    }
    return out;
}

std::vector<InsertOutcome> Archive::batch_insert(
    const std::vector<std::vector<Candidate>>& cell_groups) {
    std::vector<InsertOutcome> outcomes;
    for (const auto& group : cell_groups) {
        if (group.empty()) continue;
        const long index = calculate_cell(group.front().measures);
        for (const Candidate& c : group) {
            if (calculate_cell(c.measures) != index)
                throw std::invalid_argument("mixed cell indices within one batch group");
            if (!std::isfinite(c.objective))
                throw std::invalid_argument("non-finite objective");
        }
        Cell& cell = cells_[index];
        const double start_threshold = cell.threshold;
        const bool was_occupied = cell.occupied();

        // Accepted subset, judged against the start-of-batch threshold.
        std::vector<double> accepted_objectives;
        const Candidate* best = nullptr;
        for (const Candidate& c : group) {
            cell.occupancy += 1;
            InsertOutcome out;
            out.cell_index = index;
            out.delta = c.objective - start_threshold;
            if (c.objective > start_threshold) {
                out.status = was_occupied ? InsertStatus::Improved : InsertStatus::NewlyOccupied;
                accepted_objectives.push_back(c.objective);
                if (!best || c.objective > best->objective) best = &c;
            }
            outcomes.push_back(out);
        }
        if (!accepted_objectives.empty()) {
            // Sorted summation keeps the threshold bit-identical under any
            // permutation of the batch.
            std::sort(accepted_objectives.begin(), accepted_objectives.end(),
                      std::greater<double>());
            double sum = 0.0;
            for (double f : accepted_objectives) sum += f;
            const double c = static_cast<double>(accepted_objectives.size());
            const double mean = sum / c;
            const double keep = std::pow(1.0 - config_.learning_rate, c);
            cell.threshold = keep * start_threshold + mean * (1.0 - keep);
            accept(cell, best->solution, best->objective, best->measures, index);
            if (solution_dim_ < 0) solution_dim_ = best->solution.size();
        }
    }
    return outcomes;
}

std::vector<InsertOutcome> Archive::batch_insert_flat(const std::vector<Candidate>& candidates) {
    std::unordered_map<long, std::vector<size_t>> by_cell;
    std::vector<long> order;  // first-seen cell order
    for (size_t i = 0; i < candidates.size(); ++i) {
        const long index = calculate_cell(candidates[i].measures);
        auto [it, inserted] = by_cell.try_emplace(index);
        if (inserted) order.push_back(index);
        it->second.push_back(i);
    }
    std::vector<std::vector<Candidate>> groups;
    groups.reserve(order.size());
    for (long index : order) {
        std::vector<Candidate> g;
        for (size_t i : by_cell[index]) g.push_back(candidates[i]);
        groups.push_back(std::move(g));
    }
    const auto grouped = batch_insert(groups);
    std::vector<InsertOutcome> flat(candidates.size());
    size_t pos = 0;
    for (long index : order)
        for (size_t i : by_cell[index]) flat[i] = grouped[pos++];
    return flat;
}

Metrics Archive::metrics() const {
    Metrics m;
    const double total = static_cast<double>(cell_count());
    double sum = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (long index : occupied_list_) {
        const double f = *cells_[index].objective;
        sum += f;
        best = std::max(best, f);
    }
    m.qd_score = sum / total;
    m.coverage = static_cast<double>(occupied_) / total;
    if (occupied_ > 0) m.best = best;
    return m;
}

std::vector<int> Archive::cell_coords(long index) const {
    const int k = config_.measure_dims();
    std::vector<int> coords(k);
    for (int d = 0; d < k; ++d) {
        coords[d] = static_cast<int>(index / strides_[d]);
        index %= strides_[d];
    }
    return coords;
}

void Archive::restore_cell(long index, Cell cell) {
    if (index < 0 || index >= cell_count()) throw std::invalid_argument("cell index out of range");
    Cell& slot = cells_[index];
    const bool was_occupied = slot.occupied();
    if (was_occupied && !cell.occupied()) {
        occupied_ -= 1;
        occupied_list_.erase(
            std::lower_bound(occupied_list_.begin(), occupied_list_.end(), index));
    } else if (!was_occupied && cell.occupied()) {
        occupied_ += 1;
        occupied_list_.insert(
            std::lower_bound(occupied_list_.begin(), occupied_list_.end(), index), index);
    }
    if (cell.occupied() && solution_dim_ < 0) solution_dim_ = cell.solution->size();
    slot = std::move(cell);
}

double convert_learning_rate(double alpha1, double cells1, double cells2) {
    if (!(alpha1 >= 0.0 && alpha1 <= 1.0))
        throw std::invalid_argument("learning rate must lie in [0, 1]");
    if (!(cells1 >= 1.0 && cells2 >= 1.0))
        throw std::invalid_argument("cell counts must be at least 1");
    return 1.0 - std::pow(1.0 - alpha1, cells2 / cells1);
}

double threshold_closed_form(long k, double objective, double min_quality, double alpha) {
    if (k < 0) throw std::invalid_argument("k must be non-negative");
    return objective - (objective - min_quality) * std::pow(1.0 - alpha, static_cast<double>(k));
}

}  // namespace qdmae

#ifndef QDMAE_ARCHIVE_HPP
#define QDMAE_ARCHIVE_HPP

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace qdmae {

/// Configuration of a uniform-grid archive over a bounded measure space.
struct ArchiveConfig {
    Eigen::VectorXd lower_bounds;  // one entry per measure dimension
    Eigen::VectorXd upper_bounds;
    std::vector<int> resolution;   // cells per dimension, product = cell_count()
    double learning_rate = 0.0;    // threshold blend factor, in [0, 1]
    double min_quality = 0.0;      // initial acceptance threshold of every cell

    int measure_dims() const { return static_cast<int>(resolution.size()); }
    long cell_count() const;
    void validate() const;  // throws std::invalid_argument on violations
};

enum class InsertStatus { NewlyOccupied, Improved, Rejected };

/// Result of one insertion attempt. `delta` is objective minus the acceptance
/// threshold the candidate was evaluated against.
struct InsertOutcome {
    double delta = 0.0;
    InsertStatus status = InsertStatus::Rejected;
    long cell_index = -1;

    bool accepted() const { return status != InsertStatus::Rejected; }
};

struct Cell {
    std::optional<Eigen::VectorXd> solution;
    std::optional<double> objective;  // best objective ever accepted here
    std::optional<Eigen::VectorXd> measures;
    double threshold = 0.0;
    long occupancy = 0;  // solutions generated in this cell, accepted or not

    bool occupied() const { return objective.has_value(); }
};

struct Metrics {
    double qd_score = 0.0;  // sum of occupied objectives / cell count
    double coverage = 0.0;  // occupied cells / cell count
    double best = std::numeric_limits<double>::quiet_NaN();  // NaN when empty
};

/// A candidate for batch insertion.
struct Candidate {
    Eigen::VectorXd solution;
    double objective = 0.0;
    Eigen::VectorXd measures;
};

/// Tessellated archive with per-cell annealed acceptance thresholds.
///
/// Acceptance is strict: a candidate enters a cell only when its objective
/// exceeds the cell threshold; equality rejects. Accepted candidates move the
/// threshold by t <- (1-a) t + a f, while the stored occupant keeps the best
/// objective ever accepted (metrics are computed from occupants, not
/// thresholds). Occupancy counts every generated candidate that maps to the
/// cell, accepted or not.
///
/// Not safe for concurrent mutation; a single writer at a time.
class Archive {
public:
    explicit Archive(ArchiveConfig config);

    /// Uniform-grid binning of a measure vector to a row-major flat cell
    /// index. Out-of-bounds measures clamp to the nearest edge cell.
    /// Throws std::invalid_argument on non-finite measures.
    long calculate_cell(const Eigen::VectorXd& measures) const;

    /// Single-candidate insertion per the annealed acceptance rule.
    InsertOutcome try_insert(const Eigen::VectorXd& solution, double objective,
                             const Eigen::VectorXd& measures);

    /// Order-invariant batch insertion. Each inner vector must map to a
    /// single cell; deltas are computed against the threshold held at batch
    /// start, and the per-cell threshold moves to
    /// (1-a)^c t + f* (1 - (1-a)^c) with f* the mean objective of the c
    /// candidates that exceed the start threshold.
    std::vector<InsertOutcome> batch_insert(
        const std::vector<std::vector<Candidate>>& cell_groups);

    /// Groups a flat batch by cell and applies batch_insert; outcomes are
    /// returned in the original candidate order.
    std::vector<InsertOutcome> batch_insert_flat(
        const std::vector<Candidate>& candidates);

    Metrics metrics() const;

    const ArchiveConfig& config() const { return config_; }
    long cell_count() const { return static_cast<long>(cells_.size()); }
    const Cell& cell(long index) const { return cells_.at(index); }
    long occupied_count() const { return occupied_; }
    bool empty() const { return occupied_ == 0; }

    /// Ascending indices of occupied cells.
    const std::vector<long>& occupied_cells() const { return occupied_list_; }

    /// Multi-dimensional grid coordinates of a flat index.
    std::vector<int> cell_coords(long index) const;

    /// Replaces one cell wholesale. Snapshot loading only; keeps the
    /// occupancy bookkeeping consistent.
    void restore_cell(long index, Cell cell);

private:
    void accept(Cell& cell, const Eigen::VectorXd& solution, double objective,
                const Eigen::VectorXd& measures, long index);

    ArchiveConfig config_;
    std::vector<Cell> cells_;
    std::vector<long> strides_;
    std::vector<long> occupied_list_;
    long occupied_ = 0;
    Eigen::Index solution_dim_ = -1;  // latched on first insertion
};

/// Learning-rate conversion between archives with cell counts m1 and m2:
/// returns 1 - (1 - alpha1)^(m2/m1).
double convert_learning_rate(double alpha1, double cells1, double cells2);

/// Closed form of the threshold recurrence under a constant objective:
/// t(k) = objective - (objective - min_quality) (1 - alpha)^k.
double threshold_closed_form(long k, double objective, double min_quality,
                             double alpha);

}  // namespace qdmae

#endif

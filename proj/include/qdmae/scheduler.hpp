#ifndef QDMAE_SCHEDULER_HPP
#define QDMAE_SCHEDULER_HPP

#include <functional>
#include <memory>
#include <vector>

#include "qdmae/archive.hpp"
#include "qdmae/domains.hpp"
#include "qdmae/emitters.hpp"
#include "qdmae/rng.hpp"

namespace qdmae {

struct MetricsRow {
    int trial = 0;
    long iteration = 0;
    long evaluations = 0;
    double qd_score = 0.0;
    double coverage = 0.0;
    double best = std::numeric_limits<double>::quiet_NaN();
};

/// Fills the archive with `count` solutions drawn from N(0, I), evaluated and
/// inserted like any candidate. Used to start the perturbation-based
/// algorithms; these evaluations are not charged to the run budget.
void seed_archive(Archive& archive, const Domain& domain, int count, Rng& rng);

/// Round-robin multi-emitter loop over a shared archive. Emitters step in
/// index order each iteration; metrics are recorded after every iteration
/// (thinned to every `metrics_every`-th, always including the last).
/// An observer, when set, sees each emitter's report as it happens.
using StepObserver =
    std::function<void(long iteration, int emitter_index, const StepReport&)>;

std::vector<MetricsRow> run_ensemble(std::vector<std::unique_ptr<Emitter>>& emitters,
                                     Archive& archive, const Domain& domain, long iterations,
                                     int metrics_every = 1, int trial = 0,
                                     const StepObserver& observer = nullptr);

}  // namespace qdmae

#endif

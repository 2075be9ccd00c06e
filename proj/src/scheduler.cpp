#include "qdmae/scheduler.hpp"

namespace qdmae {

void seed_archive(Archive& archive, const Domain& domain, int count, Rng& rng) {
    const int n = domain.spec().dimension;
    for (int i = 0; i < count; ++i) {
        const Eigen::VectorXd solution = rng.normal_vector(n);
        const Evaluation eval = domain.evaluate(solution, false);
        archive.try_insert(solution, eval.objective, eval.measures);
    }
}

std::vector<MetricsRow> run_ensemble(std::vector<std::unique_ptr<Emitter>>& emitters,
                                     Archive& archive, const Domain& domain, long iterations,
                                     int metrics_every, int trial,
                                     const StepObserver& observer) {
    if (metrics_every < 1) metrics_every = 1;
    std::vector<MetricsRow> series;
    long evaluations = 0;
    for (long iter = 1; iter <= iterations; ++iter) {
        for (size_t e = 0; e < emitters.size(); ++e) {
            const StepReport report = emitters[e]->step(archive, domain);
            evaluations += report.evaluations;
            if (observer) observer(iter, static_cast<int>(e), report);
        }
        if (iter % metrics_every == 0 || iter == iterations) {
            const Metrics m = archive.metrics();
            series.push_back({trial, iter, evaluations, m.qd_score, m.coverage, m.best});
        }
    }
    return series;
}

}  // namespace qdmae

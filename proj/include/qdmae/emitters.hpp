#ifndef QDMAE_EMITTERS_HPP
#define QDMAE_EMITTERS_HPP

#include <memory>
#include <vector>

#include "qdmae/adam.hpp"
#include "qdmae/archive.hpp"
#include "qdmae/cma_es.hpp"
#include "qdmae/domains.hpp"
#include "qdmae/rng.hpp"

namespace qdmae {

enum class RankingMode { Annealed, TwoStage };
enum class SelectionMode { Mu, Filter };
enum class StepOptimizerKind { GradientAscent, Adam };

/// One candidate of a step, in sample order.
struct StepCandidate {
    int index = 0;
    long cell_index = -1;
    double objective = 0.0;
    double delta = 0.0;
    InsertStatus status = InsertStatus::Rejected;

    bool discovered_new_cell() const { return status == InsertStatus::NewlyOccupied; }
    bool changed_archive() const { return status != InsertStatus::Rejected; }
};

/// Best-first permutation of candidate indices.
///
/// Annealed ranks by descending delta. TwoStage places every new-cell
/// discovery (by descending objective) strictly before everything else
/// (by descending delta). Ties keep ascending candidate index.
std::vector<int> rank_improvement(const std::vector<StepCandidate>& candidates,
                                  RankingMode mode);

struct StepReport {
    std::vector<StepCandidate> candidates;  // sample order
    std::vector<int> ranking;               // empty for emitters that do not rank
    int accepted = 0;
    bool restarted = false;
    long evaluations = 0;
};

class Emitter {
public:
    explicit Emitter(std::uint64_t seed, int batch) : rng_(seed), batch_(batch) {}
    virtual ~Emitter() = default;

    virtual StepReport step(Archive& archive, const Domain& domain) = 0;

    int batch_size() const { return batch_; }

protected:
    Rng rng_;
    int batch_;
};

/// MAP-Elites: isotropic Gaussian perturbation of uniformly selected elites.
class GaussianEmitter : public Emitter {
public:
    GaussianEmitter(std::uint64_t seed, int batch, double sigma)
        : Emitter(seed, batch), sigma_(sigma) {}
    StepReport step(Archive& archive, const Domain& domain) override;

private:
    double sigma_;
};

/// MAP-Elites (line): isotropic noise plus a scalar-scaled difference vector
/// between two elites.
class LineEmitter : public Emitter {
public:
    LineEmitter(std::uint64_t seed, int batch, double sigma_iso, double sigma_line)
        : Emitter(seed, batch), sigma_iso_(sigma_iso), sigma_line_(sigma_line) {}
    StepReport step(Archive& archive, const Domain& domain) override;

private:
    double sigma_iso_;
    double sigma_line_;
};

/// CMA-ES emitter driving the archive-improvement ranking; covers both the
/// elitist two-stage configuration and the annealed configuration.
///
/// Besides the distribution-degeneracy criteria, the basic restart rule here
/// includes stagnation of the ranking signal: the emitter restarts when the
/// best ranking value of a step has not beaten this incarnation's record for
/// kStagnationSteps consecutive steps. Archive-coupled ranking signals decay
/// once a region saturates without tripping any state degeneracy, so an
/// emitter without a stagnation criterion would grind on a spent region for
/// the rest of a run instead of redeploying to a fresh elite.
class EsEmitter : public Emitter {
public:
    static constexpr int kStagnationSteps = 300;

    EsEmitter(std::uint64_t seed, int batch, Eigen::VectorXd initial_mean, double sigma,
              RankingMode ranking, SelectionMode selection, RestartPolicy policy,
              bool batch_thresholds = false,
              double flat_tolerance = CmaEs::kFlatRankingTolerance,
              int stagnation_steps = kStagnationSteps);
    StepReport step(Archive& archive, const Domain& domain) override;

    CmaEs& distribution() { return es_; }

private:
    CmaEs es_;
    double sigma0_;
    RankingMode ranking_;
    SelectionMode selection_;
    RestartPolicy policy_;
    bool batch_thresholds_;  // opt-in order-invariant batch insertion
    double flat_tolerance_;
    int stagnation_steps_;
    double best_signal_ = -std::numeric_limits<double>::infinity();
    int stale_steps_ = 0;
};

/// DQD emitter: branches solutions along coefficient-weighted objective and
/// measure gradients, steps the solution point along the recombined branch
/// gradient, and adapts a CMA-ES distribution over the coefficients.
class GradientArborescenceEmitter : public Emitter {
public:
    GradientArborescenceEmitter(std::uint64_t seed, int batch, Eigen::VectorXd initial_solution,
                                int measure_dims, double sigma_g, double eta,
                                StepOptimizerKind optimizer, RankingMode ranking,
                                RestartPolicy policy,
                                double flat_tolerance = CmaEs::kFlatRankingTolerance);
    StepReport step(Archive& archive, const Domain& domain) override;

    const Eigen::VectorXd& solution_point() const { return solution_; }
    CmaEs& coefficient_distribution() { return coeff_es_; }

private:
    Eigen::VectorXd solution_;
    CmaEs coeff_es_;
    double sigma_g_;
    double eta_;
    StepOptimizerKind optimizer_kind_;
    Adam adam_;
    RankingMode ranking_;
    RestartPolicy policy_;
    double flat_tolerance_;
};

/// Branch direction c0 grad_f + sum_j c_j grad_mj from one coefficient
/// vector; gradients are passed already normalized.
Eigen::VectorXd arborescence_direction(const Eigen::VectorXd& coefficients,
                                       const Eigen::VectorXd& objective_gradient,
                                       const Eigen::MatrixXd& measure_jacobian);

/// L2 normalization with the zero vector mapped to itself.
Eigen::VectorXd normalize_gradient(const Eigen::VectorXd& g);

}  // namespace qdmae

#endif

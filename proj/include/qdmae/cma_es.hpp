#ifndef QDMAE_CMA_ES_HPP
#define QDMAE_CMA_ES_HPP

#include <vector>

#include <Eigen/Core>

#include "qdmae/rng.hpp"

namespace qdmae {

enum class RestartKind { Basic, NoImprovement, Timeout };

struct RestartPolicy {
    RestartKind kind = RestartKind::Basic;
    int timeout_iterations = 50;  // used by Timeout only

    static RestartPolicy basic() { return {RestartKind::Basic, 0}; }
    static RestartPolicy no_improvement() { return {RestartKind::NoImprovement, 0}; }
    static RestartPolicy timeout(int iterations) { return {RestartKind::Timeout, iterations}; }
};

/// CMA-ES search distribution N(mean, sigma^2 C) with cumulative step-size
/// adaptation, rank-one and rank-mu covariance updates, and log recombination
/// weights recomputed per adapt call from the number of parents handed in
/// (mu selection passes lambda/2, filter selection passes however many
/// candidates changed the archive).
///
/// Degeneracy criteria for the basic restart rule, checked on the cached
/// eigendecomposition: condition number above 1e14, sigma times the largest
/// covariance eigenvalue below 1e-12, eigenvalues below 1e-20, or any
/// non-finite state entry. Thresholds are the documented constants below.
/// Emitters additionally restart when the ranking signal of a step goes flat
/// (best minus worst ranking value below kFlatRankingTolerance): a converged
/// search sees a locally flat objective long before sigma degenerates, and
/// without this criterion it would keep sampling a dead cell.
class CmaEs {
public:
    static constexpr double kMaxCondition = 1e14;
    static constexpr double kMinScaledEigenvalue = 1e-12;
    static constexpr double kEigenvalueFloor = 1e-20;
    static constexpr double kFlatRankingTolerance = 1e-12;

    CmaEs(Eigen::VectorXd mean, double sigma, int lambda);

    /// Draws `count` solutions mean + sigma * B D z. Throws when the state is
    /// degenerate (restart required) instead of returning junk.
    std::vector<Eigen::VectorXd> sample(int count, Rng& rng);

    /// Moves the distribution toward the parents, given best-first. Parents
    /// must come from the current distribution. Comparison-based: only the
    /// order matters, never the ranking values.
    void adapt(const std::vector<Eigen::VectorXd>& parents_best_first);

    /// Resets to an isotropic distribution around a fresh mean.
    void reset(const Eigen::VectorXd& mean, double sigma);

    bool degenerate();

    const Eigen::VectorXd& mean() const { return mean_; }
    double sigma() const { return sigma_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    const Eigen::VectorXd& path_sigma() const { return path_sigma_; }
    const Eigen::VectorXd& path_cov() const { return path_cov_; }
    long generations() const { return generations_; }
    int lambda() const { return lambda_; }
    int dimension() const { return static_cast<int>(mean_.size()); }
    long eigen_interval() const { return eigen_interval_; }
    double condition_number();

    /// Restores internal state during deserialization.
    void restore(const Eigen::MatrixXd& cov, const Eigen::VectorXd& path_sigma,
                 const Eigen::VectorXd& path_cov, long generations);

private:
    struct Weights {
        Eigen::VectorXd w;  // normalized, descending
        double mu_eff = 0.0;
        double cc = 0.0, cs = 0.0, c1 = 0.0, cmu = 0.0, damps = 0.0;
    };
    Weights weights_for(int parents) const;
    void refresh_eigen();
    void maybe_refresh();

    Eigen::VectorXd mean_;
    double sigma_;
    int lambda_;
    Eigen::MatrixXd cov_;
    Eigen::VectorXd path_sigma_;
    Eigen::VectorXd path_cov_;
    long generations_ = 0;  // adapt calls since construction or last reset
    double chi_n_;

    // Eigendecomposition cache, refreshed every eigen_interval_ adapt calls.
    Eigen::MatrixXd eigen_basis_;        // B
    Eigen::VectorXd eigen_scale_;        // D = sqrt(eigenvalues)
    Eigen::MatrixXd cov_inv_sqrt_;       // B D^-1 B^T
    double eig_min_ = 1.0, eig_max_ = 1.0;
    bool eigen_valid_ = false;
    bool non_positive_definite_ = false;
    long adapts_since_eigen_ = 0;
    long eigen_interval_ = 1;
};

/// Restart decision for one scheduler step. Basic fires on distribution
/// degeneracy; NoImprovement additionally fires when the step changed nothing
/// in the archive; Timeout additionally fires after the configured number of
/// adapt steps since the last restart.
bool should_restart(CmaEs& es, bool archive_changed, const RestartPolicy& policy);

/// As above, with the step's ranking span (best minus worst ranking value)
/// folded into the degeneracy check: a span below the tolerance restarts
/// under every policy.
bool should_restart(CmaEs& es, bool archive_changed, const RestartPolicy& policy,
                    double ranking_span,
                    double flat_tolerance = CmaEs::kFlatRankingTolerance);

}  // namespace qdmae

#endif

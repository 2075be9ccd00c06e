#include "qdmae/cma_es.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace qdmae {

CmaEs::CmaEs(Eigen::VectorXd mean, double sigma, int lambda)
    : mean_(std::move(mean)), sigma_(sigma), lambda_(lambda) {
    const int n = dimension();
    if (n < 1) throw std::invalid_argument("dimension must be positive");
    if (lambda_ < 1) throw std::invalid_argument("lambda must be positive");
    if (!(sigma_ > 0.0)) throw std::invalid_argument("sigma must be positive");
    cov_ = Eigen::MatrixXd::Identity(n, n);
    path_sigma_ = Eigen::VectorXd::Zero(n);
    path_cov_ = Eigen::VectorXd::Zero(n);
    chi_n_ = std::sqrt(static_cast<double>(n)) *
             (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    // Amortization schedule from the default mu = lambda/2 constants.
    const Weights w = weights_for(std::max(1, lambda_ / 2));
    eigen_interval_ = std::max(1L, static_cast<long>(std::floor(1.0 / (10.0 * n * (w.c1 + w.cmu)))));
}

CmaEs::Weights CmaEs::weights_for(int parents) const {
    if (parents < 1) throw std::invalid_argument("need at least one parent");
    const int n = dimension();
    Weights out;
    out.w.resize(parents);
    for (int i = 0; i < parents; ++i)
        out.w[i] = std::log(parents + 0.5) - std::log(static_cast<double>(i + 1));
    out.w /= out.w.sum();
    out.mu_eff = 1.0 / out.w.squaredNorm();
    out.cc = (4.0 + out.mu_eff / n) / (n + 4.0 + 2.0 * out.mu_eff / n);
    out.cs = (out.mu_eff + 2.0) / (n + out.mu_eff + 5.0);
    out.c1 = 2.0 / ((n + 1.3) * (n + 1.3) + out.mu_eff);
    out.cmu = std::min(1.0 - out.c1, 2.0 * (out.mu_eff - 2.0 + 1.0 / out.mu_eff) /
                                         ((n + 2.0) * (n + 2.0) + out.mu_eff));
    out.damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((out.mu_eff - 1.0) / (n + 1.0)) - 1.0) + out.cs;
    return out;
}

void CmaEs::refresh_eigen() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_);
    if (solver.info() != Eigen::Success) {
        non_positive_definite_ = true;
        eigen_valid_ = false;
        return;
    }
    const Eigen::VectorXd& values = solver.eigenvalues();
    eig_min_ = values.minCoeff();
    eig_max_ = values.maxCoeff();
    if (!(eig_min_ > 0.0) || !std::isfinite(eig_max_)) {
        non_positive_definite_ = true;
        eigen_valid_ = false;
        return;
    }
    eigen_basis_ = solver.eigenvectors();
    eigen_scale_ = values.cwiseSqrt();
    cov_inv_sqrt_ = eigen_basis_ * eigen_scale_.cwiseInverse().asDiagonal() *
                    eigen_basis_.transpose();
    eigen_valid_ = true;
    non_positive_definite_ = false;
    adapts_since_eigen_ = 0;
}

void CmaEs::maybe_refresh() {
    if (!eigen_valid_ || adapts_since_eigen_ >= eigen_interval_) refresh_eigen();
}

std::vector<Eigen::VectorXd> CmaEs::sample(int count, Rng& rng) {
    if (count < 0) throw std::invalid_argument("sample count must be non-negative");
    if (!(sigma_ > 0.0)) throw std::runtime_error("degenerate step size; restart required");
    maybe_refresh();
    if (non_positive_definite_)
        throw std::runtime_error("covariance not positive definite; restart required");
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(count);
    const int n = dimension();
    for (int i = 0; i < count; ++i) {
        const Eigen::VectorXd z = rng.normal_vector(n);
        samples.push_back(mean_ + sigma_ * (eigen_basis_ * (eigen_scale_.asDiagonal() * z)));
    }
    return samples;
}

void CmaEs::adapt(const std::vector<Eigen::VectorXd>& parents_best_first) {
    const int parents = static_cast<int>(parents_best_first.size());
    const Weights wt = weights_for(parents);
    const int n = dimension();
    maybe_refresh();

    // Weighted recombination in the sampling frame of the old mean.
    Eigen::MatrixXd y(n, parents);
    for (int i = 0; i < parents; ++i)
        y.col(i) = (parents_best_first[i] - mean_) / sigma_;
    const Eigen::VectorXd y_w = y * wt.w;
    mean_ += sigma_ * y_w;
    generations_ += 1;

    path_sigma_ = (1.0 - wt.cs) * path_sigma_ +
                  std::sqrt(wt.cs * (2.0 - wt.cs) * wt.mu_eff) * (cov_inv_sqrt_ * y_w);
    const double ps_norm = path_sigma_.norm();
    const double expected = std::sqrt(
        1.0 - std::pow(1.0 - wt.cs, 2.0 * static_cast<double>(generations_)));
    const bool h_sigma = ps_norm / expected < (1.4 + 2.0 / (n + 1.0)) * chi_n_;

    path_cov_ = (1.0 - wt.cc) * path_cov_;
    if (h_sigma) path_cov_ += std::sqrt(wt.cc * (2.0 - wt.cc) * wt.mu_eff) * y_w;

    const double stall = h_sigma ? 0.0 : wt.c1 * wt.cc * (2.0 - wt.cc);
    cov_ *= 1.0 - wt.c1 - wt.cmu + stall;
    cov_.selfadjointView<Eigen::Lower>().rankUpdate(path_cov_, wt.c1);
    for (int i = 0; i < parents; ++i)
        cov_.selfadjointView<Eigen::Lower>().rankUpdate(y.col(i), wt.cmu * wt.w[i]);
    cov_.triangularView<Eigen::StrictlyUpper>() = cov_.transpose();

    sigma_ *= std::exp((wt.cs / wt.damps) * (ps_norm / chi_n_ - 1.0));
    adapts_since_eigen_ += 1;
}

void CmaEs::reset(const Eigen::VectorXd& mean, double sigma) {
    if (mean.size() != mean_.size()) throw std::invalid_argument("mean dimension mismatch");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    mean_ = mean;
    sigma_ = sigma;
    cov_ = Eigen::MatrixXd::Identity(mean_.size(), mean_.size());
    path_sigma_.setZero();
    path_cov_.setZero();
    generations_ = 0;
    eigen_valid_ = false;
    non_positive_definite_ = false;
}

bool CmaEs::degenerate() {
    if (!std::isfinite(sigma_) || !mean_.allFinite() || !cov_.allFinite() ||
        !path_sigma_.allFinite() || !path_cov_.allFinite())
        return true;
    maybe_refresh();
    if (non_positive_definite_) return true;
    if (eig_min_ < kEigenvalueFloor) return true;
    if (eig_max_ / eig_min_ > kMaxCondition) return true;
    if (sigma_ * eig_max_ < kMinScaledEigenvalue) return true;
    return false;
}

double CmaEs::condition_number() {
    maybe_refresh();
    if (non_positive_definite_) return std::numeric_limits<double>::infinity();
    return eig_max_ / eig_min_;
}

void CmaEs::restore(const Eigen::MatrixXd& cov, const Eigen::VectorXd& path_sigma,
                    const Eigen::VectorXd& path_cov, long generations) {
    cov_ = cov;
    path_sigma_ = path_sigma;
    path_cov_ = path_cov;
    generations_ = generations;
    eigen_valid_ = false;
    non_positive_definite_ = false;
}

bool should_restart(CmaEs& es, bool archive_changed, const RestartPolicy& policy) {
    if (es.degenerate()) return true;
    switch (policy.kind) {
        case RestartKind::Basic:
            return false;
        case RestartKind::NoImprovement:
            return !archive_changed;
        case RestartKind::Timeout:
            return es.generations() >= policy.timeout_iterations;
    }
    return false;
}

bool should_restart(CmaEs& es, bool archive_changed, const RestartPolicy& policy,
                    double ranking_span, double flat_tolerance) {
    if (std::abs(ranking_span) < flat_tolerance) return true;
    return should_restart(es, archive_changed, policy);
}

}  // namespace qdmae

#include "qdmae/domains.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qdmae {

namespace {

constexpr double kLpBound = 5.12;
constexpr double kLpShift = 5.12 * 0.4;  // global optimum position per coordinate

double two_pi() { return 2.0 * std::numbers::pi; }

}  // namespace

std::string domain_name(DomainKind kind) {
    switch (kind) {
        case DomainKind::LpSphere: return "lp_sphere";
        case DomainKind::LpRastrigin: return "lp_rastrigin";
        case DomainKind::LpPlateau: return "lp_plateau";
        case DomainKind::ArmRepertoire: return "arm";
    }
    throw std::logic_error("unknown domain kind");
}

DomainKind domain_from_name(const std::string& name) {
    if (name == "lp_sphere") return DomainKind::LpSphere;
    if (name == "lp_rastrigin") return DomainKind::LpRastrigin;
    if (name == "lp_plateau") return DomainKind::LpPlateau;
    if (name == "arm") return DomainKind::ArmRepertoire;
    throw std::invalid_argument("unknown domain: " + name);
}

double lp_clip(double x) {
    return (x >= -kLpBound && x <= kLpBound) ? x : kLpBound / x;
}

double lp_clip_grad(double x) {
    return (x >= -kLpBound && x <= kLpBound) ? 1.0 : -kLpBound / (x * x);
}

namespace {

// Weighted-sum projection of each half of the solution onto one measure.
void lp_measures(const Eigen::VectorXd& theta, Evaluation& eval, bool with_gradients) {
    const Eigen::Index n = theta.size();
    const Eigen::Index half = n / 2;
    double m1 = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < half; ++i) m1 += lp_clip(theta[i]);
    for (Eigen::Index i = half; i < n; ++i) m2 += lp_clip(theta[i]);
    eval.measures = Eigen::Vector2d(m1, m2);
    if (with_gradients) {
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, n);
        for (Eigen::Index i = 0; i < half; ++i) jac(0, i) = lp_clip_grad(theta[i]);
        for (Eigen::Index i = half; i < n; ++i) jac(1, i) = lp_clip_grad(theta[i]);
        eval.measure_jacobian = std::move(jac);
    }
}

class LinearProjectionDomain : public Domain {
public:
    LinearProjectionDomain(DomainKind kind, int dimension, bool squared_cosine)
        : kind_(kind), squared_cosine_(squared_cosine) {
        if (dimension < 2 || dimension % 2 != 0)
            throw std::invalid_argument("linear projection needs an even dimension >= 2");
        spec_.kind = kind;
        spec_.dimension = dimension;
        const double extent = kLpBound * dimension / 2.0;
        spec_.measure_lower = Eigen::Vector2d(-extent, -extent);
        spec_.measure_upper = Eigen::Vector2d(extent, extent);
        spec_.gradients_available = true;
        spec_.raw_best = 0.0;
        if (kind == DomainKind::LpPlateau) {
            spec_.raw_worst = 100.0;
        } else {
            // Worst-case anchor evaluated at the all-(-5.12) point.
            const Eigen::VectorXd anchor = Eigen::VectorXd::Constant(dimension, -kLpBound);
            spec_.raw_worst = raw(anchor, nullptr);
        }
    }

    const DomainSpec& spec() const override { return spec_; }

    Evaluation evaluate(const Eigen::VectorXd& theta, bool with_gradients) const override {
        if (theta.size() != spec_.dimension)
            throw std::invalid_argument("solution dimension mismatch");
        Evaluation eval;
        Eigen::VectorXd raw_grad;
        eval.raw_objective = raw(theta, with_gradients ? &raw_grad : nullptr);
        const double scale = 100.0 / (spec_.raw_best - spec_.raw_worst);
        eval.objective = (eval.raw_objective - spec_.raw_worst) * scale;
        if (with_gradients) eval.objective_gradient = scale * raw_grad;
        lp_measures(theta, eval, with_gradients);
        return eval;
    }

private:
    double raw(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
        const Eigen::Index n = theta.size();
        if (grad) grad->setZero(n);
        double sum = 0.0;
        switch (kind_) {
            case DomainKind::LpSphere:
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double u = theta[i] - kLpShift;
                    sum += u * u;
                    if (grad) (*grad)[i] = 2.0 * u;
                }
                return sum;
            case DomainKind::LpRastrigin:
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double u = theta[i] - kLpShift;
                    if (squared_cosine_) {
                        sum += u * u - 10.0 * std::cos(two_pi() * u * u);
                        if (grad)
                            (*grad)[i] = 2.0 * u + 20.0 * two_pi() * u * std::sin(two_pi() * u * u);
                    } else {
                        sum += u * u - 10.0 * std::cos(two_pi() * u);
                        if (grad) (*grad)[i] = 2.0 * u + 10.0 * two_pi() * std::sin(two_pi() * u);
                    }
                }
                return 10.0 * static_cast<double>(n) + sum;
            case DomainKind::LpPlateau:
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double x = theta[i];
                    if (x < -kLpBound || x > kLpBound) {
                        const double excess = std::abs(x) - kLpBound;
                        sum += excess * excess;
                        if (grad) (*grad)[i] = 2.0 * excess * (x > 0 ? 1.0 : -1.0) / n;
                    }
                }
                return sum / static_cast<double>(n);
            default:
                throw std::logic_error("not a linear projection objective");
        }
    }

    DomainKind kind_;
    bool squared_cosine_;
    DomainSpec spec_;
};

class ArmRepertoireDomain : public Domain {
public:
    explicit ArmRepertoireDomain(int dimension) {
        if (dimension < 1) throw std::invalid_argument("arm needs at least one joint");
        spec_.kind = DomainKind::ArmRepertoire;
        spec_.dimension = dimension;
        spec_.measure_lower = Eigen::Vector2d(-dimension, -dimension);
        spec_.measure_upper = Eigen::Vector2d(dimension, dimension);
        spec_.gradients_available = true;
        spec_.raw_best = 0.0;
        spec_.raw_worst = 1.0;
    }

    const DomainSpec& spec() const override { return spec_; }

    Evaluation evaluate(const Eigen::VectorXd& theta, bool with_gradients) const override {
        const Eigen::Index n = theta.size();
        if (n != spec_.dimension) throw std::invalid_argument("solution dimension mismatch");
        Evaluation eval;

        // Objective: population variance of the joint angles, remapped so
        // zero variance scores 100 and variance >= 1 scores 0.
        const double mean = theta.mean();
        const double variance = (theta.array() - mean).square().sum() / static_cast<double>(n);
        eval.raw_objective = variance;
        eval.objective = std::max(0.0, 100.0 * (1.0 - variance));
        if (with_gradients) {
            if (variance < 1.0) {
                eval.objective_gradient =
                    (-100.0 * 2.0 / static_cast<double>(n)) * (theta.array() - mean).matrix();
            } else {
                eval.objective_gradient = Eigen::VectorXd::Zero(n);
            }
        }

        // Forward kinematics of a planar arm with unit links.
        Eigen::VectorXd angles(n);
        double cumulative = 0.0;
        double x = 0.0, y = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            cumulative += theta[i];
            angles[i] = cumulative;
            x += std::cos(cumulative);
            y += std::sin(cumulative);
        }
        eval.measures = Eigen::Vector2d(x, y);
        if (with_gradients) {
            // Joint j moves every link at or beyond j: suffix sums of the
            // per-link derivatives.
            Eigen::MatrixXd jac(2, n);
            double sx = 0.0, sy = 0.0;
            for (Eigen::Index j = n - 1; j >= 0; --j) {
                sx += -std::sin(angles[j]);
                sy += std::cos(angles[j]);
                jac(0, j) = sx;
                jac(1, j) = sy;
            }
            eval.measure_jacobian = std::move(jac);
        }
        return eval;
    }

private:
    DomainSpec spec_;
};

}  // namespace

double arm_optimal_coverage(int cells_per_dim) {
    if (cells_per_dim < 1) throw std::invalid_argument("resolution must be positive");
    // Integer grid scaled so the disk radius is `res` and cells have width 2:
    // a cell is reachable when its nearest point lies strictly inside the
    // disk. Exact arithmetic keeps boundary-tangent cells out; those only
    // touch the circle at a single point.
    const long res = cells_per_dim;
    const long radius_sq = res * res;
    long reachable = 0;
    for (long i = 0; i < res; ++i) {
        const long x0 = 2 * i - res;
        const long x1 = x0 + 2;
        const long dx = (x0 > 0) ? x0 : (x1 < 0 ? -x1 : 0);
        for (long j = 0; j < res; ++j) {
            const long y0 = 2 * j - res;
            const long y1 = y0 + 2;
            const long dy = (y0 > 0) ? y0 : (y1 < 0 ? -y1 : 0);
            if (dx * dx + dy * dy < radius_sq) ++reachable;
        }
    }
    return static_cast<double>(reachable) / (static_cast<double>(res) * res);
}

std::unique_ptr<Domain> make_domain(DomainKind kind, int dimension, bool rastrigin_squared_cosine) {
    if (kind == DomainKind::ArmRepertoire)
        return std::make_unique<ArmRepertoireDomain>(dimension);
    return std::make_unique<LinearProjectionDomain>(kind, dimension, rastrigin_squared_cosine);
}

}  // namespace qdmae

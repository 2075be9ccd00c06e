#ifndef QDMAE_DOMAINS_HPP
#define QDMAE_DOMAINS_HPP

#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace qdmae {

enum class DomainKind { LpSphere, LpRastrigin, LpPlateau, ArmRepertoire };

std::string domain_name(DomainKind kind);
DomainKind domain_from_name(const std::string& name);

struct DomainSpec {
    DomainKind kind = DomainKind::LpSphere;
    int dimension = 0;
    Eigen::VectorXd measure_lower;  // per measure dimension
    Eigen::VectorXd measure_upper;
    double raw_best = 0.0;   // raw objective mapped to 100
    double raw_worst = 1.0;  // raw objective mapped to 0
    bool gradients_available = false;

    int measure_dims() const { return static_cast<int>(measure_lower.size()); }
};

struct Evaluation {
    double objective = 0.0;      // transformed, nominal [0, 100] scale
    double raw_objective = 0.0;  // untransformed (minimization form)
    Eigen::VectorXd measures;
    std::optional<Eigen::VectorXd> objective_gradient;  // of the transformed objective
    std::optional<Eigen::MatrixXd> measure_jacobian;    // k x n, row j is grad m_j
};

class Domain {
public:
    virtual ~Domain() = default;
    virtual const DomainSpec& spec() const = 0;
    virtual Evaluation evaluate(const Eigen::VectorXd& theta, bool with_gradients) const = 0;
};

/// Bounded projection component for the linear projection measures:
/// x for |x| <= 5.12, else 5.12 / x. The boundary takes the inside branch.
double lp_clip(double x);
double lp_clip_grad(double x);

/// Fraction of cells of a square grid over [-n, n]^2 that reach strictly
/// into the disk of radius n (the end-effector range of an n-link unit arm).
/// Cells tangent to the circle at a single point do not count. Scale-free:
/// depends only on the per-dimension cell count.
double arm_optimal_coverage(int cells_per_dim);

/// `rastrigin_squared_cosine` switches the Rastrigin cosine argument to the
/// squared form; the standard benchmark form is the default.
std::unique_ptr<Domain> make_domain(DomainKind kind, int dimension,
                                    bool rastrigin_squared_cosine = false);

}  // namespace qdmae

#endif

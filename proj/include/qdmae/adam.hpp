#ifndef QDMAE_ADAM_HPP
#define QDMAE_ADAM_HPP

#include <Eigen/Core>

namespace qdmae {

struct AdamParams {
    double learning_rate = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First-order ascent step with bias-corrected moment estimates.
class Adam {
public:
    Adam(Eigen::Index dimension, AdamParams params);

    /// Returns the parameter step for one gradient; mutates the moments.
    /// Throws on non-finite gradients.
    Eigen::VectorXd step(const Eigen::VectorXd& gradient);

    void reset();

    long step_count() const { return steps_; }
    const Eigen::VectorXd& first_moment() const { return m_; }
    const Eigen::VectorXd& second_moment() const { return v_; }

private:
    AdamParams params_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    long steps_ = 0;
};

}  // namespace qdmae

#endif

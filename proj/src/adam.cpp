#include "qdmae/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace qdmae {

Adam::Adam(Eigen::Index dimension, AdamParams params) : params_(params) {
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    m_ = Eigen::VectorXd::Zero(dimension);
    v_ = Eigen::VectorXd::Zero(dimension);
}

Eigen::VectorXd Adam::step(const Eigen::VectorXd& gradient) {
    if (gradient.size() != m_.size()) throw std::invalid_argument("gradient dimension mismatch");
    if (!gradient.allFinite()) throw std::invalid_argument("non-finite gradient");
    steps_ += 1;
    m_ = params_.beta1 * m_ + (1.0 - params_.beta1) * gradient;
    v_ = params_.beta2 * v_ + (1.0 - params_.beta2) * gradient.cwiseProduct(gradient);
    const double t = static_cast<double>(steps_);
    const Eigen::VectorXd m_hat = m_ / (1.0 - std::pow(params_.beta1, t));
    const Eigen::VectorXd v_hat = v_ / (1.0 - std::pow(params_.beta2, t));
    return (params_.learning_rate * (m_hat.array() / (v_hat.array().sqrt() + params_.epsilon)))
        .matrix();
}

void Adam::reset() {
    m_.setZero();
    v_.setZero();
    steps_ = 0;
}

}  // namespace qdmae

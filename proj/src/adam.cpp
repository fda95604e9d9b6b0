#include "polyglot/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace polyglot {

void AdamState::step(std::span<double> theta, std::span<const double> grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("adam: parameter '" + label_ + "' has size " +
                                std::to_string(m_.size()) + " but got theta " +
                                std::to_string(theta.size()) + ", grad " +
                                std::to_string(grad.size()));
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw std::runtime_error("adam: non-finite gradient for parameter '" + label_ +
                               "' at index " + std::to_string(i));
    }
  }
  t_ += 1;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    theta[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace polyglot

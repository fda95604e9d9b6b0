#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polyglot {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter Adam accumulators. Moments start at zero; the step counter
// increases by one per update.
class AdamState {
 public:
  AdamState(std::string label, std::size_t size, AdamConfig config = {})
      : label_(std::move(label)), config_(config), m_(size, 0.0), v_(size, 0.0) {}

  // In-place update of theta from grad. Rejects non-finite gradients with a
  // diagnostic naming the parameter.
  void step(std::span<double> theta, std::span<const double> grad);

  std::uint64_t steps() const { return t_; }
  const std::string& label() const { return label_; }
  const AdamConfig& config() const { return config_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  std::string label_;
  AdamConfig config_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

inline void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state) {
  state.step(theta, grad);
}

}  // namespace polyglot

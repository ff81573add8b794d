#pragma once

#include <cmath>
#include <map>
#include <string>

#include "textaug/autodiff.hpp"
#include "textaug/errors.hpp"

namespace textaug {

/// Adaptive moment estimation with global-norm gradient clipping.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }

  void set_lr(double lr) { config_.lr = lr; }

  /// One update over all tensors. Gradients are clipped jointly to
  /// config.clip_norm before the moment updates.
  void step(ParamMap& params, ParamMap grads) {
    double sq_norm = 0.0;
    for (const auto& [name, g] : grads) sq_norm += g.squaredNorm();
    const double norm = std::sqrt(sq_norm);
    if (config_.clip_norm > 0.0 && norm > config_.clip_norm) {
      const double scale = config_.clip_norm / norm;
      for (auto& [name, g] : grads) g *= scale;
    }

    ++t_;
    const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params) {
      auto git = grads.find(name);
      if (git == grads.end()) throw InputError("Adam: missing gradient for " + name);
      const Mat& g = git->second;
      auto& [m, v] = state_[name];
      if (m.size() == 0) {
        m = Mat::Zero(p.rows(), p.cols());
        v = Mat::Zero(p.rows(), p.cols());
      }
      m = config_.beta1 * m + (1.0 - config_.beta1) * g;
      v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
      const Mat m_hat = m / bias1;
      const Mat v_hat = v / bias2;
      p.array() -= config_.lr * m_hat.array() / (v_hat.array().sqrt() + config_.eps);
    }
  }

 private:
  AdamConfig config_;
  std::map<std::string, std::pair<Mat, Mat>> state_;
  long t_ = 0;
};

}  // namespace textaug

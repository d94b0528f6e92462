#include "esrm/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace esrm::nn {

void Sgd::step(std::vector<ParamRef>& params) {
  if (velocity_.empty()) {
    velocity_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      velocity_[i].assign(params[i].value->data.size(), 0.0f);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].value->data;
    auto& g = params[i].grad->data;
    auto& vel = velocity_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const float grad = g[j] + static_cast<float>(weight_decay_) * w[j];
      vel[j] = static_cast<float>(momentum_) * vel[j] + grad;
      w[j] -= static_cast<float>(lr_) * vel[j];
    }
  }
}

void AdamW::step(std::vector<ParamRef>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value->data.size(), 0.0f);
      v_[i].assign(params[i].value->data.size(), 0.0f);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].value->data;
    auto& g = params[i].grad->data;
    for (std::size_t j = 0; j < w.size(); ++j) {
      m_[i][j] = static_cast<float>(beta1_ * m_[i][j] + (1.0 - beta1_) * g[j]);
      v_[i][j] = static_cast<float>(beta2_ * v_[i][j] +
                                    (1.0 - beta2_) * static_cast<double>(g[j]) * g[j]);
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      w[j] -= static_cast<float>(lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * w[j]));
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& kind, double lr, double momentum,
                                          double weight_decay) {
  if (kind == "sgd") return std::make_unique<Sgd>(lr, momentum, weight_decay);
  if (kind == "adamw") return std::make_unique<AdamW>(lr, weight_decay);
  throw std::runtime_error("unknown optimizer: " + kind);
}

}  // namespace esrm::nn

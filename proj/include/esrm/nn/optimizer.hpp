#pragma once

#include <memory>
#include <string>
#include <vector>

#include "esrm/nn/layers.hpp"

namespace esrm::nn {

class Optimizer {
public:
  virtual ~Optimizer() = default;
  virtual void step(std::vector<ParamRef>& params) = 0;
};

class Sgd : public Optimizer {
public:
  Sgd(double lr, double momentum, double weight_decay)
      : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}
  void step(std::vector<ParamRef>& params) override;

private:
  double lr_, momentum_, weight_decay_;
  std::vector<std::vector<float>> velocity_;
};

class AdamW : public Optimizer {
public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8)
      : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(std::vector<ParamRef>& params) override;

private:
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& kind, double lr, double momentum,
                                          double weight_decay);

}  // namespace esrm::nn

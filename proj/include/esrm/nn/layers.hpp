#pragma once

#include <memory>
#include <string>
#include <vector>

#include "esrm/rng.hpp"
#include "esrm/tensor.hpp"

namespace esrm::nn {

struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

// Persistent non-trainable state (batch-norm running statistics).
struct StateRef {
  std::string name;
  Tensor* value;
};

// A layer owns its parameters and whatever activations its backward pass
// needs. One forward/backward pair may be in flight at a time; a new forward
// overwrites the previous cache. backward() accumulates into parameter
// gradients and returns the gradient w.r.t. its input.
class Layer {
public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void init(Rng&) {}
  virtual void collect_params(const std::string&, std::vector<ParamRef>&) {}
  virtual void collect_state(const std::string&, std::vector<StateRef>&) {}
};

class Conv2d : public Layer {
public:
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad, bool bias);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

private:
  int in_c_, out_c_, k_, stride_, pad_;
  bool use_bias_;
  Tensor w_, b_, gw_, gb_;
  Tensor x_;  // cached input
};

class BatchNorm2d : public Layer {
public:
  explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

private:
  void init_defaults();

  int c_;
  double momentum_, eps_;
  Tensor gamma_, beta_, ggamma_, gbeta_;
  Tensor running_mean_, running_var_;
  Tensor x_hat_;
  std::vector<float> inv_std_;
  bool last_train_ = false;
};

class ReLU : public Layer {
public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

private:
  std::vector<bool> mask_;
};

class MaxPool2d : public Layer {
public:
  explicit MaxPool2d(int kernel) : k_(kernel) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

private:
  int k_;
  std::vector<long> shape_;
  std::vector<long> argmax_;
};

// NCHW -> N x C spatial mean.
class GlobalAvgPool : public Layer {
public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

private:
  std::vector<long> shape_;
};

class Linear : public Layer {
public:
  Linear(int in_features, int out_features);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

private:
  int in_, out_;
  Tensor w_, b_, gw_, gb_;
  Tensor x_;
};

// Row-wise L2 normalization of an N x D matrix.
class L2Normalize : public Layer {
public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

private:
  Tensor y_;
  std::vector<float> norms_;
};

class Sequential : public Layer {
public:
  Sequential() = default;
  Sequential& add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Two 3x3 conv/bn pairs with identity or projected shortcut; relu after the
// residual add.
class BasicBlock : public Layer {
public:
  BasicBlock(int in_c, int out_c, int stride);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  ReLU relu1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  std::unique_ptr<Conv2d> short_conv_;
  std::unique_ptr<BatchNorm2d> short_bn_;
  std::vector<bool> out_mask_;  // relu after the add
};

}  // namespace esrm::nn

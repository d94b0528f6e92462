#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "esrm/nn/layers.hpp"

namespace esrm::nn {

enum class Backbone { resnet18, small_cnn };

Backbone backbone_from_string(const std::string& s);
const char* to_string(Backbone b);

// The learner: feature extractor (trunk), projection head mapping features
// to unit-norm 128-dim embeddings, and a linear classifier. The trunk is
// shared between the heads, so training code drives the three pieces
// separately: forward the trunk once, forward each head, then feed the sum
// of the heads' input gradients back through the trunk.
class LearnerModel {
public:
  static constexpr int kProjectionDim = 128;

  LearnerModel(Backbone backbone, int class_count, int input_channels, std::uint64_t init_seed);

  int class_count() const { return class_count_; }
  int feature_dim() const { return feature_dim_; }
  Backbone backbone() const { return backbone_; }

  // --- granular passes for the training loop ---
  Tensor trunk_forward(const Tensor& images, bool train);
  Tensor classifier_forward(const Tensor& features, bool train);
  Tensor projector_forward(const Tensor& features, bool train);  // normalized rows
  Tensor classifier_backward(const Tensor& dlogits);             // returns dfeatures
  Tensor projector_backward(const Tensor& dz);                   // returns dfeatures
  void trunk_backward(const Tensor& dfeatures);

  // --- whole-model conveniences ---
  // Raw logits, N x C.
  Tensor classify(const Tensor& images, bool train = false);
  // Unit-norm projections, N x 128.
  Tensor embed(const Tensor& images, bool train = false);

  std::vector<ParamRef>& params() { return params_; }
  void zero_grad();

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

private:
  Backbone backbone_;
  int class_count_;
  int feature_dim_;
  std::unique_ptr<Layer> trunk_;
  std::unique_ptr<Layer> projector_;
  L2Normalize normalize_;
  std::unique_ptr<Layer> classifier_;
  std::vector<ParamRef> params_;
  std::vector<StateRef> state_;
};

// Softmax entropy per row, natural log, stable log-sum-exp path. Values lie
// in [0, ln C]. Throws on non-finite logits or C < 2.
Eigen::VectorXd entropy(const Eigen::MatrixXd& logits);

// Tensor <-> Eigen bridges for the double-precision objective functions.
Eigen::MatrixXd to_eigen(const Tensor& t);
Tensor from_eigen(const Eigen::MatrixXd& m);

}  // namespace esrm::nn

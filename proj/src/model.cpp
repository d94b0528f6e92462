#include "esrm/nn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace esrm::nn {

namespace {

constexpr char kCheckpointMagic[8] = {'E', 'S', 'R', 'M', 'C', 'K', 'P', '1'};

std::unique_ptr<Layer> make_resnet18_trunk(int input_channels) {
  // Small-image variant: 3x3 stem, no initial downsampling.
  auto seq = std::make_unique<Sequential>();
  seq->add(std::make_unique<Conv2d>(input_channels, 64, 3, 1, 1, false));
  seq->add(std::make_unique<BatchNorm2d>(64));
  seq->add(std::make_unique<ReLU>());
  seq->add(std::make_unique<BasicBlock>(64, 64, 1));
  seq->add(std::make_unique<BasicBlock>(64, 64, 1));
  seq->add(std::make_unique<BasicBlock>(64, 128, 2));
  seq->add(std::make_unique<BasicBlock>(128, 128, 1));
  seq->add(std::make_unique<BasicBlock>(128, 256, 2));
  seq->add(std::make_unique<BasicBlock>(256, 256, 1));
  seq->add(std::make_unique<BasicBlock>(256, 512, 2));
  seq->add(std::make_unique<BasicBlock>(512, 512, 1));
  seq->add(std::make_unique<GlobalAvgPool>());
  return seq;
}

std::unique_ptr<Layer> make_small_cnn_trunk(int input_channels) {
  auto seq = std::make_unique<Sequential>();
  seq->add(std::make_unique<Conv2d>(input_channels, 16, 3, 1, 1, false));
  seq->add(std::make_unique<BatchNorm2d>(16));
  seq->add(std::make_unique<ReLU>());
  seq->add(std::make_unique<MaxPool2d>(2));
  seq->add(std::make_unique<Conv2d>(16, 32, 3, 1, 1, false));
  seq->add(std::make_unique<BatchNorm2d>(32));
  seq->add(std::make_unique<ReLU>());
  seq->add(std::make_unique<MaxPool2d>(2));
  seq->add(std::make_unique<Conv2d>(32, 64, 3, 1, 1, false));
  seq->add(std::make_unique<BatchNorm2d>(64));
  seq->add(std::make_unique<ReLU>());
  seq->add(std::make_unique<GlobalAvgPool>());
  return seq;
}

std::unique_ptr<Layer> make_projector(int feature_dim, int proj_dim) {
  auto seq = std::make_unique<Sequential>();
  seq->add(std::make_unique<Linear>(feature_dim, feature_dim));
  seq->add(std::make_unique<ReLU>());
  seq->add(std::make_unique<Linear>(feature_dim, proj_dim));
  return seq;
}

}  // namespace

Backbone backbone_from_string(const std::string& s) {
  if (s == "resnet18") return Backbone::resnet18;
  if (s == "small_cnn") return Backbone::small_cnn;
  throw std::runtime_error("unknown backbone: " + s);
}

const char* to_string(Backbone b) {
  return b == Backbone::resnet18 ? "resnet18" : "small_cnn";
}

LearnerModel::LearnerModel(Backbone backbone, int class_count, int input_channels,
                           std::uint64_t init_seed)
    : backbone_(backbone), class_count_(class_count) {
  if (class_count < 2) throw std::invalid_argument("class count must be >= 2");
  feature_dim_ = backbone == Backbone::resnet18 ? 512 : 64;
  trunk_ = backbone == Backbone::resnet18 ? make_resnet18_trunk(input_channels)
                                          : make_small_cnn_trunk(input_channels);
  projector_ = make_projector(feature_dim_, kProjectionDim);
  classifier_ = std::make_unique<Linear>(feature_dim_, class_count);

  Rng rng(derive_seed(init_seed, static_cast<std::uint64_t>(SeedStream::model_init)));
  trunk_->init(rng);
  projector_->init(rng);
  classifier_->init(rng);

  trunk_->collect_params("trunk", params_);
  projector_->collect_params("projector", params_);
  classifier_->collect_params("classifier", params_);
  trunk_->collect_state("trunk", state_);
  projector_->collect_state("projector", state_);
  classifier_->collect_state("classifier", state_);
}

Tensor LearnerModel::trunk_forward(const Tensor& images, bool train) {
  return trunk_->forward(images, train);
}

Tensor LearnerModel::classifier_forward(const Tensor& features, bool train) {
  return classifier_->forward(features, train);
}

Tensor LearnerModel::projector_forward(const Tensor& features, bool train) {
  return normalize_.forward(projector_->forward(features, train), train);
}

Tensor LearnerModel::classifier_backward(const Tensor& dlogits) {
  return classifier_->backward(dlogits);
}

Tensor LearnerModel::projector_backward(const Tensor& dz) {
  return projector_->backward(normalize_.backward(dz));
}

void LearnerModel::trunk_backward(const Tensor& dfeatures) { trunk_->backward(dfeatures); }

Tensor LearnerModel::classify(const Tensor& images, bool train) {
  return classifier_forward(trunk_forward(images, train), train);
}

Tensor LearnerModel::embed(const Tensor& images, bool train) {
  return projector_forward(trunk_forward(images, train), train);
}

void LearnerModel::zero_grad() {
  for (ParamRef& p : params_) p.grad->zero();
}

void LearnerModel::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));

  const std::string arch = to_string(backbone_);
  auto write_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  write_u32(static_cast<std::uint32_t>(arch.size()));
  out.write(arch.data(), static_cast<std::streamsize>(arch.size()));
  write_u32(static_cast<std::uint32_t>(class_count_));
  write_u32(static_cast<std::uint32_t>(state_.size()));
  for (const StateRef& s : state_) {
    write_u32(static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    write_u32(static_cast<std::uint32_t>(s.value->data.size()));
    out.write(reinterpret_cast<const char*>(s.value->data.data()),
              static_cast<std::streamsize>(s.value->data.size() * sizeof(float)));
  }
}

void LearnerModel::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file (or unsupported version): " + path);

  auto read_u32 = [&]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  std::string arch(read_u32(), '\0');
  in.read(arch.data(), static_cast<std::streamsize>(arch.size()));
  if (arch != to_string(backbone_))
    throw std::runtime_error("checkpoint backbone " + arch + " does not match model");
  const std::uint32_t classes = read_u32();
  if (static_cast<int>(classes) != class_count_)
    throw std::runtime_error("checkpoint class count mismatch");

  const std::uint32_t entries = read_u32();
  if (entries != state_.size()) throw std::runtime_error("checkpoint entry count mismatch");
  for (StateRef& s : state_) {
    std::string name(read_u32(), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    if (name != s.name) throw std::runtime_error("checkpoint entry order mismatch at " + name);
    const std::uint32_t count = read_u32();
    if (count != s.value->data.size())
      throw std::runtime_error("checkpoint tensor size mismatch at " + name);
    in.read(reinterpret_cast<char*>(s.value->data.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
}

Eigen::VectorXd entropy(const Eigen::MatrixXd& logits) {
  if (logits.cols() < 2) throw std::invalid_argument("entropy needs at least 2 classes");
  if (!logits.allFinite()) throw std::invalid_argument("entropy: non-finite logits");

  Eigen::VectorXd h(logits.rows());
  for (long i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    // H = lse - sum_c p_c * l_c with p_c = exp(l_c - lse)
    const Eigen::ArrayXd p = (logits.row(i).array() - lse).exp();
    h(i) = lse - (p * logits.row(i).array().transpose()).sum();
    if (h(i) < 0.0) h(i) = 0.0;  // guard tiny negative round-off
  }
  return h;
}

Eigen::MatrixXd to_eigen(const Tensor& t) {
  if (t.shape.size() != 2) throw std::invalid_argument("to_eigen expects a rank-2 tensor");
  Eigen::MatrixXd m(t.dim(0), t.dim(1));
  for (long i = 0; i < t.dim(0); ++i)
    for (long j = 0; j < t.dim(1); ++j) m(i, j) = t.data[static_cast<std::size_t>(i * t.dim(1) + j)];
  return m;
}

Tensor from_eigen(const Eigen::MatrixXd& m) {
  Tensor t({m.rows(), m.cols()});
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j)
      t.data[static_cast<std::size_t>(i * m.cols() + j)] = static_cast<float>(m(i, j));
  return t;
}

}  // namespace esrm::nn

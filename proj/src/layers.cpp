#include "esrm/nn/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esrm::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

long conv_out_extent(long in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Unpacks one image (C x H x W) into a (C*k*k) x (OH*OW) patch matrix.
void im2col(const float* img, long c, long h, long w, int k, int stride, int pad, long oh,
            long ow, float* col) {
  for (long ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* dst = col + ((ch * k + ky) * k + kx) * oh * ow;
        for (long oy = 0; oy < oh; ++oy) {
          const long sy = oy * stride + ky - pad;
          if (sy < 0 || sy >= h) {
            for (long ox = 0; ox < ow; ++ox) *dst++ = 0.0f;
            continue;
          }
          const float* src_row = img + (ch * h + sy) * w;
          for (long ox = 0; ox < ow; ++ox) {
            const long sx = ox * stride + kx - pad;
            *dst++ = (sx < 0 || sx >= w) ? 0.0f : src_row[sx];
          }
        }
      }
    }
  }
}

// Adds the patch-matrix gradient back into an image gradient.
void col2im(const float* col, long c, long h, long w, int k, int stride, int pad, long oh,
            long ow, float* img_grad) {
  for (long ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* src = col + ((ch * k + ky) * k + kx) * oh * ow;
        for (long oy = 0; oy < oh; ++oy) {
          const long sy = oy * stride + ky - pad;
          if (sy < 0 || sy >= h) {
            src += ow;
            continue;
          }
          float* dst_row = img_grad + (ch * h + sy) * w;
          for (long ox = 0; ox < ow; ++ox) {
            const long sx = ox * stride + kx - pad;
            if (sx >= 0 && sx < w) dst_row[sx] += src[ox];
          }
          src += ow;
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, int pad, bool bias)
    : in_c_(in_c),
      out_c_(out_c),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      use_bias_(bias),
      w_({out_c, in_c, kernel, kernel}),
      gw_({out_c, in_c, kernel, kernel}) {
  if (use_bias_) {
    b_ = Tensor({out_c});
    gb_ = Tensor({out_c});
  }
}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(in_c_) * k_ * k_;
  const double std = std::sqrt(2.0 / fan_in);
  for (float& v : w_.data) v = static_cast<float>(rng.normal(0.0, std));
  if (use_bias_) b_.zero();
}

Tensor Conv2d::forward(const Tensor& x, bool) {
  if (x.shape.size() != 4 || x.dim(1) != in_c_)
    throw std::invalid_argument("Conv2d: bad input shape " + x.shape_str());
  x_ = x;
  const long n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const long oh = conv_out_extent(h, k_, stride_, pad_);
  const long ow = conv_out_extent(w, k_, stride_, pad_);
  const long patch = static_cast<long>(in_c_) * k_ * k_;

  Tensor y({n, out_c_, oh, ow});
  std::vector<float> col(static_cast<std::size_t>(patch) * oh * ow);
  ConstMapMat wm(w_.ptr(), out_c_, patch);
  for (long i = 0; i < n; ++i) {
    im2col(x.ptr() + i * in_c_ * h * w, in_c_, h, w, k_, stride_, pad_, oh, ow, col.data());
    ConstMapMat cm(col.data(), patch, oh * ow);
    MapMat ym(y.ptr() + i * out_c_ * oh * ow, out_c_, oh * ow);
    ym.noalias() = wm * cm;
    if (use_bias_)
      for (int oc = 0; oc < out_c_; ++oc) ym.row(oc).array() += b_.data[static_cast<std::size_t>(oc)];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const long n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
  const long oh = grad_out.dim(2), ow = grad_out.dim(3);
  const long patch = static_cast<long>(in_c_) * k_ * k_;

  Tensor dx(x_.shape);
  std::vector<float> col(static_cast<std::size_t>(patch) * oh * ow);
  std::vector<float> dcol(static_cast<std::size_t>(patch) * oh * ow);
  ConstMapMat wm(w_.ptr(), out_c_, patch);
  MapMat gwm(gw_.ptr(), out_c_, patch);

  for (long i = 0; i < n; ++i) {
    ConstMapMat gym(grad_out.ptr() + i * out_c_ * oh * ow, out_c_, oh * ow);
    im2col(x_.ptr() + i * in_c_ * h * w, in_c_, h, w, k_, stride_, pad_, oh, ow, col.data());
    ConstMapMat cm(col.data(), patch, oh * ow);
    gwm.noalias() += gym * cm.transpose();
    MapMat dcm(dcol.data(), patch, oh * ow);
    dcm.noalias() = wm.transpose() * gym;
    col2im(dcol.data(), in_c_, h, w, k_, stride_, pad_, oh, ow, dx.ptr() + i * in_c_ * h * w);
    if (use_bias_)
      for (int oc = 0; oc < out_c_; ++oc)
        gb_.data[static_cast<std::size_t>(oc)] += gym.row(oc).sum();
  }
  return dx;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &w_, &gw_});
  if (use_bias_) out.push_back({prefix + ".bias", &b_, &gb_});
}

void Conv2d::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  out.push_back({prefix + ".weight", &w_});
  if (use_bias_) out.push_back({prefix + ".bias", &b_});
}

// ------------------------------------------------------------ BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : c_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_({channels}),
      beta_({channels}),
      ggamma_({channels}),
      gbeta_({channels}),
      running_mean_({channels}),
      running_var_({channels}) {
  init_defaults();
}

void BatchNorm2d::init_defaults() {
  std::fill(gamma_.data.begin(), gamma_.data.end(), 1.0f);
  beta_.zero();
  running_mean_.zero();
  std::fill(running_var_.data.begin(), running_var_.data.end(), 1.0f);
}

void BatchNorm2d::init(Rng&) { init_defaults(); }

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 4 || x.dim(1) != c_)
    throw std::invalid_argument("BatchNorm2d: bad input shape " + x.shape_str());
  const long n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const long per_c = n * h * w;
  last_train_ = train;

  Tensor y(x.shape);
  x_hat_ = Tensor(x.shape);
  inv_std_.assign(static_cast<std::size_t>(c_), 0.0f);

  for (int ch = 0; ch < c_; ++ch) {
    double mean, var;
    if (train) {
      double sum = 0.0, sum2 = 0.0;
      for (long i = 0; i < n; ++i) {
        const float* p = x.ptr() + (i * c_ + ch) * h * w;
        for (long j = 0; j < h * w; ++j) {
          sum += p[j];
          sum2 += static_cast<double>(p[j]) * p[j];
        }
      }
      mean = sum / static_cast<double>(per_c);
      var = sum2 / static_cast<double>(per_c) - mean * mean;
      if (var < 0.0) var = 0.0;
      const double unbiased = per_c > 1 ? var * per_c / static_cast<double>(per_c - 1) : var;
      auto& rm = running_mean_.data[static_cast<std::size_t>(ch)];
      auto& rv = running_var_.data[static_cast<std::size_t>(ch)];
      rm = static_cast<float>((1.0 - momentum_) * rm + momentum_ * mean);
      rv = static_cast<float>((1.0 - momentum_) * rv + momentum_ * unbiased);
    } else {
      mean = running_mean_.data[static_cast<std::size_t>(ch)];
      var = running_var_.data[static_cast<std::size_t>(ch)];
    }
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
    inv_std_[static_cast<std::size_t>(ch)] = inv;
    const float g = gamma_.data[static_cast<std::size_t>(ch)];
    const float b = beta_.data[static_cast<std::size_t>(ch)];
    const float m = static_cast<float>(mean);
    for (long i = 0; i < n; ++i) {
      const float* p = x.ptr() + (i * c_ + ch) * h * w;
      float* xh = x_hat_.ptr() + (i * c_ + ch) * h * w;
      float* yo = y.ptr() + (i * c_ + ch) * h * w;
      for (long j = 0; j < h * w; ++j) {
        xh[j] = (p[j] - m) * inv;
        yo[j] = g * xh[j] + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  const long n = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
  const long per_c = n * h * w;
  Tensor dx(grad_out.shape);

  for (int ch = 0; ch < c_; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (long i = 0; i < n; ++i) {
      const float* dy = grad_out.ptr() + (i * c_ + ch) * h * w;
      const float* xh = x_hat_.ptr() + (i * c_ + ch) * h * w;
      for (long j = 0; j < h * w; ++j) {
        sum_dy += dy[j];
        sum_dy_xhat += static_cast<double>(dy[j]) * xh[j];
      }
    }
    ggamma_.data[static_cast<std::size_t>(ch)] += static_cast<float>(sum_dy_xhat);
    gbeta_.data[static_cast<std::size_t>(ch)] += static_cast<float>(sum_dy);

    const float g = gamma_.data[static_cast<std::size_t>(ch)];
    const float inv = inv_std_[static_cast<std::size_t>(ch)];
    const float mean_dy = static_cast<float>(sum_dy / static_cast<double>(per_c));
    const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / static_cast<double>(per_c));
    for (long i = 0; i < n; ++i) {
      const float* dy = grad_out.ptr() + (i * c_ + ch) * h * w;
      const float* xh = x_hat_.ptr() + (i * c_ + ch) * h * w;
      float* dxo = dx.ptr() + (i * c_ + ch) * h * w;
      if (last_train_) {
        for (long j = 0; j < h * w; ++j)
          dxo[j] = g * inv * (dy[j] - mean_dy - xh[j] * mean_dy_xhat);
      } else {
        // running statistics are constants
        for (long j = 0; j < h * w; ++j) dxo[j] = g * inv * dy[j];
      }
    }
  }
  return dx;
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma_, &ggamma_});
  out.push_back({prefix + ".beta", &beta_, &gbeta_});
}

void BatchNorm2d::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  out.push_back({prefix + ".gamma", &gamma_});
  out.push_back({prefix + ".beta", &beta_});
  out.push_back({prefix + ".running_mean", &running_mean_});
  out.push_back({prefix + ".running_var", &running_var_});
}

// ------------------------------------------------------------------ ReLU

Tensor ReLU::forward(const Tensor& x, bool) {
  Tensor y = x;
  mask_.assign(x.data.size(), false);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    if (y.data[i] > 0.0f)
      mask_[i] = true;
    else
      y.data[i] = 0.0f;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    if (!mask_[i]) dx.data[i] = 0.0f;
  return dx;
}

// ------------------------------------------------------------- MaxPool2d

Tensor MaxPool2d::forward(const Tensor& x, bool) {
  const long n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % k_ != 0 || w % k_ != 0)
    throw std::invalid_argument("MaxPool2d: extent not divisible by kernel");
  const long oh = h / k_, ow = w / k_;
  shape_ = x.shape;
  Tensor y({n, c, oh, ow});
  argmax_.assign(static_cast<std::size_t>(y.size()), 0);

  long oi = 0;
  for (long i = 0; i < n * c; ++i) {
    const float* plane = x.ptr() + i * h * w;
    for (long oy = 0; oy < oh; ++oy)
      for (long ox = 0; ox < ow; ++ox, ++oi) {
        float best = plane[(oy * k_) * w + ox * k_];
        long best_idx = (oy * k_) * w + ox * k_;
        for (int ky = 0; ky < k_; ++ky)
          for (int kx = 0; kx < k_; ++kx) {
            const long idx = (oy * k_ + ky) * w + (ox * k_ + kx);
            if (plane[idx] > best) {
              best = plane[idx];
              best_idx = idx;
            }
          }
        y.data[static_cast<std::size_t>(oi)] = best;
        argmax_[static_cast<std::size_t>(oi)] = i * h * w + best_idx;
      }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  Tensor dx(shape_);
  for (std::size_t i = 0; i < grad_out.data.size(); ++i)
    dx.data[static_cast<std::size_t>(argmax_[i])] += grad_out.data[i];
  return dx;
}

// --------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, bool) {
  const long n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  shape_ = x.shape;
  Tensor y({n, c});
  for (long i = 0; i < n * c; ++i) {
    const float* plane = x.ptr() + i * h * w;
    double sum = 0.0;
    for (long j = 0; j < h * w; ++j) sum += plane[j];
    y.data[static_cast<std::size_t>(i)] = static_cast<float>(sum / static_cast<double>(h * w));
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  const long h = shape_[2], w = shape_[3];
  Tensor dx(shape_);
  for (long i = 0; i < grad_out.size(); ++i) {
    const float g = grad_out.data[static_cast<std::size_t>(i)] / static_cast<float>(h * w);
    float* plane = dx.ptr() + i * h * w;
    for (long j = 0; j < h * w; ++j) plane[j] = g;
  }
  return dx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features)
    : in_(in_features),
      out_(out_features),
      w_({out_features, in_features}),
      b_({out_features}),
      gw_({out_features, in_features}),
      gb_({out_features}) {}

void Linear::init(Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(in_));
  for (float& v : w_.data) v = static_cast<float>(rng.normal(0.0, std));
  b_.zero();
}

Tensor Linear::forward(const Tensor& x, bool) {
  if (x.shape.size() != 2 || x.dim(1) != in_)
    throw std::invalid_argument("Linear: bad input shape " + x.shape_str());
  x_ = x;
  const long n = x.dim(0);
  Tensor y({n, out_});
  ConstMapMat xm(x.ptr(), n, in_);
  ConstMapMat wm(w_.ptr(), out_, in_);
  MapMat ym(y.ptr(), n, out_);
  ym.noalias() = xm * wm.transpose();
  for (long i = 0; i < n; ++i)
    for (int o = 0; o < out_; ++o) ym(i, o) += b_.data[static_cast<std::size_t>(o)];
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const long n = x_.dim(0);
  ConstMapMat gym(grad_out.ptr(), n, out_);
  ConstMapMat xm(x_.ptr(), n, in_);
  ConstMapMat wm(w_.ptr(), out_, in_);
  MapMat gwm(gw_.ptr(), out_, in_);
  gwm.noalias() += gym.transpose() * xm;
  for (int o = 0; o < out_; ++o) gb_.data[static_cast<std::size_t>(o)] += gym.col(o).sum();

  Tensor dx({n, in_});
  MapMat dxm(dx.ptr(), n, in_);
  dxm.noalias() = gym * wm;
  return dx;
}

void Linear::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &w_, &gw_});
  out.push_back({prefix + ".bias", &b_, &gb_});
}

void Linear::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  out.push_back({prefix + ".weight", &w_});
  out.push_back({prefix + ".bias", &b_});
}

// ----------------------------------------------------------- L2Normalize

Tensor L2Normalize::forward(const Tensor& x, bool) {
  const long n = x.dim(0), d = x.dim(1);
  y_ = Tensor(x.shape);
  norms_.assign(static_cast<std::size_t>(n), 0.0f);
  for (long i = 0; i < n; ++i) {
    const float* xi = x.ptr() + i * d;
    double sq = 0.0;
    for (long j = 0; j < d; ++j) sq += static_cast<double>(xi[j]) * xi[j];
    const float norm = static_cast<float>(std::sqrt(sq) + 1e-12);
    norms_[static_cast<std::size_t>(i)] = norm;
    float* yi = y_.ptr() + i * d;
    for (long j = 0; j < d; ++j) yi[j] = xi[j] / norm;
  }
  return y_;
}

Tensor L2Normalize::backward(const Tensor& grad_out) {
  const long n = grad_out.dim(0), d = grad_out.dim(1);
  Tensor dx(grad_out.shape);
  for (long i = 0; i < n; ++i) {
    const float* dy = grad_out.ptr() + i * d;
    const float* yi = y_.ptr() + i * d;
    double dot = 0.0;
    for (long j = 0; j < d; ++j) dot += static_cast<double>(dy[j]) * yi[j];
    float* dxi = dx.ptr() + i * d;
    for (long j = 0; j < d; ++j)
      dxi[j] = (dy[j] - yi[j] * static_cast<float>(dot)) / norms_[static_cast<std::size_t>(i)];
  }
  return dx;
}

// ------------------------------------------------------------ Sequential

Tensor Sequential::forward(const Tensor& x, bool train) {
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur, train);
  return cur;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor cur = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

void Sequential::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

void Sequential::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_params(prefix + "." + std::to_string(i), out);
}

void Sequential::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_state(prefix + "." + std::to_string(i), out);
}

// ------------------------------------------------------------ BasicBlock

BasicBlock::BasicBlock(int in_c, int out_c, int stride)
    : conv1_(in_c, out_c, 3, stride, 1, false),
      bn1_(out_c),
      conv2_(out_c, out_c, 3, 1, 1, false),
      bn2_(out_c) {
  if (stride != 1 || in_c != out_c) {
    short_conv_ = std::make_unique<Conv2d>(in_c, out_c, 1, stride, 0, false);
    short_bn_ = std::make_unique<BatchNorm2d>(out_c);
  }
}

Tensor BasicBlock::forward(const Tensor& x, bool train) {
  Tensor main = bn1_.forward(conv1_.forward(x, train), train);
  main = relu1_.forward(main, train);
  main = bn2_.forward(conv2_.forward(main, train), train);

  Tensor shortcut = short_conv_ ? short_bn_->forward(short_conv_->forward(x, train), train) : x;
  main += shortcut;

  out_mask_.assign(main.data.size(), false);
  for (std::size_t i = 0; i < main.data.size(); ++i) {
    if (main.data[i] > 0.0f)
      out_mask_[i] = true;
    else
      main.data[i] = 0.0f;
  }
  return main;
}

Tensor BasicBlock::backward(const Tensor& grad_out) {
  Tensor dsum = grad_out;
  for (std::size_t i = 0; i < dsum.data.size(); ++i)
    if (!out_mask_[i]) dsum.data[i] = 0.0f;

  Tensor dmain = conv2_.backward(bn2_.backward(dsum));
  dmain = relu1_.backward(dmain);
  Tensor dx = conv1_.backward(bn1_.backward(dmain));

  if (short_conv_)
    dx += short_conv_->backward(short_bn_->backward(dsum));
  else
    dx += dsum;
  return dx;
}

void BasicBlock::init(Rng& rng) {
  conv1_.init(rng);
  bn1_.init(rng);
  conv2_.init(rng);
  bn2_.init(rng);
  if (short_conv_) {
    short_conv_->init(rng);
    short_bn_->init(rng);
  }
}

void BasicBlock::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  conv1_.collect_params(prefix + ".conv1", out);
  bn1_.collect_params(prefix + ".bn1", out);
  conv2_.collect_params(prefix + ".conv2", out);
  bn2_.collect_params(prefix + ".bn2", out);
  if (short_conv_) {
    short_conv_->collect_params(prefix + ".short_conv", out);
    short_bn_->collect_params(prefix + ".short_bn", out);
  }
}

void BasicBlock::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  conv1_.collect_state(prefix + ".conv1", out);
  bn1_.collect_state(prefix + ".bn1", out);
  conv2_.collect_state(prefix + ".conv2", out);
  bn2_.collect_state(prefix + ".bn2", out);
  if (short_conv_) {
    short_conv_->collect_state(prefix + ".short_conv", out);
    short_bn_->collect_state(prefix + ".short_bn", out);
  }
}

}  // namespace esrm::nn

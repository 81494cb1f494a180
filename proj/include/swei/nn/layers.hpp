#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace swei::nn {

/// NCHW extent of an activation batch.
struct Shape4 {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const noexcept { return n * c * h * w; }
  std::size_t plane() const noexcept { return h * w; }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Square convolution, stride 1, zero padding `pad`. Weights are laid out
/// [out_c][in_c][kernel][kernel].
struct ConvSpec {
  std::size_t out_c = 1;
  std::size_t kernel = 3;
  std::size_t pad = 1;

  Shape4 output_shape(const Shape4& in) const noexcept {
    return {in.n, out_c, in.h + 2 * pad - kernel + 1, in.w + 2 * pad - kernel + 1};
  }
};

// Every backward routine *accumulates* into parameter gradients and
// *overwrites* the input gradient. `scratch` is reusable working memory.

template <typename T>
void conv2d_forward(std::span<const T> in, const Shape4& in_shape, std::span<const T> weight,
                    std::span<const T> bias, const ConvSpec& spec, std::span<T> out,
                    std::vector<T>& scratch);

/// grad_in may be empty when the input gradient is not needed.
template <typename T>
void conv2d_backward(std::span<const T> in, const Shape4& in_shape, std::span<const T> weight,
                     const ConvSpec& spec, std::span<const T> grad_out, std::span<T> grad_in,
                     std::span<T> grad_weight, std::span<T> grad_bias, std::vector<T>& scratch);

template <typename T>
void leaky_relu_forward(std::span<const T> in, T slope, std::span<T> out);

template <typename T>
void leaky_relu_backward(std::span<const T> in, T slope, std::span<const T> grad_out,
                         std::span<T> grad_in);

/// Non-overlapping average pooling; h and w must be multiples of the kernel.
template <typename T>
void avg_pool_forward(std::span<const T> in, const Shape4& in_shape, std::size_t kh,
                      std::size_t kw, std::span<T> out);

template <typename T>
void avg_pool_backward(const Shape4& in_shape, std::size_t kh, std::size_t kw,
                       std::span<const T> grad_out, std::span<T> grad_in);

/// out[n][o] = sum_f weight[o][f] in[n][f] + bias[o].
template <typename T>
void linear_forward(std::span<const T> in, std::size_t batch, std::size_t in_features,
                    std::span<const T> weight, std::span<const T> bias, std::size_t out_features,
                    std::span<T> out);

template <typename T>
void linear_backward(std::span<const T> in, std::size_t batch, std::size_t in_features,
                     std::span<const T> weight, std::size_t out_features,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias);

/// Hard clamp; the gradient passes unchanged inside [lo, hi] and is zero outside.
template <typename T>
T clamp_forward(T x, T lo, T hi) noexcept;

template <typename T>
T clamp_backward(T x, T lo, T hi, T grad_out) noexcept;

/// Log-normal loss L = (log_y - mu)^2 exp(-s) + s and its partials.
template <typename T>
struct LossGrad {
  T loss;
  T d_mu;
  T d_s;
};

template <typename T>
LossGrad<T> lognormal_loss_grad(T mu, T s, T log_y) noexcept;

}  // namespace swei::nn

#include "swei/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <type_traits>

#include "conv3x3.hpp"

namespace swei::nn {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// col[(ci*k + ky)*k + kx][y*w_out + x] = in[ci][y + ky - pad][x + kx - pad] (0 outside).
template <typename T>
void im2col(const T* in, const Shape4& s, const ConvSpec& spec, std::size_t h_out,
            std::size_t w_out, T* col) {
  const std::size_t k = spec.kernel;
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  const auto h = static_cast<std::ptrdiff_t>(s.h);
  const auto w = static_cast<std::ptrdiff_t>(s.w);
  for (std::size_t ci = 0; ci < s.c; ++ci) {
    const T* plane = in + ci * s.plane();
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = col + ((ci * k + ky) * k + kx) * h_out * w_out;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        // valid output columns: 0 <= x + dx < w
        const auto x_lo = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(-dx, 0, static_cast<std::ptrdiff_t>(w_out)));
        const auto x_hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(w - dx, 0, static_cast<std::ptrdiff_t>(w_out)));
        for (std::size_t y = 0; y < h_out; ++y) {
          T* dst = row + y * w_out;
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
          if (sy < 0 || sy >= h) {
            std::fill(dst, dst + w_out, T(0));
            continue;
          }
          std::fill(dst, dst + x_lo, T(0));
          const T* src = plane + sy * w;
          for (std::size_t x = x_lo; x < x_hi; ++x) dst[x] = src[static_cast<std::ptrdiff_t>(x) + dx];
          std::fill(dst + x_hi, dst + w_out, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const Shape4& s, const ConvSpec& spec, std::size_t h_out,
            std::size_t w_out, T* out) {
  const std::size_t k = spec.kernel;
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  const auto h = static_cast<std::ptrdiff_t>(s.h);
  const auto w = static_cast<std::ptrdiff_t>(s.w);
  std::fill(out, out + s.c * s.plane(), T(0));
  for (std::size_t ci = 0; ci < s.c; ++ci) {
    T* plane = out + ci * s.plane();
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = col + ((ci * k + ky) * k + kx) * h_out * w_out;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const auto x_lo = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(-dx, 0, static_cast<std::ptrdiff_t>(w_out)));
        const auto x_hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(w - dx, 0, static_cast<std::ptrdiff_t>(w_out)));
        for (std::size_t y = 0; y < h_out; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
          if (sy < 0 || sy >= h) continue;
          const T* src = row + y * w_out;
          T* dst = plane + sy * w;
          for (std::size_t x = x_lo; x < x_hi; ++x) dst[static_cast<std::ptrdiff_t>(x) + dx] += src[x];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(std::span<const T> in, const Shape4& in_shape, std::span<const T> weight,
                    std::span<const T> bias, const ConvSpec& spec, std::span<T> out,
                    std::vector<T>& scratch) {
  const Shape4 os = spec.output_shape(in_shape);
  if constexpr (std::is_same_v<T, float>) {
    if (spec.kernel == 3 && spec.pad == 1) {
      bool done = true;
      for (std::size_t n = 0; n < in_shape.n && done; ++n) {
        done = detail::conv3x3_forward(in.data() + n * in_shape.c * in_shape.plane(), in_shape.c,
                                       in_shape.h, in_shape.w, weight.data(), bias.data(),
                                       spec.out_c, out.data() + n * os.c * os.plane(), scratch);
      }
      if (done) return;
    }
  }
  const std::size_t kdim = in_shape.c * spec.kernel * spec.kernel;
  const std::size_t cols = os.plane();
  scratch.resize(kdim * cols);
  Eigen::Map<const MatR<T>> w(weight.data(), static_cast<Eigen::Index>(spec.out_c),
                              static_cast<Eigen::Index>(kdim));
  Eigen::Map<const Vec<T>> b(bias.data(), static_cast<Eigen::Index>(spec.out_c));
  for (std::size_t n = 0; n < in_shape.n; ++n) {
    const T* x = in.data() + n * in_shape.c * in_shape.plane();
    T* y = out.data() + n * os.c * cols;
    Eigen::Map<MatR<T>> y_mat(y, static_cast<Eigen::Index>(spec.out_c),
                              static_cast<Eigen::Index>(cols));
    if (spec.kernel == 1 && spec.pad == 0) {
      Eigen::Map<const MatR<T>> x_mat(x, static_cast<Eigen::Index>(kdim),
                                      static_cast<Eigen::Index>(cols));
      y_mat.noalias() = w * x_mat;
    } else {
      im2col(x, in_shape, spec, os.h, os.w, scratch.data());
      Eigen::Map<const MatR<T>> col(scratch.data(), static_cast<Eigen::Index>(kdim),
                                    static_cast<Eigen::Index>(cols));
      y_mat.noalias() = w * col;
    }
    y_mat.colwise() += b;
  }
}

template <typename T>
void conv2d_backward(std::span<const T> in, const Shape4& in_shape, std::span<const T> weight,
                     const ConvSpec& spec, std::span<const T> grad_out, std::span<T> grad_in,
                     std::span<T> grad_weight, std::span<T> grad_bias, std::vector<T>& scratch) {
  const Shape4 os = spec.output_shape(in_shape);
  if constexpr (std::is_same_v<T, float>) {
    if (spec.kernel == 3 && spec.pad == 1) {
      bool done = true;
      for (std::size_t n = 0; n < in_shape.n && done; ++n) {
        const std::size_t in_off = n * in_shape.c * in_shape.plane();
        done = detail::conv3x3_backward(
            in.data() + in_off, in_shape.c, in_shape.h, in_shape.w, weight.data(), spec.out_c,
            grad_out.data() + n * os.c * os.plane(),
            grad_in.empty() ? nullptr : grad_in.data() + in_off, grad_weight.data(),
            grad_bias.data(), scratch);
      }
      if (done) return;
    }
  }
  const std::size_t kdim = in_shape.c * spec.kernel * spec.kernel;
  const std::size_t cols = os.plane();
  const auto oc = static_cast<Eigen::Index>(spec.out_c);
  const auto kd = static_cast<Eigen::Index>(kdim);
  const auto nc = static_cast<Eigen::Index>(cols);
  scratch.resize(2 * kdim * cols);
  T* col_buf = scratch.data();
  T* dcol_buf = scratch.data() + kdim * cols;
  Eigen::Map<const MatR<T>> w(weight.data(), oc, kd);
  Eigen::Map<MatR<T>> gw(grad_weight.data(), oc, kd);
  for (std::size_t n = 0; n < in_shape.n; ++n) {
    const T* x = in.data() + n * in_shape.c * in_shape.plane();
    Eigen::Map<const MatR<T>> dy(grad_out.data() + n * os.c * cols, oc, nc);
    im2col(x, in_shape, spec, os.h, os.w, col_buf);
    Eigen::Map<const MatR<T>> col(col_buf, kd, nc);
    gw.noalias() += dy * col.transpose();
    // Plain loop: Eigen reductions peel by address alignment, which would
    // make the summation order depend on where the buffers happen to live.
    for (std::size_t c = 0; c < spec.out_c; ++c) {
      const T* row = grad_out.data() + (n * os.c + c) * cols;
      T acc = 0;
      for (std::size_t i = 0; i < cols; ++i) acc += row[i];
      grad_bias[c] += acc;
    }
    if (!grad_in.empty()) {
      Eigen::Map<MatR<T>> dcol(dcol_buf, kd, nc);
      dcol.noalias() = w.transpose() * dy;
      col2im(dcol_buf, in_shape, spec, os.h, os.w,
             grad_in.data() + n * in_shape.c * in_shape.plane());
    }
  }
}

template <typename T>
void leaky_relu_forward(std::span<const T> in, T slope, std::span<T> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T(0) ? in[i] : slope * in[i];
}

template <typename T>
void leaky_relu_backward(std::span<const T> in, T slope, std::span<const T> grad_out,
                         std::span<T> grad_in) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    grad_in[i] = in[i] > T(0) ? grad_out[i] : slope * grad_out[i];
  }
}

template <typename T>
void avg_pool_forward(std::span<const T> in, const Shape4& s, std::size_t kh, std::size_t kw,
                      std::span<T> out) {
  const std::size_t oh = s.h / kh, ow = s.w / kw;
  const T scale = T(1) / static_cast<T>(kh * kw);
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    const T* src = in.data() + p * s.plane();
    T* dst = out.data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T acc = 0;
        for (std::size_t y = 0; y < kh; ++y) {
          const T* row = src + (oy * kh + y) * s.w + ox * kw;
          for (std::size_t x = 0; x < kw; ++x) acc += row[x];
        }
        dst[oy * ow + ox] = acc * scale;
      }
    }
  }
}

template <typename T>
void avg_pool_backward(const Shape4& s, std::size_t kh, std::size_t kw, std::span<const T> grad_out,
                       std::span<T> grad_in) {
  const std::size_t oh = s.h / kh, ow = s.w / kw;
  const T scale = T(1) / static_cast<T>(kh * kw);
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    const T* src = grad_out.data() + p * oh * ow;
    T* dst = grad_in.data() + p * s.plane();
    for (std::size_t y = 0; y < s.h; ++y) {
      for (std::size_t x = 0; x < s.w; ++x) {
        dst[y * s.w + x] = src[(y / kh) * ow + x / kw] * scale;
      }
    }
  }
}

template <typename T>
void linear_forward(std::span<const T> in, std::size_t batch, std::size_t in_features,
                    std::span<const T> weight, std::span<const T> bias, std::size_t out_features,
                    std::span<T> out) {
  for (std::size_t n = 0; n < batch; ++n) {
    const T* x = in.data() + n * in_features;
    for (std::size_t o = 0; o < out_features; ++o) {
      const T* w = weight.data() + o * in_features;
      T acc = 0;
      for (std::size_t f = 0; f < in_features; ++f) acc += w[f] * x[f];
      out[n * out_features + o] = acc + bias[o];
    }
  }
}

template <typename T>
void linear_backward(std::span<const T> in, std::size_t batch, std::size_t in_features,
                     std::span<const T> weight, std::size_t out_features,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  for (std::size_t n = 0; n < batch; ++n) {
    const T* x = in.data() + n * in_features;
    const T* dy = grad_out.data() + n * out_features;
    if (!grad_in.empty()) {
      T* dx = grad_in.data() + n * in_features;
      std::fill(dx, dx + in_features, T(0));
      for (std::size_t o = 0; o < out_features; ++o) {
        const T* w = weight.data() + o * in_features;
        for (std::size_t f = 0; f < in_features; ++f) dx[f] += w[f] * dy[o];
      }
    }
    for (std::size_t o = 0; o < out_features; ++o) {
      T* gw = grad_weight.data() + o * in_features;
      for (std::size_t f = 0; f < in_features; ++f) gw[f] += dy[o] * x[f];
      grad_bias[o] += dy[o];
    }
  }
}

template <typename T>
T clamp_forward(T x, T lo, T hi) noexcept {
  return std::clamp(x, lo, hi);
}

template <typename T>
T clamp_backward(T x, T lo, T hi, T grad_out) noexcept {
  return (x >= lo && x <= hi) ? grad_out : T(0);
}

template <typename T>
LossGrad<T> lognormal_loss_grad(T mu, T s, T log_y) noexcept {
  const T r = log_y - mu;
  const T inv_var = std::exp(-s);
  return {r * r * inv_var + s, T(-2) * r * inv_var, T(1) - r * r * inv_var};
}

#define SWEI_INSTANTIATE_LAYERS(T)                                                               \
  template void conv2d_forward<T>(std::span<const T>, const Shape4&, std::span<const T>,         \
                                  std::span<const T>, const ConvSpec&, std::span<T>,             \
                                  std::vector<T>&);                                              \
  template void conv2d_backward<T>(std::span<const T>, const Shape4&, std::span<const T>,        \
                                   const ConvSpec&, std::span<const T>, std::span<T>,            \
                                   std::span<T>, std::span<T>, std::vector<T>&);                 \
  template void leaky_relu_forward<T>(std::span<const T>, T, std::span<T>);                      \
  template void leaky_relu_backward<T>(std::span<const T>, T, std::span<const T>, std::span<T>); \
  template void avg_pool_forward<T>(std::span<const T>, const Shape4&, std::size_t, std::size_t, \
                                    std::span<T>);                                               \
  template void avg_pool_backward<T>(const Shape4&, std::size_t, std::size_t,                    \
                                     std::span<const T>, std::span<T>);                          \
  template void linear_forward<T>(std::span<const T>, std::size_t, std::size_t,                  \
                                  std::span<const T>, std::span<const T>, std::size_t,           \
                                  std::span<T>);                                                 \
  template void linear_backward<T>(std::span<const T>, std::size_t, std::size_t,                 \
                                   std::span<const T>, std::size_t, std::span<const T>,          \
                                   std::span<T>, std::span<T>, std::span<T>);                    \
  template T clamp_forward<T>(T, T, T) noexcept;                                                 \
  template T clamp_backward<T>(T, T, T, T) noexcept;                                             \
  template LossGrad<T> lognormal_loss_grad<T>(T, T, T) noexcept;

SWEI_INSTANTIATE_LAYERS(float)
SWEI_INSTANTIATE_LAYERS(double)

#undef SWEI_INSTANTIATE_LAYERS

}  // namespace swei::nn

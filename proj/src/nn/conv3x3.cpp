#include "conv3x3.hpp"

#include <algorithm>
#include <cstring>

namespace swei::nn::detail {
namespace {

constexpr std::size_t kLanes = 16;
constexpr std::size_t kMaxVectors = 8;
constexpr std::size_t kChannelBlock = 4;

typedef float vfloat __attribute__((vector_size(kLanes * sizeof(float))));

inline vfloat load(const float* p) {
  vfloat v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store(float* p, const vfloat& v) { std::memcpy(p, &v, sizeof v); }

inline vfloat splat(float x) { return x - vfloat{}; }

typedef int vmask __attribute__((vector_size(kLanes * sizeof(int))));

inline float hsum(vfloat v) {
  v += __builtin_shuffle(v, vmask{8, 9, 10, 11, 12, 13, 14, 15, 0, 1, 2, 3, 4, 5, 6, 7});
  v += __builtin_shuffle(v, vmask{4, 5, 6, 7, 0, 1, 2, 3, 12, 13, 14, 15, 8, 9, 10, 11});
  v += __builtin_shuffle(v, vmask{2, 3, 0, 1, 6, 7, 4, 5, 10, 11, 8, 9, 14, 15, 12, 13});
  v += __builtin_shuffle(v, vmask{1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 13, 12, 15, 14});
  return v[0];
}

/// Zero-padded copy: `rows` = h + 2 rows of `stride` floats per channel, with
/// the interior at row 1, column 1.
struct Padded {
  std::size_t stride = 0;
  std::size_t rows = 0;
  std::size_t plane() const { return stride * rows; }
};

Padded pad_planes(const float* src, std::size_t c, std::size_t h, std::size_t w,
                  std::size_t vectors, float* dst) {
  Padded p{vectors * kLanes + kLanes, h + 2};
  std::fill(dst, dst + c * p.plane(), 0.0f);
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t y = 0; y < h; ++y) {
      std::copy(src + (ci * h + y) * w, src + (ci * h + y + 1) * w,
                dst + ci * p.plane() + (y + 1) * p.stride + 1);
    }
  }
  return p;
}

// out[co][y][x] = bias[co] + sum_ci sum_ky sum_kx wt[co][ci][ky][kx] * in[ci][y+ky][x+kx]
// over a padded input. CB output channels and NV vectors of columns stay in registers.
template <std::size_t CB, std::size_t NV>
void forward_block(const float* padded, const Padded& p, std::size_t in_c, std::size_t h,
                   std::size_t w, const float* weight, const float* bias, std::size_t co0,
                   float* out) {
  for (std::size_t y = 0; y < h; ++y) {
    vfloat acc[CB][NV];
    #pragma GCC unroll 16
    for (std::size_t c = 0; c < CB; ++c) {
      const vfloat b = splat(bias != nullptr ? bias[co0 + c] : 0.0f);
      #pragma GCC unroll 16
      for (std::size_t v = 0; v < NV; ++v) acc[c][v] = b;
    }
    for (std::size_t ci = 0; ci < in_c; ++ci) {
      #pragma GCC unroll 16
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const float* row = padded + ci * p.plane() + (y + ky) * p.stride;
        #pragma GCC unroll 16
        for (std::size_t kx = 0; kx < 3; ++kx) {
          vfloat xin[NV];
          #pragma GCC unroll 16
          for (std::size_t v = 0; v < NV; ++v) xin[v] = load(row + kx + v * kLanes);
          #pragma GCC unroll 16
          for (std::size_t c = 0; c < CB; ++c) {
            const vfloat wv = splat(weight[(((co0 + c) * in_c + ci) * 3 + ky) * 3 + kx]);
            #pragma GCC unroll 16
            for (std::size_t v = 0; v < NV; ++v) acc[c][v] += wv * xin[v];
          }
        }
      }
    }
    #pragma GCC unroll 16
    for (std::size_t c = 0; c < CB; ++c) {
      float* dst = out + ((co0 + c) * h + y) * w;
      alignas(64) float tmp[NV * kLanes];
      #pragma GCC unroll 16
      for (std::size_t v = 0; v < NV; ++v) store(tmp + v * kLanes, acc[c][v]);
      std::copy(tmp, tmp + w, dst);
    }
  }
}

template <std::size_t NV>
void forward_planes(const float* padded, const Padded& p, std::size_t in_c, std::size_t h,
                    std::size_t w, const float* weight, const float* bias, std::size_t out_c,
                    float* out) {
  std::size_t co = 0;
  for (; co + kChannelBlock <= out_c; co += kChannelBlock) {
    forward_block<kChannelBlock, NV>(padded, p, in_c, h, w, weight, bias, co, out);
  }
  for (; co < out_c; ++co) forward_block<1, NV>(padded, p, in_c, h, w, weight, bias, co, out);
}

template <std::size_t NV>
void forward_dispatch(const float* padded, const Padded& p, std::size_t in_c, std::size_t h,
                      std::size_t w, const float* weight, const float* bias, std::size_t out_c,
                      float* out, std::size_t vectors) {
  if constexpr (NV < kMaxVectors) {
    if (vectors > NV) {
      forward_dispatch<NV + 1>(padded, p, in_c, h, w, weight, bias, out_c, out, vectors);
      return;
    }
  }
  forward_planes<NV>(padded, p, in_c, h, w, weight, bias, out_c, out);
}

// grad_w[co][ci][ky][kx] += sum_y sum_x g[co][y][x] * in[ci][y+ky][x+kx], with g
// zero-extended to whole vectors. CB output channels times the three kx taps
// accumulate in registers.
template <std::size_t CB, std::size_t NV>
void weight_grad_block(const float* padded, const Padded& p, const float* g,
                       std::size_t g_stride, std::size_t in_c, std::size_t h, std::size_t co0,
                       float* grad_weight) {
  for (std::size_t ci = 0; ci < in_c; ++ci) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      vfloat acc[CB][3];
#pragma GCC unroll 16
      for (std::size_t c = 0; c < CB; ++c) {
#pragma GCC unroll 3
        for (std::size_t kx = 0; kx < 3; ++kx) acc[c][kx] = splat(0.0f);
      }
      for (std::size_t y = 0; y < h; ++y) {
        const float* row = padded + ci * p.plane() + (y + ky) * p.stride;
#pragma GCC unroll 16
        for (std::size_t v = 0; v < NV; ++v) {
          vfloat xin[3];
#pragma GCC unroll 3
          for (std::size_t kx = 0; kx < 3; ++kx) xin[kx] = load(row + kx + v * kLanes);
#pragma GCC unroll 16
          for (std::size_t c = 0; c < CB; ++c) {
            const vfloat gv = load(g + ((co0 + c) * h + y) * g_stride + v * kLanes);
#pragma GCC unroll 3
            for (std::size_t kx = 0; kx < 3; ++kx) acc[c][kx] += gv * xin[kx];
          }
        }
      }
#pragma GCC unroll 16
      for (std::size_t c = 0; c < CB; ++c) {
        float* dst = grad_weight + ((co0 + c) * in_c + ci) * 9 + ky * 3;
        for (std::size_t kx = 0; kx < 3; ++kx) dst[kx] += hsum(acc[c][kx]);
      }
    }
  }
}

template <std::size_t NV>
void weight_grad(const float* padded, const Padded& p, const float* g, std::size_t g_stride,
                 std::size_t in_c, std::size_t h, std::size_t out_c, float* grad_weight) {
  constexpr std::size_t kGradBlock = 8;
  std::size_t co = 0;
  for (; co + kGradBlock <= out_c; co += kGradBlock) {
    weight_grad_block<kGradBlock, NV>(padded, p, g, g_stride, in_c, h, co, grad_weight);
  }
  for (; co < out_c; ++co) weight_grad_block<1, NV>(padded, p, g, g_stride, in_c, h, co, grad_weight);
}

template <std::size_t NV>
void weight_grad_dispatch(const float* padded, const Padded& p, const float* g,
                          std::size_t g_stride, std::size_t in_c, std::size_t h,
                          std::size_t out_c, float* grad_weight, std::size_t vectors) {
  if constexpr (NV < kMaxVectors) {
    if (vectors > NV) {
      weight_grad_dispatch<NV + 1>(padded, p, g, g_stride, in_c, h, out_c, grad_weight, vectors);
      return;
    }
  }
  weight_grad<NV>(padded, p, g, g_stride, in_c, h, out_c, grad_weight);
}

std::size_t vectors_for(std::size_t w) { return (w + kLanes - 1) / kLanes; }

}  // namespace

bool conv3x3_forward(const float* in, std::size_t in_c, std::size_t h, std::size_t w,
                     const float* weight, const float* bias, std::size_t out_c, float* out,
                     std::vector<float>& scratch) {
  const std::size_t nv = vectors_for(w);
  if (nv > kMaxVectors) return false;
  const Padded shape{nv * kLanes + kLanes, h + 2};
  scratch.resize(in_c * shape.plane());
  const Padded p = pad_planes(in, in_c, h, w, nv, scratch.data());
  forward_dispatch<1>(scratch.data(), p, in_c, h, w, weight, bias, out_c, out, nv);
  return true;
}

bool conv3x3_backward(const float* in, std::size_t in_c, std::size_t h, std::size_t w,
                      const float* weight, std::size_t out_c, const float* grad_out,
                      float* grad_in, float* grad_weight, float* grad_bias,
                      std::vector<float>& scratch) {
  const std::size_t nv = vectors_for(w);
  if (nv > kMaxVectors) return false;
  const Padded shape{nv * kLanes + kLanes, h + 2};
  const std::size_t in_pad = in_c * shape.plane();
  const std::size_t g_pad = out_c * shape.plane();
  const std::size_t g_ext = out_c * h * nv * kLanes;
  const std::size_t w_t = in_c * out_c * 9;
  scratch.resize(in_pad + g_pad + g_ext + w_t);
  float* padded_in = scratch.data();
  float* padded_g = padded_in + in_pad;
  float* g_wide = padded_g + g_pad;
  float* flipped = g_wide + g_ext;

  for (std::size_t co = 0; co < out_c; ++co) {
    const float* plane = grad_out + co * h * w;
    float s = 0.0f;
    for (std::size_t i = 0; i < h * w; ++i) s += plane[i];
    grad_bias[co] += s;
  }

  const Padded p = pad_planes(in, in_c, h, w, nv, padded_in);
  const std::size_t g_stride = nv * kLanes;
  std::fill(g_wide, g_wide + g_ext, 0.0f);
  for (std::size_t r = 0; r < out_c * h; ++r) {
    std::copy(grad_out + r * w, grad_out + (r + 1) * w, g_wide + r * g_stride);
  }
  weight_grad_dispatch<1>(padded_in, p, g_wide, g_stride, in_c, h, out_c, grad_weight, nv);

  if (grad_in != nullptr) {
    // flipped[ci][co][ky][kx] = weight[co][ci][2-ky][2-kx]
    for (std::size_t co = 0; co < out_c; ++co) {
      for (std::size_t ci = 0; ci < in_c; ++ci) {
        #pragma GCC unroll 16
        for (std::size_t k = 0; k < 9; ++k) {
          flipped[(ci * out_c + co) * 9 + k] = weight[(co * in_c + ci) * 9 + (8 - k)];
        }
      }
    }
    const Padded pg = pad_planes(grad_out, out_c, h, w, nv, padded_g);
    forward_dispatch<1>(padded_g, pg, out_c, h, w, flipped, nullptr, in_c, grad_in, nv);
  }
  return true;
}

}  // namespace swei::nn::detail

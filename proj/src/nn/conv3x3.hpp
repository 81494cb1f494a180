#pragma once

#include <cstddef>
#include <vector>

namespace swei::nn::detail {

/// Direct 3x3, pad 1, stride 1 convolution kernels for float planes, laid out
/// [channel][h][w]. Return false when the shape is outside the fast path
/// (width above 128) so the caller can fall back to im2col.
bool conv3x3_forward(const float* in, std::size_t in_c, std::size_t h, std::size_t w,
                     const float* weight, const float* bias, std::size_t out_c, float* out,
                     std::vector<float>& scratch);

/// grad_in = full correlation of grad_out with the flipped, transposed kernel;
/// grad_weight += correlation of grad_out with the padded input; grad_bias +=
/// per-channel sums. grad_in may be null.
bool conv3x3_backward(const float* in, std::size_t in_c, std::size_t h, std::size_t w,
                      const float* weight, std::size_t out_c, const float* grad_out,
                      float* grad_in, float* grad_weight, float* grad_bias,
                      std::vector<float>& scratch);

}  // namespace swei::nn::detail

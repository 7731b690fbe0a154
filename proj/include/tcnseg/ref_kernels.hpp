#pragma once

#include <vector>

#include "tcnseg/layers.hpp"
#include "tcnseg/tensor.hpp"

namespace tcnseg::ref {

// Straight-line serial re-implementations of the forward kernels, written
// directly from their definitions with no tape and no OpenMP. Tests use them
// as independent oracles for the production kernels and the benchmark
// measures the production speedup against them.

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor dilated_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                    std::size_t dilation, Scheme scheme);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double eps);

// ReLU(residual + block(block(x))) at inference (dropout is the identity).
Tensor hidden_layer(const Tensor& prev, const HiddenLayerParams& params,
                    const Tensor* residual_proj, std::size_t dilation, Scheme scheme);

Tensor encode(const Tensor& embedded, const std::vector<HiddenLayerParams>& layers,
              const Tensor* residual_proj, const ConvConfig& config);

}  // namespace tcnseg::ref

#include "tcnseg/ref_kernels.hpp"

#include <cmath>

namespace tcnseg::ref {

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t rows = a.extent(0);
  const std::size_t inner = a.extent(1);
  const std::size_t cols = b.extent(1);
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < inner; ++k) {
      for (std::size_t j = 0; j < cols; ++j) {
        out(i, j) += a(i, k) * b(k, j);
      }
    }
  }
  return out;
}

Tensor dilated_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                    std::size_t dilation, Scheme scheme) {
  const std::size_t m = x.extent(0);
  const std::size_t channels = x.extent(1);
  const std::size_t taps = kernel.extent(0);
  const std::size_t filters = kernel.extent(2);
  Tensor out({m, filters});
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t f = 0; f < filters; ++f) {
      double acc = bias(f);
      for (std::size_t i = 0; i < taps; ++i) {
        // Out-of-range taps read the zero padding, contributing nothing.
        long long j = scheme == Scheme::kFuture
                          ? static_cast<long long>(t) + static_cast<long long>(dilation * i)
                          : static_cast<long long>(t) - static_cast<long long>(dilation * i);
        if (j < 0 || j >= static_cast<long long>(m)) continue;
        for (std::size_t c = 0; c < channels; ++c) {
          acc += kernel(i, c, f) * x(static_cast<std::size_t>(j), c);
        }
      }
      out(t, f) = acc;
    }
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double eps) {
  const std::size_t m = x.extent(0);
  const std::size_t channels = x.extent(1);
  Tensor out({m, channels});
  for (std::size_t t = 0; t < m; ++t) {
    double mean = 0.0;
    for (std::size_t c = 0; c < channels; ++c) mean += x(t, c);
    mean /= static_cast<double>(channels);
    double var = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      var += (x(t, c) - mean) * (x(t, c) - mean);
    }
    var /= static_cast<double>(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      out(t, c) = gain(c) * (x(t, c) - mean) / std::sqrt(var + eps) + shift(c);
    }
  }
  return out;
}

namespace {

Tensor block(const Tensor& x, const BlockParams& p, std::size_t dilation, Scheme scheme) {
  return layer_norm(dilated_conv(x, p.kernel, p.bias, dilation, scheme), p.gain, p.shift,
                    kLayerNormEps);
}

}  // namespace

Tensor hidden_layer(const Tensor& prev, const HiddenLayerParams& params,
                    const Tensor* residual_proj, std::size_t dilation, Scheme scheme) {
  Tensor cblocks = block(block(prev, params.blocks[0], dilation, scheme), params.blocks[1],
                         dilation, scheme);
  const std::size_t m = prev.extent(0);
  const std::size_t filters = cblocks.extent(1);
  Tensor residual = residual_proj ? matmul(prev, *residual_proj) : prev;
  Tensor out({m, filters});
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t f = 0; f < filters; ++f) {
      const double v = residual(t, f) + cblocks(t, f);
      out(t, f) = v > 0.0 ? v : 0.0;
    }
  }
  return out;
}

Tensor encode(const Tensor& embedded, const std::vector<HiddenLayerParams>& layers,
              const Tensor* residual_proj, const ConvConfig& config) {
  Tensor h = embedded;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = hidden_layer(h, layers[i], i == 0 ? residual_proj : nullptr, config.dilation(i),
                     config.scheme);
  }
  return h;
}

}  // namespace tcnseg::ref

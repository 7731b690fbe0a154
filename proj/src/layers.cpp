#include "tcnseg/layers.hpp"

#include <cmath>
#include <string>

#include "tcnseg/error.hpp"

namespace tcnseg {

namespace {

void check_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank 2, got " + shape_string(t));
  }
}

}  // namespace

Tensor embed(const std::vector<std::size_t>& chars, const Tensor& table) {
  check_rank2(table, "embed");
  const std::size_t vocab = table.extent(0);
  const std::size_t dim = table.extent(1);
  Tensor out({chars.size(), dim});
  for (std::size_t t = 0; t < chars.size(); ++t) {
    if (chars[t] >= vocab) {
      throw VocabularyError("embed: character index " + std::to_string(chars[t]) +
                            " outside vocabulary of size " + std::to_string(vocab));
    }
    const double* src = table.row(chars[t]);
    double* dst = out.row(t);
    for (std::size_t j = 0; j < dim; ++j) dst[j] = src[j];
  }
  return out;
}

void embed_backward(const std::vector<std::size_t>& chars, const Tensor& grad_out,
                    Tensor& grad_table) {
  const std::size_t dim = grad_table.extent(1);
  for (std::size_t t = 0; t < chars.size(); ++t) {
    double* dst = grad_table.row(chars[t]);
    const double* src = grad_out.row(t);
    for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
  }
}

Tensor dilated_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                    std::size_t dilation, Scheme scheme) {
  check_rank2(x, "dilated_conv");
  if (kernel.rank() != 3 || kernel.extent(1) != x.extent(1)) {
    throw DimensionError("dilated_conv: kernel " + shape_string(kernel) +
                         " does not accept input " + shape_string(x));
  }
  if (dilation == 0) {
    throw DomainError("dilated_conv: dilation must be >= 1");
  }
  const std::size_t m = x.extent(0);
  const std::size_t channels = x.extent(1);
  const std::size_t taps = kernel.extent(0);
  const std::size_t filters = kernel.extent(2);
  Tensor out({m, filters});
  // Positions are independent; out-of-range taps read the zero padding.
#pragma omp parallel for schedule(static) if (m * taps * channels * filters > 8192)
  for (long long tr = 0; tr < static_cast<long long>(m); ++tr) {
    const std::size_t t = static_cast<std::size_t>(tr);
    double* out_row = out.row(t);
    for (std::size_t f = 0; f < filters; ++f) out_row[f] = bias(f);
    for (std::size_t i = 0; i < taps; ++i) {
      std::size_t j;
      if (scheme == Scheme::kFuture) {
        j = t + dilation * i;
        if (j >= m) break;
      } else {
        const std::size_t back = dilation * i;
        if (back > t) break;
        j = t - back;
      }
      const double* x_row = x.row(j);
      for (std::size_t c = 0; c < channels; ++c) {
        const double xv = x_row[c];
        if (xv == 0.0) continue;
        const double* k_row = &kernel(i, c, 0);
        for (std::size_t f = 0; f < filters; ++f) {
          out_row[f] += k_row[f] * xv;
        }
      }
    }
  }
  return out;
}

void dilated_conv_backward(const Tensor& x, const Tensor& kernel, std::size_t dilation,
                           Scheme scheme, const Tensor& grad_out, Tensor& grad_x,
                           Tensor& grad_kernel, Tensor& grad_bias) {
  const std::size_t m = x.extent(0);
  const std::size_t channels = x.extent(1);
  const std::size_t taps = kernel.extent(0);
  const std::size_t filters = kernel.extent(2);

  // d/dx: gather from every output position whose receptive field covers j.
#pragma omp parallel for schedule(static) if (m * taps * channels * filters > 8192)
  for (long long jr = 0; jr < static_cast<long long>(m); ++jr) {
    const std::size_t j = static_cast<std::size_t>(jr);
    double* gx_row = grad_x.row(j);
    for (std::size_t i = 0; i < taps; ++i) {
      std::size_t t;
      if (scheme == Scheme::kFuture) {
        const std::size_t back = dilation * i;
        if (back > j) break;
        t = j - back;
      } else {
        t = j + dilation * i;
        if (t >= m) break;
      }
      const double* go_row = grad_out.row(t);
      for (std::size_t c = 0; c < channels; ++c) {
        const double* k_row = &kernel(i, c, 0);
        double acc = 0.0;
        for (std::size_t f = 0; f < filters; ++f) {
          acc += k_row[f] * go_row[f];
        }
        gx_row[c] += acc;
      }
    }
  }

  // d/dkernel: each (tap, channel) slice accumulates over positions serially,
  // so results do not depend on the thread count.
#pragma omp parallel for collapse(2) schedule(static) if (taps * channels * filters > 2048)
  for (long long ir = 0; ir < static_cast<long long>(taps); ++ir) {
    for (long long cr = 0; cr < static_cast<long long>(channels); ++cr) {
      const std::size_t i = static_cast<std::size_t>(ir);
      const std::size_t c = static_cast<std::size_t>(cr);
      double* gk_row = &grad_kernel(i, c, 0);
      for (std::size_t t = 0; t < m; ++t) {
        std::size_t j;
        if (scheme == Scheme::kFuture) {
          j = t + dilation * i;
          if (j >= m) break;
        } else {
          const std::size_t back = dilation * i;
          if (back > t) continue;
          j = t - back;
        }
        const double xv = x(j, c);
        if (xv == 0.0) continue;
        const double* go_row = grad_out.row(t);
        for (std::size_t f = 0; f < filters; ++f) {
          gk_row[f] += xv * go_row[f];
        }
      }
    }
  }

  for (std::size_t t = 0; t < m; ++t) {
    const double* go_row = grad_out.row(t);
    for (std::size_t f = 0; f < filters; ++f) grad_bias(f) += go_row[f];
  }
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double eps,
                  LayerNormTape* tape) {
  check_rank2(x, "layer_norm");
  const std::size_t m = x.extent(0);
  const std::size_t channels = x.extent(1);
  Tensor out({m, channels});
  if (tape) {
    tape->normalized = Tensor({m, channels});
    tape->inv_std.assign(m, 0.0);
  }
#pragma omp parallel for schedule(static) if (m * channels > 16384)
  for (long long tr = 0; tr < static_cast<long long>(m); ++tr) {
    const std::size_t t = static_cast<std::size_t>(tr);
    const double* x_row = x.row(t);
    double mean = 0.0;
    for (std::size_t c = 0; c < channels; ++c) mean += x_row[c];
    mean /= static_cast<double>(channels);
    double var = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = x_row[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(channels);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    double* out_row = out.row(t);
    for (std::size_t c = 0; c < channels; ++c) {
      const double norm = (x_row[c] - mean) * inv_std;
      out_row[c] = gain(c) * norm + shift(c);
      if (tape) tape->normalized(t, c) = norm;
    }
    if (tape) tape->inv_std[t] = inv_std;
  }
  return out;
}

Tensor layer_norm_backward(const LayerNormTape& tape, const Tensor& gain,
                           const Tensor& grad_out, Tensor& grad_gain, Tensor& grad_shift) {
  const std::size_t m = grad_out.extent(0);
  const std::size_t channels = grad_out.extent(1);
  Tensor grad_x({m, channels});
  for (std::size_t t = 0; t < m; ++t) {
    const double* go_row = grad_out.row(t);
    const double* norm_row = tape.normalized.row(t);
    for (std::size_t c = 0; c < channels; ++c) {
      grad_gain(c) += go_row[c] * norm_row[c];
      grad_shift(c) += go_row[c];
    }
  }
#pragma omp parallel for schedule(static) if (m * channels > 16384)
  for (long long tr = 0; tr < static_cast<long long>(m); ++tr) {
    const std::size_t t = static_cast<std::size_t>(tr);
    const double* go_row = grad_out.row(t);
    const double* norm_row = tape.normalized.row(t);
    double mean_g = 0.0;
    double mean_gn = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = go_row[c] * gain(c);
      mean_g += g;
      mean_gn += g * norm_row[c];
    }
    mean_g /= static_cast<double>(channels);
    mean_gn /= static_cast<double>(channels);
    double* gx_row = grad_x.row(t);
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = go_row[c] * gain(c);
      gx_row[c] = tape.inv_std[t] * (g - mean_g - norm_row[c] * mean_gn);
    }
  }
  return grad_x;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, Rng* rng, Tensor* mask_out) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::kInfer || rate == 0.0) {
    if (mask_out) {
      *mask_out = Tensor::zeros_like(x);
      mask_out->fill(1.0);
    }
    return x;
  }
  if (!rng) {
    throw ConfigError("dropout: train mode with a positive rate needs an rng");
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng->next_unit() < rate ? 0.0 : keep_scale;
  }
  Tensor out = mul(x, mask);
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

Tensor conv_block(const Tensor& x, const BlockParams& params, std::size_t dilation,
                  Scheme scheme, Mode mode, double dropout_rate, Rng* dropout_rng,
                  ConvBlockTape* tape) {
  Tensor conv_out = dilated_conv(x, params.kernel, params.bias, dilation, scheme);
  Tensor norm_out = layer_norm(conv_out, params.gain, params.shift, kLayerNormEps,
                               tape ? &tape->ln : nullptr);
  Tensor out = dropout(norm_out, dropout_rate, mode, dropout_rng, tape ? &tape->mask : nullptr);
  if (tape) tape->input = x;
  return out;
}

Tensor conv_block_backward(const ConvBlockTape& tape, const BlockParams& params,
                           std::size_t dilation, Scheme scheme, const Tensor& grad_out,
                           BlockParams& grads) {
  Tensor grad_norm = mul(grad_out, tape.mask);
  Tensor grad_conv = layer_norm_backward(tape.ln, params.gain, grad_norm, grads.gain,
                                         grads.shift);
  Tensor grad_x = Tensor::zeros_like(tape.input);
  dilated_conv_backward(tape.input, params.kernel, dilation, scheme, grad_conv, grad_x,
                        grads.kernel, grads.bias);
  return grad_x;
}

Tensor hidden_layer(const Tensor& prev, const HiddenLayerParams& params,
                    const Tensor* residual_proj, std::size_t dilation, Scheme scheme,
                    Mode mode, double dropout_rate, Rng* dropout_rng, HiddenLayerTape* tape) {
  Tensor block0_out = conv_block(prev, params.blocks[0], dilation, scheme, mode, dropout_rate,
                                 dropout_rng, tape ? &tape->block0 : nullptr);
  Tensor cblocks = conv_block(block0_out, params.blocks[1], dilation, scheme, mode,
                              dropout_rate, dropout_rng, tape ? &tape->block1 : nullptr);
  Tensor pre_act = residual_proj ? add(matmul(prev, *residual_proj), cblocks)
                                 : add(prev, cblocks);
  Tensor out = relu(pre_act);
  if (tape) tape->pre_act = std::move(pre_act);
  return out;
}

Tensor hidden_layer_backward(const HiddenLayerTape& tape, const HiddenLayerParams& params,
                             const Tensor* residual_proj, std::size_t dilation, Scheme scheme,
                             const Tensor& grad_out, HiddenLayerParams& grads,
                             Tensor* grad_proj) {
  // ReLU gate; subgradient 0 at exactly 0.
  Tensor grad_pre = Tensor::zeros_like(grad_out);
  for (std::size_t i = 0; i < grad_pre.size(); ++i) {
    grad_pre[i] = tape.pre_act[i] > 0.0 ? grad_out[i] : 0.0;
  }
  Tensor grad_block0_out = conv_block_backward(tape.block1, params.blocks[1], dilation, scheme,
                                               grad_pre, grads.blocks[1]);
  Tensor grad_prev = conv_block_backward(tape.block0, params.blocks[0], dilation, scheme,
                                         grad_block0_out, grads.blocks[0]);
  const Tensor& prev = tape.block0.input;
  if (residual_proj) {
    Tensor proj_grad = matmul(transpose(prev), grad_pre);
    for (std::size_t i = 0; i < proj_grad.size(); ++i) (*grad_proj)[i] += proj_grad[i];
    Tensor residual_grad = matmul(grad_pre, transpose(*residual_proj));
    for (std::size_t i = 0; i < grad_prev.size(); ++i) grad_prev[i] += residual_grad[i];
  } else {
    for (std::size_t i = 0; i < grad_prev.size(); ++i) grad_prev[i] += grad_pre[i];
  }
  return grad_prev;
}

Tensor encode(const Tensor& embedded, const std::vector<HiddenLayerParams>& layers,
              const Tensor* residual_proj, const ConvConfig& config, Mode mode,
              Rng* dropout_rng, EncodeTape* tape) {
  if (tape) {
    tape->layers.clear();
    tape->layers.resize(layers.size());
  }
  Tensor h = embedded;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Tensor* proj = (i == 0) ? residual_proj : nullptr;
    h = hidden_layer(h, layers[i], proj, config.dilation(i), config.scheme, mode,
                     config.dropout, dropout_rng, tape ? &tape->layers[i] : nullptr);
  }
  return h;
}

Tensor encode_backward(const EncodeTape& tape, const std::vector<HiddenLayerParams>& layers,
                       const Tensor* residual_proj, const ConvConfig& config,
                       const Tensor& grad_out, std::vector<HiddenLayerParams>& grads,
                       Tensor* grad_proj) {
  Tensor g = grad_out;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Tensor* proj = (i == 0) ? residual_proj : nullptr;
    g = hidden_layer_backward(tape.layers[i], layers[i], proj, config.dilation(i),
                              config.scheme, g, grads[i], proj ? grad_proj : nullptr);
  }
  return g;
}

Tensor decode(const Tensor& hidden, const Tensor& weight, const Tensor& bias) {
  check_rank2(hidden, "decode");
  if (weight.rank() != 2 || weight.extent(0) != hidden.extent(1)) {
    throw DimensionError("decode: weight " + shape_string(weight) + " does not accept " +
                         shape_string(hidden));
  }
  Tensor score = matmul(hidden, weight);
  const std::size_t labels = weight.extent(1);
  for (std::size_t t = 0; t < score.extent(0); ++t) {
    double* row = score.row(t);
    for (std::size_t l = 0; l < labels; ++l) row[l] += bias(l);
  }
  return score;
}

Tensor decode_backward(const Tensor& hidden, const Tensor& weight, const Tensor& grad_score,
                       Tensor& grad_weight, Tensor& grad_bias) {
  Tensor gw = matmul(transpose(hidden), grad_score);
  for (std::size_t i = 0; i < gw.size(); ++i) grad_weight[i] += gw[i];
  const std::size_t labels = grad_score.extent(1);
  for (std::size_t t = 0; t < grad_score.extent(0); ++t) {
    const double* row = grad_score.row(t);
    for (std::size_t l = 0; l < labels; ++l) grad_bias(l) += row[l];
  }
  return matmul(grad_score, transpose(weight));
}

}  // namespace tcnseg

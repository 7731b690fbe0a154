#pragma once

#include <cstddef>
#include <vector>

#include "tcnseg/rng.hpp"
#include "tcnseg/tensor.hpp"

namespace tcnseg {

// Tap direction of the dilated convolution: future reads positions
// t, t+d, ..., t+(s-1)d; past mirrors to the left.
enum class Scheme { kFuture, kPast };

enum class Mode { kTrain, kInfer };

struct ConvConfig {
  std::size_t embed_dim = 100;      // n
  std::size_t filters = 100;        // fs
  std::size_t hidden_layers = 4;    // ly
  std::size_t kernel_size = 3;      // s
  double dropout = 0.3;             // dp
  Scheme scheme = Scheme::kFuture;
  static constexpr std::size_t kStride = 1;

  // Layer i convolves with dilation 2^i.
  std::size_t dilation(std::size_t layer) const { return std::size_t{1} << layer; }
  std::size_t block_in_channels(std::size_t layer, std::size_t block) const {
    return (layer == 0 && block == 0) ? embed_dim : filters;
  }
  // One-sided receptive-field extent of the whole encoder.
  std::size_t receptive_field_extent() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < hidden_layers; ++i) {
      total += 2 * (kernel_size - 1) * dilation(i);
    }
    return total;
  }
};

inline constexpr double kLayerNormEps = 1e-5;

// Convolution kernel [s x in_channels x filters], bias [filters], and the
// layer-norm gain/shift that follow it inside one convolutional block.
struct BlockParams {
  Tensor kernel;
  Tensor bias;
  Tensor gain;
  Tensor shift;
};

struct HiddenLayerParams {
  BlockParams blocks[2];
};

// ---- Embedding lookup ----

Tensor embed(const std::vector<std::size_t>& chars, const Tensor& table);
// Scatter-adds grad_out rows into the table gradient (multiplicity counted).
void embed_backward(const std::vector<std::size_t>& chars, const Tensor& grad_out,
                    Tensor& grad_table);

// ---- Dilated convolution ----

Tensor dilated_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                    std::size_t dilation, Scheme scheme);
void dilated_conv_backward(const Tensor& x, const Tensor& kernel, std::size_t dilation,
                           Scheme scheme, const Tensor& grad_out, Tensor& grad_x,
                           Tensor& grad_kernel, Tensor& grad_bias);

// ---- Layer normalization (across channels, per position) ----

struct LayerNormTape {
  Tensor normalized;            // (x - mu) * inv_std, per position
  std::vector<double> inv_std;  // 1 / sqrt(var + eps), per position
};

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                  double eps = kLayerNormEps, LayerNormTape* tape = nullptr);
Tensor layer_norm_backward(const LayerNormTape& tape, const Tensor& gain,
                           const Tensor& grad_out, Tensor& grad_gain, Tensor& grad_shift);

// ---- Inverted dropout ----

// Train mode zeroes each element with probability `rate` and scales survivors
// by 1/(1-rate); infer mode is the identity with an all-ones mask.
Tensor dropout(const Tensor& x, double rate, Mode mode, Rng* rng, Tensor* mask_out = nullptr);

// ---- Convolutional block: conv -> layer norm -> dropout ----

struct ConvBlockTape {
  Tensor input;
  LayerNormTape ln;
  Tensor mask;
};

Tensor conv_block(const Tensor& x, const BlockParams& params, std::size_t dilation,
                  Scheme scheme, Mode mode, double dropout_rate, Rng* dropout_rng,
                  ConvBlockTape* tape = nullptr);
Tensor conv_block_backward(const ConvBlockTape& tape, const BlockParams& params,
                           std::size_t dilation, Scheme scheme, const Tensor& grad_out,
                           BlockParams& grads);

// ---- Hidden layer: ReLU(residual + two stacked conv blocks) ----

struct HiddenLayerTape {
  ConvBlockTape block0;
  ConvBlockTape block1;
  Tensor pre_act;
};

// residual_proj is a learned [in x filters] map applied on the residual path
// when the input channel count differs from the filter count (first layer
// with fs != n); pass nullptr for the identity residual.
Tensor hidden_layer(const Tensor& prev, const HiddenLayerParams& params,
                    const Tensor* residual_proj, std::size_t dilation, Scheme scheme,
                    Mode mode, double dropout_rate, Rng* dropout_rng,
                    HiddenLayerTape* tape = nullptr);
Tensor hidden_layer_backward(const HiddenLayerTape& tape, const HiddenLayerParams& params,
                             const Tensor* residual_proj, std::size_t dilation, Scheme scheme,
                             const Tensor& grad_out, HiddenLayerParams& grads,
                             Tensor* grad_proj);

// ---- Encoder: ly hidden layers with dilations 2^0 .. 2^(ly-1) ----

struct EncodeTape {
  std::vector<HiddenLayerTape> layers;
};

Tensor encode(const Tensor& embedded, const std::vector<HiddenLayerParams>& layers,
              const Tensor* residual_proj, const ConvConfig& config, Mode mode,
              Rng* dropout_rng, EncodeTape* tape = nullptr);
Tensor encode_backward(const EncodeTape& tape, const std::vector<HiddenLayerParams>& layers,
                       const Tensor* residual_proj, const ConvConfig& config,
                       const Tensor& grad_out, std::vector<HiddenLayerParams>& grads,
                       Tensor* grad_proj);

// ---- Decoder: dense map to one score per label ----

Tensor decode(const Tensor& hidden, const Tensor& weight, const Tensor& bias);
Tensor decode_backward(const Tensor& hidden, const Tensor& weight, const Tensor& grad_score,
                       Tensor& grad_weight, Tensor& grad_bias);

}  // namespace tcnseg

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tcnseg/crf.hpp"
#include "tcnseg/layers.hpp"
#include "tcnseg/rng.hpp"
#include "tcnseg/tensor.hpp"

namespace tcnseg {

// Every trainable tensor of the model. The transition matrix belongs to the
// CRF head but is trained jointly with everything else.
struct ModelParams {
  Tensor embeddings;                      // [V x n]
  std::vector<HiddenLayerParams> layers;  // ly entries
  Tensor residual_proj;                   // [n x fs] iff fs != n, else empty
  Tensor decoder_weight;                  // [fs x 4]
  Tensor decoder_bias;                    // [4]
  Tensor transitions;                     // [4 x 4]

  bool has_residual_proj() const { return !residual_proj.empty(); }
  const Tensor* residual_proj_ptr() const {
    return has_residual_proj() ? &residual_proj : nullptr;
  }
  std::size_t parameter_count() const;
};

// Kernels and decoder weight from uniform(-r, r) with r = sqrt(6/(fan_in +
// fan_out)); gains one; biases, shifts and transitions zero; embeddings from
// uniform(-0.1, 0.1) (a pretrained table may overwrite them afterwards).
ModelParams init_params(const ConvConfig& config, std::size_t vocab_size, Rng& rng);

// Same tensor shapes, all zeros; the gradient carrier.
ModelParams zeros_like(const ModelParams& params);

// Stable (name, tensor) enumeration; checkpoint records and Adam slots follow
// this order.
std::vector<std::pair<std::string, Tensor*>> named_tensors(ModelParams& params);
std::vector<std::pair<std::string, const Tensor*>> named_tensors(const ModelParams& params);

// Retained activations of one training-mode forward pass.
struct ForwardTape {
  Tensor embedded;
  EncodeTape encoder;
  Tensor hidden;
};

// embed -> encode -> decode. Returns the score matrix [m x 4].
Tensor score_sentence(const ModelParams& params, const ConvConfig& config,
                      const std::vector<std::size_t>& chars, Mode mode, Rng* dropout_rng,
                      ForwardTape* tape = nullptr);

// Per-sentence gradients. The embedding gradient is kept as per-position rows
// (row t pairs with chars[t]) so a batch of sentences can be reduced without
// materializing one dense table copy per sentence.
struct SentenceGrads {
  Tensor embed_rows;  // [m x n]
  std::vector<HiddenLayerParams> layers;
  Tensor residual_proj;
  Tensor decoder_weight;
  Tensor decoder_bias;
  Tensor transitions;
};

SentenceGrads score_backward(const ModelParams& params, const ConvConfig& config,
                             const ForwardTape& tape, const Tensor& grad_score);

// total += scale * grads, scattering embedding rows by character index.
void accumulate_grads(ModelParams& total, const SentenceGrads& grads,
                      const std::vector<std::size_t>& chars, double scale);

}  // namespace tcnseg

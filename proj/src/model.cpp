#include "tcnseg/model.hpp"

#include <cmath>

#include "tcnseg/error.hpp"

namespace tcnseg {

namespace {

void fill_uniform(Tensor& t, double radius, Rng& rng) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_uniform(-radius, radius);
}

double glorot_radius(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, tensor] : named_tensors(*this)) total += tensor->size();
  return total;
}

ModelParams init_params(const ConvConfig& config, std::size_t vocab_size, Rng& rng) {
  if (config.hidden_layers > 0 && config.filters == 0) {
    throw ConfigError("init_params: filter count must be positive");
  }
  ModelParams p;
  p.embeddings = Tensor({vocab_size, config.embed_dim});
  fill_uniform(p.embeddings, 0.1, rng);

  p.layers.resize(config.hidden_layers);
  for (std::size_t i = 0; i < config.hidden_layers; ++i) {
    for (std::size_t b = 0; b < 2; ++b) {
      const std::size_t in_ch = config.block_in_channels(i, b);
      BlockParams& block = p.layers[i].blocks[b];
      block.kernel = Tensor({config.kernel_size, in_ch, config.filters});
      fill_uniform(block.kernel, glorot_radius(config.kernel_size * in_ch,
                                               config.kernel_size * config.filters),
                   rng);
      block.bias = Tensor({config.filters});
      block.gain = Tensor({config.filters});
      block.gain.fill(1.0);
      block.shift = Tensor({config.filters});
    }
  }

  if (config.hidden_layers > 0 && config.filters != config.embed_dim) {
    p.residual_proj = Tensor({config.embed_dim, config.filters});
    fill_uniform(p.residual_proj, glorot_radius(config.embed_dim, config.filters), rng);
  }

  const std::size_t out_ch = config.hidden_layers > 0 ? config.filters : config.embed_dim;
  p.decoder_weight = Tensor({out_ch, kNumLabels});
  fill_uniform(p.decoder_weight, glorot_radius(out_ch, kNumLabels), rng);
  p.decoder_bias = Tensor({kNumLabels});
  p.transitions = Tensor({kNumLabels, kNumLabels});
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z;
  z.embeddings = Tensor::zeros_like(params.embeddings);
  z.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    for (std::size_t b = 0; b < 2; ++b) {
      z.layers[i].blocks[b].kernel = Tensor::zeros_like(params.layers[i].blocks[b].kernel);
      z.layers[i].blocks[b].bias = Tensor::zeros_like(params.layers[i].blocks[b].bias);
      z.layers[i].blocks[b].gain = Tensor::zeros_like(params.layers[i].blocks[b].gain);
      z.layers[i].blocks[b].shift = Tensor::zeros_like(params.layers[i].blocks[b].shift);
    }
  }
  if (params.has_residual_proj()) z.residual_proj = Tensor::zeros_like(params.residual_proj);
  z.decoder_weight = Tensor::zeros_like(params.decoder_weight);
  z.decoder_bias = Tensor::zeros_like(params.decoder_bias);
  z.transitions = Tensor::zeros_like(params.transitions);
  return z;
}

namespace {

template <typename Params, typename TensorPtr>
std::vector<std::pair<std::string, TensorPtr>> named_tensors_impl(Params& p) {
  std::vector<std::pair<std::string, TensorPtr>> out;
  out.emplace_back("embeddings", &p.embeddings);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    for (std::size_t b = 0; b < 2; ++b) {
      const std::string prefix = "layer" + std::to_string(i) + ".block" + std::to_string(b);
      out.emplace_back(prefix + ".kernel", &p.layers[i].blocks[b].kernel);
      out.emplace_back(prefix + ".bias", &p.layers[i].blocks[b].bias);
      out.emplace_back(prefix + ".gain", &p.layers[i].blocks[b].gain);
      out.emplace_back(prefix + ".shift", &p.layers[i].blocks[b].shift);
    }
  }
  if (p.has_residual_proj()) out.emplace_back("residual_proj", &p.residual_proj);
  out.emplace_back("decoder.weight", &p.decoder_weight);
  out.emplace_back("decoder.bias", &p.decoder_bias);
  out.emplace_back("crf.transitions", &p.transitions);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> named_tensors(ModelParams& params) {
  return named_tensors_impl<ModelParams, Tensor*>(params);
}

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const ModelParams& params) {
  return named_tensors_impl<const ModelParams, const Tensor*>(params);
}

Tensor score_sentence(const ModelParams& params, const ConvConfig& config,
                      const std::vector<std::size_t>& chars, Mode mode, Rng* dropout_rng,
                      ForwardTape* tape) {
  Tensor embedded = embed(chars, params.embeddings);
  Tensor hidden = encode(embedded, params.layers, params.residual_proj_ptr(), config, mode,
                         dropout_rng, tape ? &tape->encoder : nullptr);
  Tensor score = decode(hidden, params.decoder_weight, params.decoder_bias);
  if (tape) {
    tape->embedded = std::move(embedded);
    tape->hidden = std::move(hidden);
  }
  return score;
}

SentenceGrads score_backward(const ModelParams& params, const ConvConfig& config,
                             const ForwardTape& tape, const Tensor& grad_score) {
  SentenceGrads g;
  g.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    for (std::size_t b = 0; b < 2; ++b) {
      g.layers[i].blocks[b].kernel = Tensor::zeros_like(params.layers[i].blocks[b].kernel);
      g.layers[i].blocks[b].bias = Tensor::zeros_like(params.layers[i].blocks[b].bias);
      g.layers[i].blocks[b].gain = Tensor::zeros_like(params.layers[i].blocks[b].gain);
      g.layers[i].blocks[b].shift = Tensor::zeros_like(params.layers[i].blocks[b].shift);
    }
  }
  if (params.has_residual_proj()) g.residual_proj = Tensor::zeros_like(params.residual_proj);
  g.decoder_weight = Tensor::zeros_like(params.decoder_weight);
  g.decoder_bias = Tensor::zeros_like(params.decoder_bias);
  g.transitions = Tensor({kNumLabels, kNumLabels});

  Tensor grad_hidden = decode_backward(tape.hidden, params.decoder_weight, grad_score,
                                       g.decoder_weight, g.decoder_bias);
  Tensor* grad_proj = params.has_residual_proj() ? &g.residual_proj : nullptr;
  g.embed_rows = encode_backward(tape.encoder, params.layers, params.residual_proj_ptr(),
                                 config, grad_hidden, g.layers, grad_proj);
  return g;
}

void accumulate_grads(ModelParams& total, const SentenceGrads& grads,
                      const std::vector<std::size_t>& chars, double scale) {
  const std::size_t dim = total.embeddings.extent(1);
  for (std::size_t t = 0; t < chars.size(); ++t) {
    double* dst = total.embeddings.row(chars[t]);
    const double* src = grads.embed_rows.row(t);
    for (std::size_t j = 0; j < dim; ++j) dst[j] += scale * src[j];
  }
  const auto axpy = [scale](Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  };
  for (std::size_t i = 0; i < total.layers.size(); ++i) {
    for (std::size_t b = 0; b < 2; ++b) {
      axpy(total.layers[i].blocks[b].kernel, grads.layers[i].blocks[b].kernel);
      axpy(total.layers[i].blocks[b].bias, grads.layers[i].blocks[b].bias);
      axpy(total.layers[i].blocks[b].gain, grads.layers[i].blocks[b].gain);
      axpy(total.layers[i].blocks[b].shift, grads.layers[i].blocks[b].shift);
    }
  }
  if (total.has_residual_proj()) axpy(total.residual_proj, grads.residual_proj);
  axpy(total.decoder_weight, grads.decoder_weight);
  axpy(total.decoder_bias, grads.decoder_bias);
  axpy(total.transitions, grads.transitions);
}

}  // namespace tcnseg

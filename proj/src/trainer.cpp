#include "tcnseg/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tcnseg/crf.hpp"
#include "tcnseg/error.hpp"

namespace tcnseg {

Dataset parse_dataset(std::string_view text) {
  Dataset data;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    const bool last = end == text.size();
    start = end + 1;
    if (raw.empty() && last) break;
    std::string line(raw);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<Example> parsed = parse_corpus(line);
    if (!parsed.empty()) {
      data.lines.push_back(std::move(line));
      data.examples.push_back(std::move(parsed.front()));
    }
    if (last) break;
  }
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open corpus file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

std::string format_epoch_line(const EpochLog& log) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu\t%.12g\t%.6f\t%.6f\t%.6f\t%.1f", log.epoch,
                log.mean_loss, log.dev.precision, log.dev.recall, log.dev.f1,
                log.sentences_per_second);
  return buf;
}

namespace {

struct BatchWork {
  std::vector<SentenceGrads> grads;
  std::vector<double> losses;
};

// Forward + backward for every row of the batch, in parallel; the serial,
// row-ordered reduction afterwards keeps gradients bit-identical no matter
// how many threads ran.
BatchWork batch_forward_backward(const Batch& batch, const TrainConfig& config,
                                 std::size_t epoch, const ModelParams& params) {
  BatchWork work;
  work.grads.resize(batch.rows);
  work.losses.assign(batch.rows, 0.0);
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (long long rr = 0; rr < static_cast<long long>(batch.rows); ++rr) {
    try {
      const std::size_t r = static_cast<std::size_t>(rr);
      const std::vector<std::size_t> chars = batch.row_chars(r);
      const LabelSeq gold = batch.row_labels(r);
      Rng dropout_rng(
          derive_seed(config.seed, SeedStream::kDropout, batch.origin[r], epoch));
      ForwardTape tape;
      Tensor score = score_sentence(params, config.conv, chars, Mode::kTrain, &dropout_rng,
                                    &tape);
      LossGrads lg = loss_backward(score, params.transitions, gold);
      SentenceGrads sg = score_backward(params, config.conv, tape, lg.grad_score);
      sg.transitions = std::move(lg.grad_transitions);
      work.losses[r] = lg.loss;
      work.grads[r] = std::move(sg);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return work;
}

}  // namespace

double train_batch(const Batch& batch, const TrainConfig& config, std::size_t epoch,
                   ModelParams& params, AdamState& adam) {
  BatchWork work = batch_forward_backward(batch, config, epoch, params);

  ModelParams total = zeros_like(params);
  const double inv_rows = 1.0 / static_cast<double>(batch.rows);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    accumulate_grads(total, work.grads[r], batch.row_chars(r), inv_rows);
  }

  auto param_named = named_tensors(params);
  auto grad_named = named_tensors(static_cast<const ModelParams&>(total));
  std::vector<Tensor*> param_list;
  std::vector<const Tensor*> grad_list;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < param_named.size(); ++i) {
    param_list.push_back(param_named[i].second);
    grad_list.push_back(grad_named[i].second);
    names.push_back(param_named[i].first);
  }
  AdamConfig adam_config;
  adam_config.lr = config.lr;
  std::vector<std::string> frozen;
  if (config.freeze_embeddings) frozen.push_back("embeddings");
  adam_step(param_list, grad_list, names, adam, adam_config, frozen);

  double total_loss = 0.0;
  for (double l : work.losses) total_loss += l;
  return total_loss;
}

double batch_loss(const Batch& batch, const TrainConfig& config, const ModelParams& params) {
  std::vector<double> losses(batch.rows, 0.0);
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (long long rr = 0; rr < static_cast<long long>(batch.rows); ++rr) {
    try {
      const std::size_t r = static_cast<std::size_t>(rr);
      Tensor score = score_sentence(params, config.conv, batch.row_chars(r), Mode::kInfer,
                                    nullptr, nullptr);
      losses[r] = nll_loss(score, params.transitions, batch.row_labels(r));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  // Row-ordered sum so the total never depends on the thread count.
  double total = 0.0;
  for (double l : losses) total += l;
  return total;
}

std::string segment_line(const ModelParams& params, const ConvConfig& conv,
                         const Vocabulary& vocab, const std::string& line) {
  const std::u32string decoded = decode_utf8(line);
  Sentence sentence;
  for (char32_t c : decoded) {
    if (!is_separator(c)) sentence.chars.push_back(c);
  }
  if (sentence.chars.empty()) return "";
  Tensor score = score_sentence(params, conv, vocab.to_indices(sentence), Mode::kInfer,
                                nullptr, nullptr);
  LabelSeq labels = viterbi(score, params.transitions);
  const std::vector<std::string> words = segment_from_labels(sentence, labels);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::vector<std::string> segment_lines(const ModelParams& params, const ConvConfig& conv,
                                       const Vocabulary& vocab,
                                       const std::vector<std::string>& lines) {
  std::vector<std::string> out(lines.size());
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(lines.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = segment_line(params, conv, vocab,
                                                      lines[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

EvalReport evaluate_segmentation(const ModelParams& params, const ConvConfig& conv,
                                 const Vocabulary& vocab,
                                 const std::vector<std::string>& gold_lines) {
  return f1_score(gold_lines, segment_lines(params, conv, vocab, gold_lines));
}

namespace {

void ensure_writable_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) {
    throw ConfigError("checkpoint directory cannot be created: " + dir);
  }
  const fs::path probe = fs::path(dir) / ".write-probe";
  std::ofstream out(probe, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("checkpoint directory is not writable: " + dir);
  }
  out.close();
  fs::remove(probe, ec);
}

}  // namespace

TrainOutcome train(const TrainConfig& config, std::ostream& epoch_stream,
                   std::ostream* info_stream, const EpochCallback& callback) {
  if (config.train_path.empty()) {
    throw ConfigError("train: no training corpus configured");
  }
  if (!config.checkpoint_dir.empty()) {
    ensure_writable_dir(config.checkpoint_dir);
  }

  Dataset train_data = load_dataset(config.train_path);
  Dataset dev_data;
  if (!config.dev_path.empty()) {
    dev_data = load_dataset(config.dev_path);
  } else {
    // Hold out the tail of the training corpus as the development set.
    const std::size_t holdout = config.dev_holdout;
    if (holdout == 0) {
      throw ConfigError("train: neither a dev corpus nor a dev_holdout is configured");
    }
    if (train_data.examples.size() <= holdout) {
      throw ConfigError("train: corpus has " + std::to_string(train_data.examples.size()) +
                        " sentences, not enough to hold out " + std::to_string(holdout) +
                        " for dev");
    }
    const std::size_t split = train_data.examples.size() - holdout;
    dev_data.lines.assign(train_data.lines.begin() + split, train_data.lines.end());
    dev_data.examples.assign(train_data.examples.begin() + split, train_data.examples.end());
    train_data.lines.resize(split);
    train_data.examples.resize(split);
  }
  if (train_data.examples.empty()) {
    throw DataError("train: training corpus is empty: " + config.train_path);
  }
  if (dev_data.examples.empty()) {
    throw DataError("train: development corpus is empty");
  }

  const Vocabulary vocab = Vocabulary::build(train_data.examples);

  Rng init_rng(derive_seed(config.seed, SeedStream::kInit));
  ModelParams params = init_params(config.conv, vocab.size(), init_rng);

  TrainOutcome outcome;
  if (!config.embeddings_path.empty()) {
    Rng fill_rng(derive_seed(config.seed, SeedStream::kEmbeddingFill));
    EmbeddingLoad loaded = load_embeddings(config.embeddings_path, vocab,
                                           config.conv.embed_dim, fill_rng);
    params.embeddings = std::move(loaded.table);
    outcome.embedding_hit_rate = loaded.hit_rate;
    if (info_stream) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "embeddings: %zu/%zu vocabulary hits (rate %.4f)",
                    loaded.hits, vocab.size() - Vocabulary::kReserved, loaded.hit_rate);
      *info_stream << buf << "\n";
    }
  }

  AdamState adam;
  {
    std::vector<const Tensor*> tensors;
    for (const auto& [name, t] : named_tensors(static_cast<const ModelParams&>(params))) {
      tensors.push_back(t);
    }
    adam = AdamState::init_like(tensors);
  }

  const auto snapshot = [&](std::uint32_t epoch, bool has_best, double best_f) {
    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.vocab = vocab;
    ckpt.params = params;
    ckpt.adam = adam;
    ckpt.epoch = epoch;
    ckpt.has_best_dev_f = has_best;
    ckpt.best_dev_f = best_f;
    return ckpt;
  };

  bool has_best = false;
  double best_f = 0.0;
  std::size_t epochs_without_improvement = 0;
  outcome.best = snapshot(0, false, 0.0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, SeedStream::kShuffle, epoch));
    const std::vector<Batch> batches = make_batches(train_data.examples, vocab,
                                                    config.batch_size, shuffle_rng,
                                                    config.sort_by_length);
    StopWatch watch;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const double batch_sum = train_batch(batches[b], config, epoch, params, adam);
      if (!std::isfinite(batch_sum)) {
        throw TrainingError("train: non-finite loss in epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(b + 1) + " of " +
                            std::to_string(batches.size()));
      }
      loss_sum += batch_sum;
    }
    const double elapsed = watch.seconds();

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(train_data.examples.size());
    log.sentences_per_second = static_cast<double>(train_data.examples.size()) /
                               (elapsed > 0.0 ? elapsed : 1e-9);
    log.dev = evaluate_segmentation(params, config.conv, vocab, dev_data.lines);
    log.improved = !has_best || log.dev.f1 > best_f;

    if (log.improved) {
      has_best = true;
      best_f = log.dev.f1;
      epochs_without_improvement = 0;
      outcome.best = snapshot(static_cast<std::uint32_t>(epoch), true, best_f);
      if (!config.checkpoint_dir.empty()) {
        save_checkpoint(outcome.best,
                        (std::filesystem::path(config.checkpoint_dir) / kBestCheckpointName)
                            .string());
      }
    } else {
      ++epochs_without_improvement;
    }

    outcome.last = snapshot(static_cast<std::uint32_t>(epoch), has_best, best_f);
    if (!config.checkpoint_dir.empty()) {
      save_checkpoint(outcome.last,
                      (std::filesystem::path(config.checkpoint_dir) / kLastCheckpointName)
                          .string());
    }

    epoch_stream << format_epoch_line(log) << "\n";
    epoch_stream.flush();
    outcome.log.push_back(log);

    if (callback && !callback(log)) {
      outcome.stopped_early = true;
      if (info_stream) *info_stream << "stopping: callback requested\n";
      break;
    }
    if (config.patience > 0 && epochs_without_improvement >= config.patience) {
      outcome.stopped_early = true;
      if (info_stream) {
        *info_stream << "stopping: no dev improvement for " << config.patience
                     << " epochs\n";
      }
      break;
    }
  }

  if (config.epochs == 0) {
    outcome.last = snapshot(0, false, 0.0);
  }
  return outcome;
}

}  // namespace tcnseg

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tcnseg/checkpoint.hpp"
#include "tcnseg/config.hpp"
#include "tcnseg/corpus.hpp"
#include "tcnseg/eval.hpp"
#include "tcnseg/model.hpp"
#include "tcnseg/optim.hpp"

namespace tcnseg {

// A segmented corpus with its raw lines kept alongside the parsed examples
// (aligned; lines that contain no words are dropped from both).
struct Dataset {
  std::vector<std::string> lines;
  std::vector<Example> examples;
};

Dataset parse_dataset(std::string_view text);
Dataset load_dataset(const std::string& path);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  EvalReport dev;
  double sentences_per_second = 0.0;
  bool improved = false;
};

// "epoch<TAB>loss<TAB>P<TAB>R<TAB>F<TAB>sentences/s"
std::string format_epoch_line(const EpochLog& log);

// Return false to stop training after the current epoch.
using EpochCallback = std::function<bool(const EpochLog&)>;

struct TrainOutcome {
  Checkpoint last;
  Checkpoint best;
  std::vector<EpochLog> log;
  bool stopped_early = false;
  double embedding_hit_rate = -1.0;  // -1 when no pretrained table was loaded
};

// One optimizer update from one padded batch; positions at or beyond the row
// length never enter the loss. `epoch` feeds the per-sentence dropout streams.
// Returns the summed loss over the rows.
double train_batch(const Batch& batch, const TrainConfig& config, std::size_t epoch,
                   ModelParams& params, AdamState& adam);

// Summed inference-mode loss of a batch, without touching any state.
double batch_loss(const Batch& batch, const TrainConfig& config, const ModelParams& params);

// Viterbi segmentation of one raw line: separators are dropped, characters
// OOV to the vocabulary map to UNK, the output joins words with single
// spaces. Empty lines pass through empty.
std::string segment_line(const ModelParams& params, const ConvConfig& conv,
                         const Vocabulary& vocab, const std::string& line);
std::vector<std::string> segment_lines(const ModelParams& params, const ConvConfig& conv,
                                       const Vocabulary& vocab,
                                       const std::vector<std::string>& lines);

EvalReport evaluate_segmentation(const ModelParams& params, const ConvConfig& conv,
                                 const Vocabulary& vocab,
                                 const std::vector<std::string>& gold_lines);

// Full training run: corpus loading, optional pretrained embeddings,
// per-epoch dev F1 with early stopping, and "last"/"best" checkpoints when
// config.checkpoint_dir is set. Epoch lines go to epoch_stream; informational
// notes (embedding hit rate, stop reason) go to info_stream when non-null.
TrainOutcome train(const TrainConfig& config, std::ostream& epoch_stream,
                   std::ostream* info_stream = nullptr,
                   const EpochCallback& callback = nullptr);

inline constexpr const char* kLastCheckpointName = "last.ckpt";
inline constexpr const char* kBestCheckpointName = "best.ckpt";

}  // namespace tcnseg

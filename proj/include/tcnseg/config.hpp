#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tcnseg/layers.hpp"

namespace tcnseg {

// Every knob of a training run. Defaults reproduce the reference
// hyper-parameter set (n=100, fs=100, ly=4, s=3, dp=0.3, lr=0.001, ep=100,
// bs=32); an empty config file therefore trains the stock model.
struct TrainConfig {
  ConvConfig conv;
  double lr = 0.001;
  std::size_t epochs = 100;       // ep
  std::size_t batch_size = 32;    // bs
  std::uint64_t seed = 1;
  std::size_t patience = 10;      // early-stopping patience; 0 disables
  std::size_t dev_holdout = 2000; // tail sentences held out when dev is unset
  bool freeze_embeddings = false;
  bool sort_by_length = false;
  std::string train_path;
  std::string dev_path;
  std::string embeddings_path;
  std::string checkpoint_dir;
};

// Plain-text "key = value" lines; '#' starts a comment; unknown keys are
// rejected. `source` names the file in error messages.
TrainConfig parse_config(std::string_view text, const std::string& source = "config");
TrainConfig load_config(const std::string& path);

// Canonical serialization: fixed key order, round-trippable doubles. Parsing
// the output and serializing again reproduces the bytes exactly.
std::string serialize_config(const TrainConfig& config);

const char* scheme_name(Scheme scheme);

}  // namespace tcnseg

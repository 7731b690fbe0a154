#pragma once

#include <cstdint>
#include <string>

#include "tcnseg/config.hpp"
#include "tcnseg/corpus.hpp"
#include "tcnseg/model.hpp"
#include "tcnseg/optim.hpp"

namespace tcnseg {

inline constexpr char kCheckpointMagic[6] = {'T', 'C', 'N', 'C', 'R', 'F'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

// Serialized training state. The binary layout is fixed little-endian:
// magic "TCNCRF", one version byte, a length-prefixed UTF-8 config block, the
// vocabulary block, per-tensor records (name, rank, extents, row-major f64
// payload) covering the model parameters followed by the Adam moments, and a
// small footer (Adam step, epoch, best dev F). save(load(x)) is byte-exact.
struct Checkpoint {
  TrainConfig config;
  Vocabulary vocab;
  ModelParams params;
  AdamState adam;
  std::uint32_t epoch = 0;
  bool has_best_dev_f = false;
  double best_dev_f = 0.0;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// In-memory forms, used by tests and by the file functions.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);

}  // namespace tcnseg

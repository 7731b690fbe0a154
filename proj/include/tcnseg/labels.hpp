#pragma once

#include <cstdint>
#include <vector>

namespace tcnseg {

// BMES tag set with fixed indices; the decoder emits one score per label.
inline constexpr std::size_t kNumLabels = 4;

enum class Label : std::uint8_t {
  kBegin = 0,
  kMiddle = 1,
  kEnd = 2,
  kSingle = 3,
};

using LabelSeq = std::vector<Label>;

inline char label_letter(Label l) {
  switch (l) {
    case Label::kBegin: return 'B';
    case Label::kMiddle: return 'M';
    case Label::kEnd: return 'E';
    case Label::kSingle: return 'S';
  }
  return '?';
}

inline std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }

}  // namespace tcnseg

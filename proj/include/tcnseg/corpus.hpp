#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tcnseg/labels.hpp"
#include "tcnseg/rng.hpp"
#include "tcnseg/tensor.hpp"

namespace tcnseg {

// One sentence as Unicode scalar values; never contains separators.
struct Sentence {
  std::u32string chars;
};

using Example = std::pair<Sentence, LabelSeq>;

// Word separators inside a line: space, tab, CR, and the full-width space.
bool is_separator(char32_t c);

// Strict UTF-8 decoding; rejects overlong forms, surrogates and truncation.
// line_no is reported in the error message (0 = unknown).
std::u32string decode_utf8(std::string_view bytes, std::size_t line_no = 0);
std::string encode_utf8(std::u32string_view chars);

// BMES labels for one word: 1 -> S; 2 -> B E; k -> B M^(k-2) E.
LabelSeq word_labels(std::size_t length);

// Whitespace-segmented corpus, one sentence per line, empty lines skipped.
std::vector<Example> parse_corpus(std::string_view text);
std::vector<Example> load_corpus(const std::string& path);

// Character-to-index map with reserved UNK (0) and PAD (1) slots. Indices are
// assigned by first occurrence so the same corpus always yields the same map.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kPad = 1;
  static constexpr std::size_t kReserved = 2;

  Vocabulary() = default;
  static Vocabulary build(const std::vector<Example>& data);

  std::size_t add(char32_t c);
  std::size_t lookup(char32_t c) const;  // kUnk when absent
  bool contains(char32_t c) const;
  std::size_t size() const { return chars_.size() + kReserved; }
  // Characters in index order, starting at index kReserved.
  const std::u32string& entries() const { return chars_; }

  std::vector<std::size_t> to_indices(const Sentence& sentence) const;

 private:
  std::unordered_map<char32_t, std::size_t> index_;
  std::u32string chars_;
};

struct EmbeddingLoad {
  Tensor table;  // [V x dim], rows aligned with Vocabulary indices
  std::size_t hits = 0;
  double hit_rate = 0.0;
};

// Text vector format: header "V n", then one "token v1 .. vn" row per line.
// Vocabulary misses (including UNK and PAD) are filled uniform(-0.1, 0.1).
EmbeddingLoad load_embeddings(const std::string& path, const Vocabulary& vocab,
                              std::size_t dim, Rng& rng);
EmbeddingLoad parse_embeddings(std::string_view text, const Vocabulary& vocab,
                               std::size_t dim, Rng& rng);

// Fixed-width batch: rows x max_len character indices padded with PAD.
// Positions at or beyond lengths[i] are masked out of loss and evaluation.
struct Batch {
  std::size_t rows = 0;
  std::size_t max_len = 0;
  std::vector<std::size_t> char_indices;  // rows * max_len
  std::vector<Label> gold;                // rows * max_len
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> origin;        // dataset positions, for seeding

  std::vector<std::size_t> row_chars(std::size_t i) const;
  LabelSeq row_labels(std::size_t i) const;
};

// Deterministic shuffle from `rng`; with sort_by_length, sentences are length
// bucketed before batching and the batch order reshuffled. Every sentence
// appears exactly once.
std::vector<Batch> make_batches(const std::vector<Example>& data, const Vocabulary& vocab,
                                std::size_t batch_size, Rng& rng, bool sort_by_length);

// Deterministic repair reading of a (possibly ill-formed) label sequence:
// B and S open a word; E and S close it; the concatenation of the output
// always equals the input characters.
std::vector<std::string> segment_from_labels(const Sentence& sentence, const LabelSeq& labels);

}  // namespace tcnseg

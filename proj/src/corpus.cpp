#include "tcnseg/corpus.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tcnseg/error.hpp"

namespace tcnseg {

bool is_separator(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\r' || c == U'\x3000';
}

std::u32string decode_utf8(std::string_view bytes, std::size_t line_no) {
  const auto fail = [line_no](std::size_t offset, const char* what) {
    std::string where = line_no ? "line " + std::to_string(line_no) + ": " : "";
    throw DataError(where + "malformed UTF-8 (" + what + ") at byte offset " +
                    std::to_string(offset));
  };
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const unsigned char b0 = static_cast<unsigned char>(bytes[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      fail(i, "invalid lead byte");
    }
    if (i + len > bytes.size()) fail(i, "truncated sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80) fail(i, "invalid continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) {
      fail(i, "overlong encoding");
    }
    if (cp >= 0xD800 && cp <= 0xDFFF) fail(i, "surrogate code point");
    if (cp > 0x10FFFF) fail(i, "code point out of range");
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view chars) {
  std::string out;
  out.reserve(chars.size() * 3);
  for (char32_t cp : chars) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

LabelSeq word_labels(std::size_t length) {
  LabelSeq labels;
  labels.reserve(length);
  if (length == 1) {
    labels.push_back(Label::kSingle);
  } else if (length >= 2) {
    labels.push_back(Label::kBegin);
    for (std::size_t i = 1; i + 1 < length; ++i) labels.push_back(Label::kMiddle);
    labels.push_back(Label::kEnd);
  }
  return labels;
}

std::vector<Example> parse_corpus(std::string_view text) {
  std::vector<Example> data;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    if (raw.empty() && start > text.size()) break;

    std::u32string line = decode_utf8(raw, line_no);
    Sentence sentence;
    LabelSeq labels;
    std::size_t word_start = 0;
    const auto flush_word = [&](std::size_t word_end) {
      const std::size_t len = word_end - word_start;
      if (len == 0) return;
      sentence.chars.append(line, word_start, len);
      LabelSeq word = word_labels(len);
      labels.insert(labels.end(), word.begin(), word.end());
    };
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (is_separator(line[i])) {
        flush_word(i);
        word_start = i + 1;
      }
    }
    flush_word(line.size());
    if (!sentence.chars.empty()) {
      data.emplace_back(std::move(sentence), std::move(labels));
    }
  }
  return data;
}

std::vector<Example> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open corpus file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str());
}

Vocabulary Vocabulary::build(const std::vector<Example>& data) {
  Vocabulary vocab;
  for (const auto& [sentence, labels] : data) {
    for (char32_t c : sentence.chars) vocab.add(c);
  }
  return vocab;
}

std::size_t Vocabulary::add(char32_t c) {
  auto [it, inserted] = index_.try_emplace(c, chars_.size() + kReserved);
  if (inserted) chars_.push_back(c);
  return it->second;
}

std::size_t Vocabulary::lookup(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(char32_t c) const { return index_.count(c) > 0; }

std::vector<std::size_t> Vocabulary::to_indices(const Sentence& sentence) const {
  std::vector<std::size_t> out;
  out.reserve(sentence.chars.size());
  for (char32_t c : sentence.chars) out.push_back(lookup(c));
  return out;
}

EmbeddingLoad parse_embeddings(std::string_view text, const Vocabulary& vocab,
                               std::size_t dim, Rng& rng) {
  EmbeddingLoad out;
  out.table = Tensor({vocab.size(), dim});
  // Random fill first so the draw count never depends on the file contents.
  for (std::size_t i = 0; i < out.table.size(); ++i) {
    out.table[i] = rng.next_uniform(-0.1, 0.1);
  }

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw DataError("embeddings: empty file");
  }
  ++line_no;
  std::size_t file_count = 0;
  std::size_t file_dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> file_count >> file_dim)) {
      throw DataError("embeddings: line 1: expected header \"<count> <dim>\"");
    }
    std::string extra;
    if (header >> extra) {
      throw DataError("embeddings: line 1: expected header \"<count> <dim>\"");
    }
  }
  if (file_dim != dim) {
    throw ConfigError("embeddings: file dimension " + std::to_string(file_dim) +
                      " does not match configured dimension " + std::to_string(dim));
  }

  std::vector<bool> seen(vocab.size(), false);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t token_end = line.find_first_of(" \t");
    if (token_end == std::string::npos) {
      throw DataError("embeddings: line " + std::to_string(line_no) + ": missing values");
    }
    const std::string token = line.substr(0, token_end);
    const char* cursor = line.c_str() + token_end;
    std::vector<double> values(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      char* next = nullptr;
      values[j] = std::strtod(cursor, &next);
      if (next == cursor) {
        throw DataError("embeddings: line " + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, found " + std::to_string(j));
      }
      cursor = next;
    }
    while (*cursor == ' ' || *cursor == '\t') ++cursor;
    if (*cursor != '\0') {
      throw DataError("embeddings: line " + std::to_string(line_no) +
                      ": trailing garbage after " + std::to_string(dim) + " values");
    }

    const std::u32string decoded = decode_utf8(token, line_no);
    if (decoded.size() != 1 || !vocab.contains(decoded[0])) continue;
    const std::size_t row = vocab.lookup(decoded[0]);
    for (std::size_t j = 0; j < dim; ++j) out.table(row, j) = values[j];
    if (!seen[row]) {
      seen[row] = true;
      ++out.hits;
    }
  }

  const std::size_t real_entries = vocab.size() - Vocabulary::kReserved;
  out.hit_rate = real_entries ? static_cast<double>(out.hits) / real_entries : 0.0;
  return out;
}

EmbeddingLoad load_embeddings(const std::string& path, const Vocabulary& vocab,
                              std::size_t dim, Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open embeddings file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_embeddings(buffer.str(), vocab, dim, rng);
}

std::vector<std::size_t> Batch::row_chars(std::size_t i) const {
  return std::vector<std::size_t>(char_indices.begin() + i * max_len,
                                  char_indices.begin() + i * max_len + lengths[i]);
}

LabelSeq Batch::row_labels(std::size_t i) const {
  return LabelSeq(gold.begin() + i * max_len, gold.begin() + i * max_len + lengths[i]);
}

std::vector<Batch> make_batches(const std::vector<Example>& data, const Vocabulary& vocab,
                                std::size_t batch_size, Rng& rng, bool sort_by_length) {
  if (data.empty()) {
    throw ConfigError("make_batches: empty dataset");
  }
  if (batch_size == 0) {
    throw ConfigError("make_batches: batch size must be >= 1");
  }
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  if (sort_by_length) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data[a].first.chars.size() < data[b].first.chars.size();
    });
  }

  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, order.size());
    Batch batch;
    batch.rows = end - begin;
    for (std::size_t i = begin; i < end; ++i) {
      batch.max_len = std::max(batch.max_len, data[order[i]].first.chars.size());
    }
    batch.char_indices.assign(batch.rows * batch.max_len, Vocabulary::kPad);
    batch.gold.assign(batch.rows * batch.max_len, Label::kBegin);
    batch.lengths.resize(batch.rows);
    batch.origin.resize(batch.rows);
    for (std::size_t r = 0; r < batch.rows; ++r) {
      const std::size_t src = order[begin + r];
      const auto& [sentence, labels] = data[src];
      batch.lengths[r] = sentence.chars.size();
      batch.origin[r] = src;
      for (std::size_t t = 0; t < sentence.chars.size(); ++t) {
        batch.char_indices[r * batch.max_len + t] = vocab.lookup(sentence.chars[t]);
        batch.gold[r * batch.max_len + t] = labels[t];
      }
    }
    batches.push_back(std::move(batch));
  }
  if (sort_by_length) rng.shuffle(batches);
  return batches;
}

std::vector<std::string> segment_from_labels(const Sentence& sentence, const LabelSeq& labels) {
  if (sentence.chars.size() != labels.size()) {
    throw DomainError("segment_from_labels: " + std::to_string(sentence.chars.size()) +
                      " characters vs " + std::to_string(labels.size()) + " labels");
  }
  std::vector<std::string> words;
  std::u32string current;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const Label l = labels[t];
    if ((l == Label::kBegin || l == Label::kSingle) && !current.empty()) {
      words.push_back(encode_utf8(current));
      current.clear();
    }
    current.push_back(sentence.chars[t]);
    if (l == Label::kEnd || l == Label::kSingle) {
      words.push_back(encode_utf8(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(encode_utf8(current));
  return words;
}

}  // namespace tcnseg

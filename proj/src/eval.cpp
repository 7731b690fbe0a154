#include "tcnseg/eval.hpp"

#include <cstdio>

#include "tcnseg/corpus.hpp"
#include "tcnseg/error.hpp"

namespace tcnseg {

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
  bool operator==(const Span&) const = default;
};

// Words of one segmented line as character-offset spans over the
// whitespace-stripped stream; also returns that stream for the mismatch check.
std::pair<std::vector<Span>, std::u32string> line_spans(const std::string& line,
                                                        std::size_t line_no) {
  std::u32string decoded = decode_utf8(line, line_no);
  std::vector<Span> spans;
  std::u32string stream;
  std::size_t word_begin = 0;
  for (char32_t c : decoded) {
    if (is_separator(c)) {
      if (stream.size() > word_begin) {
        spans.push_back({word_begin, stream.size()});
        word_begin = stream.size();
      }
    } else {
      stream.push_back(c);
    }
  }
  if (stream.size() > word_begin) spans.push_back({word_begin, stream.size()});
  return {std::move(spans), std::move(stream)};
}

}  // namespace

EvalReport f1_score(const std::vector<std::string>& gold_lines,
                    const std::vector<std::string>& predicted_lines) {
  if (gold_lines.size() != predicted_lines.size()) {
    throw DataError("f1_score: " + std::to_string(gold_lines.size()) + " gold lines vs " +
                    std::to_string(predicted_lines.size()) + " predicted lines");
  }
  EvalReport report;
  for (std::size_t i = 0; i < gold_lines.size(); ++i) {
    auto [gold_spans, gold_stream] = line_spans(gold_lines[i], i + 1);
    auto [pred_spans, pred_stream] = line_spans(predicted_lines[i], i + 1);
    if (gold_stream != pred_stream) {
      throw DataError("f1_score: line " + std::to_string(i + 1) +
                      ": character streams differ between gold and prediction");
    }
    report.gold_words += gold_spans.size();
    report.predicted_words += pred_spans.size();
    // Both span lists partition the same stream in order; merge-walk them.
    std::size_t g = 0, p = 0;
    while (g < gold_spans.size() && p < pred_spans.size()) {
      if (gold_spans[g] == pred_spans[p]) {
        ++report.correct_words;
        ++g;
        ++p;
      } else if (gold_spans[g].end <= pred_spans[p].end) {
        ++g;
      } else {
        ++p;
      }
    }
  }
  if (report.predicted_words > 0) {
    report.precision = static_cast<double>(report.correct_words) / report.predicted_words;
  }
  if (report.gold_words > 0) {
    report.recall = static_cast<double>(report.correct_words) / report.gold_words;
  }
  if (report.precision + report.recall > 0.0) {
    report.f1 = 2.0 * report.precision * report.recall / (report.precision + report.recall);
  }
  return report;
}

double sentences_per_second(std::size_t sentences, double elapsed_seconds) {
  if (elapsed_seconds <= 0.0) {
    throw MeasurementError("sentences_per_second: non-positive elapsed time");
  }
  return static_cast<double>(sentences) / elapsed_seconds;
}

std::string machine_line(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "P=%.6f R=%.6f F=%.6f gold=%zu pred=%zu correct=%zu",
                r.precision, r.recall, r.f1, r.gold_words, r.predicted_words,
                r.correct_words);
  return buf;
}

std::string human_summary(const EvalReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "precision %.4f, recall %.4f, F1 %.4f (%zu gold, %zu predicted, %zu correct)",
                r.precision, r.recall, r.f1, r.gold_words, r.predicted_words,
                r.correct_words);
  return buf;
}

}  // namespace tcnseg

#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

namespace tcnseg {

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_words = 0;
  std::size_t predicted_words = 0;
  std::size_t correct_words = 0;
  double sentences_per_second = 0.0;
};

// Word-level span matching on character offsets. Both inputs are segmented
// lines (words separated by whitespace); the whitespace-stripped character
// streams must agree line by line.
EvalReport f1_score(const std::vector<std::string>& gold_lines,
                    const std::vector<std::string>& predicted_lines);

// sentences / elapsed; throws MeasurementError when elapsed <= 0.
double sentences_per_second(std::size_t sentences, double elapsed_seconds);

std::string machine_line(const EvalReport& report);
std::string human_summary(const EvalReport& report);

class StopWatch {
 public:
  StopWatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace tcnseg

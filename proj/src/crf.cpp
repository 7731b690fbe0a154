#include "tcnseg/crf.hpp"

#include <cmath>
#include <string>

#include "tcnseg/error.hpp"

namespace tcnseg {

namespace {

std::size_t checked_length(const Tensor& score) {
  if (score.rank() != 2 || score.extent(1) != kNumLabels) {
    throw DimensionError("crf: score must be [m x 4], got " + shape_string(score));
  }
  if (score.extent(0) == 0) {
    throw DomainError("crf: empty sequence");
  }
  return score.extent(0);
}

void check_gold(const LabelSeq& y, std::size_t m) {
  if (y.size() != m) {
    throw DomainError("crf: label sequence length " + std::to_string(y.size()) +
                      " does not match score length " + std::to_string(m));
  }
}

}  // namespace

Tensor forward_alpha(const Tensor& score, const Tensor& transitions) {
  const std::size_t m = checked_length(score);
  Tensor alpha({m, kNumLabels});
  for (std::size_t l = 0; l < kNumLabels; ++l) alpha(0, l) = score(0, l);
  double terms[kNumLabels];
  for (std::size_t t = 1; t < m; ++t) {
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      for (std::size_t p = 0; p < kNumLabels; ++p) {
        terms[p] = alpha(t - 1, p) + transitions(p, l);
      }
      alpha(t, l) = score(t, l) + logsumexp(terms, kNumLabels);
    }
  }
  return alpha;
}

double log_partition(const Tensor& alpha) {
  return logsumexp(alpha.row(alpha.extent(0) - 1), kNumLabels);
}

double path_score(const Tensor& score, const Tensor& transitions, const LabelSeq& y) {
  const std::size_t m = checked_length(score);
  check_gold(y, m);
  double total = score(0, label_index(y[0]));
  for (std::size_t t = 1; t < m; ++t) {
    total += score(t, label_index(y[t])) + transitions(label_index(y[t - 1]), label_index(y[t]));
  }
  return total;
}

double nll_loss(const Tensor& score, const Tensor& transitions, const LabelSeq& y) {
  Tensor alpha = forward_alpha(score, transitions);
  return log_partition(alpha) - path_score(score, transitions, y);
}

LossGrads loss_backward(const Tensor& score, const Tensor& transitions, const LabelSeq& y) {
  const std::size_t m = checked_length(score);
  check_gold(y, m);
  Tensor alpha = forward_alpha(score, transitions);
  const double log_z = log_partition(alpha);

  LossGrads out;
  out.loss = log_z - path_score(score, transitions, y);
  out.grad_score = Tensor({m, kNumLabels});
  out.grad_transitions = Tensor({kNumLabels, kNumLabels});

  // d logZ / d alpha_m = softmax(alpha_m); then walk the recursion backwards.
  double grad_alpha[kNumLabels];
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    grad_alpha[l] = std::exp(alpha(m - 1, l) - log_z);
  }
  for (std::size_t t = m; t-- > 1;) {
    double next_grad[kNumLabels] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      out.grad_score(t, l) += grad_alpha[l];
      // alpha[t][l] - score[t][l] is the logsumexp over predecessors, so the
      // exponent below is never positive.
      const double lse = alpha(t, l) - score(t, l);
      for (std::size_t p = 0; p < kNumLabels; ++p) {
        const double w = grad_alpha[l] * std::exp(alpha(t - 1, p) + transitions(p, l) - lse);
        next_grad[p] += w;
        out.grad_transitions(p, l) += w;
      }
    }
    for (std::size_t p = 0; p < kNumLabels; ++p) grad_alpha[p] = next_grad[p];
  }
  for (std::size_t l = 0; l < kNumLabels; ++l) out.grad_score(0, l) += grad_alpha[l];

  // Subtract the observed path.
  out.grad_score(0, label_index(y[0])) -= 1.0;
  for (std::size_t t = 1; t < m; ++t) {
    out.grad_score(t, label_index(y[t])) -= 1.0;
    out.grad_transitions(label_index(y[t - 1]), label_index(y[t])) -= 1.0;
  }
  return out;
}

LabelSeq viterbi(const Tensor& score, const Tensor& transitions) {
  const std::size_t m = checked_length(score);
  Tensor best({m, kNumLabels});
  std::vector<std::uint8_t> backptr(m * kNumLabels, 0);
  for (std::size_t l = 0; l < kNumLabels; ++l) best(0, l) = score(0, l);
  for (std::size_t t = 1; t < m; ++t) {
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      std::size_t arg = 0;
      double top = best(t - 1, 0) + transitions(0, c);
      for (std::size_t k = 1; k < kNumLabels; ++k) {
        const double v = best(t - 1, k) + transitions(k, c);
        if (v > top) {
          top = v;
          arg = k;
        }
      }
      best(t, c) = score(t, c) + top;
      backptr[t * kNumLabels + c] = static_cast<std::uint8_t>(arg);
    }
  }
  std::size_t w = 0;
  for (std::size_t l = 1; l < kNumLabels; ++l) {
    if (best(m - 1, l) > best(m - 1, w)) w = l;
  }
  LabelSeq path(m);
  path[m - 1] = static_cast<Label>(w);
  for (std::size_t t = m - 1; t > 0; --t) {
    w = backptr[t * kNumLabels + w];
    path[t - 1] = static_cast<Label>(w);
  }
  return path;
}

EnumerationResult enumerate_paths(const Tensor& score, const Tensor& transitions) {
  const std::size_t m = checked_length(score);
  if (m > 10) {
    throw DomainError("enumerate_paths: refusing m = " + std::to_string(m) +
                      " (4^m sequences)");
  }

  std::vector<std::size_t> labels(m, 0);
  const auto advance = [&]() {
    for (std::size_t t = m; t-- > 0;) {
      if (++labels[t] < kNumLabels) return true;
      labels[t] = 0;
    }
    return false;
  };
  const auto current_score = [&]() {
    double s = score(0, labels[0]);
    for (std::size_t t = 1; t < m; ++t) {
      s += score(t, labels[t]) + transitions(labels[t - 1], labels[t]);
    }
    return s;
  };
  // The decoder breaks ties by label index at position m, then m-1, and so on
  // down the backpointers; prefer the same sequence on equal scores.
  const auto decoder_prefers = [&](const LabelSeq& incumbent) {
    for (std::size_t t = m; t-- > 0;) {
      const std::size_t a = labels[t];
      const std::size_t b = label_index(incumbent[t]);
      if (a != b) return a < b;
    }
    return false;
  };

  EnumerationResult out;
  out.best_path.assign(m, Label::kBegin);
  out.best_score = current_score();
  double max_score = out.best_score;
  do {
    const double s = current_score();
    if (s > max_score) max_score = s;
    if (s > out.best_score || (s == out.best_score && decoder_prefers(out.best_path))) {
      out.best_score = s;
      for (std::size_t t = 0; t < m; ++t) out.best_path[t] = static_cast<Label>(labels[t]);
    }
  } while (advance());

  labels.assign(m, 0);
  double sum_exp = 0.0;
  do {
    sum_exp += std::exp(current_score() - max_score);
  } while (advance());
  out.log_partition = max_score + std::log(sum_exp);

  out.marginals = Tensor({m, kNumLabels});
  labels.assign(m, 0);
  do {
    const double p = std::exp(current_score() - out.log_partition);
    for (std::size_t t = 0; t < m; ++t) out.marginals(t, labels[t]) += p;
  } while (advance());
  return out;
}

}  // namespace tcnseg

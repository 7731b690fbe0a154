#pragma once

#include "tcnseg/labels.hpp"
#include "tcnseg/tensor.hpp"

namespace tcnseg {

// Linear-chain CRF over BMES labels. `score` is the decoder output [m x 4];
// `transitions` is the trained matrix M [4 x 4] whose entry (r, c) weighs
// moving from label r to label c. No transition feeds position 1.

// Forward recursion: alpha[0] = score[0];
// alpha[t][l] = score[t][l] + logsumexp_l'(alpha[t-1][l'] + M[l'][l]).
Tensor forward_alpha(const Tensor& score, const Tensor& transitions);

// log of the partition function: logsumexp over the last alpha row.
double log_partition(const Tensor& alpha);

// Unnormalized path score: sum_t score[t][y_t] + sum_{t>=2} M[y_{t-1}][y_t].
double path_score(const Tensor& score, const Tensor& transitions, const LabelSeq& y);

// Negative log-likelihood: logZ - path_score(y). Non-negative.
double nll_loss(const Tensor& score, const Tensor& transitions, const LabelSeq& y);

struct LossGrads {
  double loss = 0.0;
  Tensor grad_score;        // posterior marginal minus gold one-hot, [m x 4]
  Tensor grad_transitions;  // pairwise marginal minus observed count, [4 x 4]
};

// Reverse-mode differentiation through the alpha recursion.
LossGrads loss_backward(const Tensor& score, const Tensor& transitions, const LabelSeq& y);

// Max-product decoding with backpointers; argmax ties go to the lowest label
// index, both in the backpointers and in the final column.
LabelSeq viterbi(const Tensor& score, const Tensor& transitions);

// Exhaustive enumeration over all 4^m label sequences; the independent oracle
// for the recursion and the decoder. Refuses m > 10.
struct EnumerationResult {
  double log_partition = 0.0;
  double best_score = 0.0;
  LabelSeq best_path;
  Tensor marginals;  // [m x 4]
};

EnumerationResult enumerate_paths(const Tensor& score, const Tensor& transitions);

}  // namespace tcnseg

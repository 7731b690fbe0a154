#pragma once

#include <stdexcept>
#include <string>

namespace tcnseg {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape disagreement (matmul operands, elementwise mismatch, ...).
struct DimensionError : Error {
  using Error::Error;
};

// Invalid argument domain (empty logsumexp, zero-length sequence, ...).
struct DomainError : Error {
  using Error::Error;
};

// Bad configuration value or file.
struct ConfigError : Error {
  using Error::Error;
};

// Corpus / embedding / evaluation input problems; messages carry line numbers.
struct DataError : Error {
  using Error::Error;
};

// Character index outside the embedding table.
struct VocabularyError : Error {
  using Error::Error;
};

// Checkpoint serialization problems; messages carry byte offsets.
struct CheckpointError : Error {
  using Error::Error;
};

// Non-finite gradients or losses during training.
struct TrainingError : Error {
  using Error::Error;
};

// Degenerate timing measurement.
struct MeasurementError : Error {
  using Error::Error;
};

}  // namespace tcnseg

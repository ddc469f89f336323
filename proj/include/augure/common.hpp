#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace augure {

// ---------------------------------------------------------------------------
// Errors. Every failure the pipeline reports is one of these; the CLI maps
// them onto per-stage exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line (JSONL files).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A sentence violates a data-model invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string sentence_id, const std::string& what);
  const std::string& sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

// External file shape does not match what the corpus implies.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MiningError : public Error {
 public:
  using Error::Error;
};

// No eligible negative in a minibatch; the caller rebuilds the batch.
class BatchConstructionError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

// A stage was asked to run without the artifacts of the stage before it.
class StageDependencyError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Numerics.
// ---------------------------------------------------------------------------

using Vector = std::vector<double>;

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
// Scales `v` to unit L2 norm; leaves an all-zero vector untouched.
void normalize_in_place(std::span<double> v);

// ---------------------------------------------------------------------------
// Randomness. All draws go through Rng so that results are identical across
// standard-library implementations: std::mt19937_64 is fully specified, the
// std distributions are not.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform_real();
  double normal();

  // k distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a64(std::string_view bytes);
// Deterministic child seed, used to give every sentence / epoch its own
// stream independent of iteration order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string join(std::span<const std::string> tokens, std::string_view sep);
std::vector<std::string> split_whitespace(std::string_view s);

}  // namespace augure

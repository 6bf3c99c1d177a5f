#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace semg {

// Row-major so that a row is one timestep (or one batch item) and slicing
// contiguous rows of a recording is a plain block.
template <typename Scalar>
using Tensor2 = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Tensor2<double>;
using RowVec = RowVector<double>;
using Index = Eigen::Index;

using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input text does not follow the documented layout (CSV header, magic bytes).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A cell could not be read as a number. `row` is 1-based, counting the header.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DesignError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by a forward op; the message names the layer.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const std::string& where) {
  if (!x.allFinite()) throw NumericError("non-finite value after " + where);
}

/// Independent stream for (seed, stream) so that epoch e or trial t can be
/// replayed without advancing anything else.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Worker cap from SEMG_THREADS, else hardware concurrency (at least 1).
int worker_count();

/// Runs fn(0..n-1) over up to worker_count() threads. Callers write results
/// into per-index slots; the first exception thrown is rethrown here.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace semg

#pragma once

#include "session/protocol.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace session {

/// A 2D body. Units are dimensionless simulation units.
struct Particle {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double mass = 1.0;

  friend bool operator==(const Particle&, const Particle&) = default;
};

namespace detail {
inline std::atomic<std::uint64_t> element_copies{0};
}

/// Total number of array elements copied by `Array` copy construction or
/// copy assignment, process-wide. Moves never count.
inline std::uint64_t element_copies() noexcept {
  return detail::element_copies.load(std::memory_order_relaxed);
}

/// Owning contiguous buffer whose copies are counted. Moving transfers the
/// heap buffer and leaves the source empty.
template <class T>
class Array {
public:
  Array() = default;
  explicit Array(std::size_t n, T fill = T{}) : values_(n, fill) {}
  Array(std::initializer_list<T> init) : values_(init) {}
  explicit Array(std::vector<T> values) noexcept : values_(std::move(values)) {}

  Array(const Array& other) : values_(other.values_) { count(values_.size()); }
  Array& operator=(const Array& other) {
    if (this != &other) {
      values_ = other.values_;
      count(values_.size());
    }
    return *this;
  }
  Array(Array&& other) noexcept : values_(std::move(other.values_)) { other.values_.clear(); }
  Array& operator=(Array&& other) noexcept {
    values_ = std::move(other.values_);
    other.values_.clear();
    return *this;
  }
  ~Array() = default;

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }
  std::span<T> span() noexcept { return values_; }
  std::span<const T> span() const noexcept { return values_; }

  /// Releases the underlying vector without copying.
  std::vector<T> take() && noexcept { return std::move(values_); }

  friend bool operator==(const Array& a, const Array& b) { return a.values_ == b.values_; }

private:
  static void count(std::size_t n) noexcept { detail::element_copies.fetch_add(n, std::memory_order_relaxed); }

  std::vector<T> values_;
};

using DoubleArray = Array<double>;
using ParticleArray = Array<Particle>;

/// Row-major matrix of doubles.
class DoubleMatrix {
public:
  DoubleMatrix() = default;
  DoubleMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DoubleMatrix(std::size_t rows, std::size_t cols, DoubleArray values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) throw std::invalid_argument("matrix value count != rows * cols");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) noexcept { return values_.span().subspan(r * cols_, cols_); }
  std::span<const double> row(std::size_t r) const noexcept { return values_.span().subspan(r * cols_, cols_); }
  const DoubleArray& values() const noexcept { return values_; }
  DoubleArray& values() noexcept { return values_; }

  friend bool operator==(const DoubleMatrix&, const DoubleMatrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  DoubleArray values_;
};

/// A value crossing a session. Alternative order matches MessageKind.
using Message = std::variant<std::int32_t, double, DoubleArray, DoubleMatrix, ParticleArray>;

inline MessageKind kind_of(const Message& m) noexcept {
  return static_cast<MessageKind>(m.index() + 1);
}

/// Explicit deep copy.
inline Message clone(const Message& m) { return m; }

} // namespace session

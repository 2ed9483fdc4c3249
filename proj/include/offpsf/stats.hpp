#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "offpsf/errors.hpp"

namespace offpsf {

// Pairwise (cascade) summation; fixed association order for a given length.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

// Welford accumulator for a scalar sample mean and its standard error.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double std_error() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Component-wise RunningStats over fixed-dimension vectors.
class VectorStats {
 public:
  explicit VectorStats(std::size_t dim) : stats_(dim) {}

  void add(std::span<const double> x) {
    if (x.size() != stats_.size()) throw ConfigError("VectorStats dimension mismatch");
    for (std::size_t j = 0; j < x.size(); ++j) stats_[j].add(x[j]);
  }

  std::size_t dim() const noexcept { return stats_.size(); }
  std::size_t count() const noexcept { return stats_.empty() ? 0 : stats_[0].count(); }
  const RunningStats& operator[](std::size_t j) const { return stats_[j]; }

  std::vector<double> mean() const {
    std::vector<double> m(stats_.size());
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = stats_[j].mean();
    return m;
  }
  std::vector<double> std_error() const {
    std::vector<double> se(stats_.size());
    for (std::size_t j = 0; j < se.size(); ++j) se[j] = stats_[j].std_error();
    return se;
  }

 private:
  std::vector<RunningStats> stats_;
};

struct MeanWithError {
  double mean = 0.0;
  double std_error = 0.0;
};

struct VectorMeanWithError {
  std::vector<double> mean;
  std::vector<double> std_error;
};

// Least-squares slope of log(y) against log(x). Needs >= 2 points, all positive.
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("log-log fit needs at least two paired points");
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw DomainError("log-log fit needs distinct x values");
  return sxy / sxx;
}

inline double norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double squared_norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace offpsf

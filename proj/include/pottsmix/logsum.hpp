#pragma once

#include <cmath>
#include <limits>

namespace pottsmix {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// Streaming log-sum-exp. Keeps a running maximum and a scaled linear sum, so
// adding n terms costs one exp each and stays exact to rounding.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == kLogZero) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  void add_weighted(double log_term, double count) {
    if (count <= 0) return;
    add(log_term + std::log(count));
  }
  void merge(const LogSumExp& other) {
    if (other.max_ == kLogZero) return;
    add(other.max_ + std::log(other.sum_));
  }
  double value() const { return max_ == kLogZero ? kLogZero : max_ + std::log(sum_); }

 private:
  double max_ = kLogZero;
  double sum_ = 0.0;
};

}  // namespace pottsmix

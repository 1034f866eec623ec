#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace nlmc {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::fabs(sum_) >= std::fabs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Streaming mean with non-overlapping batch means for a Monte Carlo standard
/// error. The number of observations must be known up front; the last
/// `total % batches` observations only enter the overall mean.
class BatchMeans {
 public:
  BatchMeans() = default;
  BatchMeans(std::size_t expected_count, std::size_t batches)
      : batch_size_(batches > 0 ? expected_count / batches : 0) {
    if (batch_size_ > 0) batch_sums_.reserve(batches);
  }

  void add(double value) {
    total_.add(value);
    ++count_;
    if (batch_size_ == 0) return;
    current_.add(value);
    if (++in_current_ == batch_size_) {
      batch_sums_.push_back(current_.value());
      current_ = CompensatedSum{};
      in_current_ = 0;
    }
  }

  std::size_t count() const { return count_; }

  double mean() const {
    return count_ > 0 ? total_.value() / static_cast<double>(count_) : 0.0;
  }

  /// Batch-means standard error of mean(); NaN with fewer than two batches.
  double standard_error() const {
    const std::size_t b = batch_sums_.size();
    if (b < 2) return std::nan("");
    double m = 0.0;
    for (double s : batch_sums_) m += s;
    m /= static_cast<double>(b * batch_size_);
    double ss = 0.0;
    for (double s : batch_sums_) {
      const double d = s / static_cast<double>(batch_size_) - m;
      ss += d * d;
    }
    const double batch_var = ss / static_cast<double>(b - 1);
    return std::sqrt(batch_var / static_cast<double>(b));
  }

 private:
  std::size_t batch_size_ = 0;
  std::size_t count_ = 0;
  std::size_t in_current_ = 0;
  CompensatedSum total_;
  CompensatedSum current_;
  std::vector<double> batch_sums_;
};

}  // namespace nlmc

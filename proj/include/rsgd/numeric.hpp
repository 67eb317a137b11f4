// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace rsgd {

/// Compensated (Neumaier) summation.
class NeumaierSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample mean and standard error of the mean from first and second moments.
struct MomentAccumulator {
  NeumaierSum sum;
  NeumaierSum sum_sq;
  std::size_t n = 0;

  void add(double v) noexcept {
    sum.add(v);
    sum_sq.add(v * v);
    ++n;
  }
  void merge(const MomentAccumulator& other) noexcept {
    sum.add(other.sum.value());
    sum_sq.add(other.sum_sq.value());
    n += other.n;
  }
  double mean() const noexcept { return n ? sum.value() / static_cast<double>(n) : 0.0; }
  double stderr_of_mean() const noexcept {
    if (n < 2) return 0.0;
    const double m = mean();
    const double nn = static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq.value() - nn * m * m) / (nn - 1.0));
    return std::sqrt(var / nn);
  }
};

/// Runs body(i) for i in [0, n) on up to hardware_concurrency workers.
/// Iterations must write only to their own slot; results are therefore
/// independent of scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> failures(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) body(i);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace rsgd

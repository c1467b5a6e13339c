#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ctf {

// Serial is the reference path; parallel must reproduce it bit for bit.
enum class Exec { serial, parallel };

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double ordered_sum(const std::vector<double>& terms) {
  CompensatedSum s;
  for (double t : terms) s.add(t);
  return s.value();
}

// Runs f(i) for i in [0, n). Iterations must write only to slot i of their outputs.
template <class F>
void for_each_index(Exec ex, std::size_t n, F&& f) {
  if (ex == Exec::parallel) {
    const long m = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < m; ++i) f(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) f(i);
  }
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ctf

#pragma once

// Order-fixed pairwise summation: the reduction tree depends only on the
// index range, so results are bit-identical regardless of thread count.

#include <cstddef>
#include <vector>

namespace sgv {

template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, const F& term) {
  if (hi - lo <= 64) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(std::size_t{0}, v.size(),
                      [&](std::size_t i) { return v[i]; });
}

}  // namespace sgv

#ifndef FEDSIM_PARALLEL_HPP
#define FEDSIM_PARALLEL_HPP

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedsim::par {

// Fixed block size shared by the serial and OpenMP kernel variants. Both
// accumulate per block and combine partials in block order, so results are
// bit-identical regardless of thread count.
inline constexpr std::size_t kBlock = 4096;

struct BlockRange {
  std::size_t begin;
  std::size_t end;
};

inline std::size_t num_blocks(std::size_t n) { return (n + kBlock - 1) / kBlock; }

inline BlockRange block(std::size_t b, std::size_t n) {
  const std::size_t begin = b * kBlock;
  const std::size_t end = begin + kBlock < n ? begin + kBlock : n;
  return {begin, end};
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace fedsim::par

#endif

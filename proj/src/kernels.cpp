#include "hindpaint/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hindpaint::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

std::vector<ChunkRange> batch_chunks(std::size_t n) {
  std::vector<ChunkRange> chunks;
  if (n == 0) return chunks;
  const std::size_t count = std::min(n, kMaxBatchChunks);
  const std::size_t base = n / count;
  const std::size_t extra = n % count;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    chunks.push_back({begin, begin + len});
    begin += len;
  }
  return chunks;
}

double sum_squared_diff(std::span<const float> a, std::span<const float> b) {
  const std::size_t n = a.size();
  const std::size_t n_chunks = (n + kReduceChunk - 1) / kReduceChunk;
  if (n_chunks <= 1) return reference::sum_squared_diff(a, b);

  std::vector<double> partial(n_chunks, 0.0);
  const long count = static_cast<long>(n_chunks);
#pragma omp parallel for schedule(static)
  for (long c = 0; c < count; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    const std::size_t hi = std::min(n, lo + kReduceChunk);
    partial[c] = reference::sum_squared_diff(a.subspan(lo, hi - lo),
                                             b.subspan(lo, hi - lo));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

namespace reference {

double sum_squared_diff(std::span<const float> a, std::span<const float> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += d * d;
  }
  return total;
}

}  // namespace reference

}  // namespace hindpaint::kernels

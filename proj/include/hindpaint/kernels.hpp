#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial reference under
// kernels::reference that tests compare against.
//
// Reductions are split into chunks whose boundaries depend only on the
// problem size, and partial results are combined in chunk order, so the
// output is bit-identical for any thread count.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <vector>

namespace hindpaint::kernels {

inline constexpr std::size_t kReduceChunk = 4096;
inline constexpr std::size_t kMaxBatchChunks = 16;

// Sum of (a_i - b_i)^2 in double precision.
double sum_squared_diff(std::span<const float> a, std::span<const float> b);

int max_threads();
void set_threads(int n);

struct ChunkRange {
  std::size_t begin;
  std::size_t end;
};

// Fixed partition of [0, n) into at most kMaxBatchChunks contiguous ranges.
std::vector<ChunkRange> batch_chunks(std::size_t n);

// Exceptions thrown inside a parallel loop are captured per index and the
// lowest-index one is rethrown after the loop.
class ErrorSlots {
 public:
  explicit ErrorSlots(std::size_t n) : errors_(n) {}
  void capture(std::size_t i) { errors_[i] = std::current_exception(); }
  void rethrow_first() const {
    for (const auto& e : errors_) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  std::vector<std::exception_ptr> errors_;
};

// Accumulates per-item contributions into `out` (which is zeroed first).
//   make_ws()                 -> per-chunk scratch state
//   fn(item, grad, ws)        -> adds item's contribution into grad
// Chunks run in parallel; chunk sums are added to `out` in chunk order.
template <typename MakeWorkspace, typename Fn>
void parallel_accumulate(std::size_t n_items, std::span<double> out,
                         MakeWorkspace&& make_ws, Fn&& fn) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto chunks = batch_chunks(n_items);
  const long n_chunks = static_cast<long>(chunks.size());
  std::vector<std::vector<double>> partial(chunks.size());
  ErrorSlots errors(chunks.size());
#pragma omp parallel for schedule(static)
  for (long c = 0; c < n_chunks; ++c) {
    try {
      auto ws = make_ws();
      auto& grad = partial[c];
      grad.assign(out.size(), 0.0);
      for (std::size_t i = chunks[c].begin; i < chunks[c].end; ++i) {
        fn(i, std::span<double>(grad), ws);
      }
    } catch (...) {
      errors.capture(static_cast<std::size_t>(c));
    }
  }
  errors.rethrow_first();
  for (const auto& grad : partial) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += grad[k];
  }
}

// Runs fn(i) for every i in [0, n). Each call must only touch state owned by
// index i; results are then independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const long count = static_cast<long>(n);
  ErrorSlots errors(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors.capture(static_cast<std::size_t>(i));
    }
  }
  errors.rethrow_first();
}

namespace reference {

double sum_squared_diff(std::span<const float> a, std::span<const float> b);

template <typename MakeWorkspace, typename Fn>
void accumulate(std::size_t n_items, std::span<double> out,
                MakeWorkspace&& make_ws, Fn&& fn) {
  std::fill(out.begin(), out.end(), 0.0);
  auto ws = make_ws();
  for (std::size_t i = 0; i < n_items; ++i) fn(i, out, ws);
}

template <typename Fn>
void serial_for(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace reference

}  // namespace hindpaint::kernels

#pragma once

#include <cstddef>
#include <memory>

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace kinopax {

/// Bulk-synchronous work runner with a fixed worker count. Every
/// parallel_for call returns only after all of its work items finished, so
/// consecutive calls are separated by a full barrier. With one worker the
/// body runs inline on the calling thread. The worker limit is raised to the
/// requested count even when it exceeds the hardware concurrency.
class Executor {
 public:
  explicit Executor(int threads)
      : threads_(threads < 1 ? 1 : threads),
        limit_(threads_ > 1 ? std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                                   static_cast<std::size_t>(threads_))
                            : nullptr),
        arena_(threads_ > 1 ? std::make_unique<tbb::task_arena>(threads_) : nullptr) {}

  int threads() const noexcept { return threads_; }

  /// Calls body(begin, end) over disjoint chunks covering [0, n).
  template <class Body>
  void parallel_for(std::size_t n, std::size_t grain, Body&& body) const {
    if (n == 0) return;
    if (!arena_ || n <= grain) {
      body(std::size_t{0}, n);
      return;
    }
    arena_->execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, grain),
                        [&](const tbb::blocked_range<std::size_t>& r) { body(r.begin(), r.end()); });
    });
  }

 private:
  int threads_;
  std::unique_ptr<tbb::global_control> limit_;
  std::unique_ptr<tbb::task_arena> arena_;
};

}  // namespace kinopax

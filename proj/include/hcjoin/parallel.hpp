#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/partitioner.h>
#include <tbb/task_arena.h>

namespace hcj {

/**
 * A work-stealing pool of a fixed number of workers. Backed by a TBB arena; the global
 * parallelism limit is raised for the pool's lifetime so that the requested worker count
 * is honoured even when it exceeds the detected hardware concurrency.
 */
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers)
      : workers_(std::max<std::size_t>(workers, 1)),
        control_(tbb::global_control::max_allowed_parallelism, workers_),
        arena_(static_cast<int>(workers_)) {}

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t workers() const { return workers_; }

  // Runs fn(i) for i in [0, n). Each index is a separately stealable unit.
  template <typename Fn>
  void for_each_index(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    if (workers_ == 1 || n == 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    arena_.execute([&] {
      tbb::parallel_for(
          tbb::blocked_range<std::size_t>(0, n, 1),
          [&](const tbb::blocked_range<std::size_t>& range) {
            for (auto i = range.begin(); i != range.end(); ++i) fn(i);
          },
          tbb::simple_partitioner());
    });
  }

  // Runs fn(begin, end) over contiguous chunks of [0, n).
  template <typename Fn>
  void for_each_range(std::size_t n, std::size_t grain, Fn&& fn) {
    if (n == 0) return;
    if (workers_ == 1 || n <= grain) {
      fn(std::size_t{0}, n);
      return;
    }
    arena_.execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, std::max<std::size_t>(grain, 1)),
                        [&](const tbb::blocked_range<std::size_t>& range) { fn(range.begin(), range.end()); });
    });
  }

  template <typename Fn>
  void execute(Fn&& fn) {
    arena_.execute(std::forward<Fn>(fn));
  }

 private:
  std::size_t workers_;
  tbb::global_control control_;
  tbb::task_arena arena_;
};

}  // namespace hcj

#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rankae {

/// Fixed-size worker pool for data-parallel loops over instances.
///
/// for_blocks splits [0, n) into one contiguous block per worker; block w is
/// always [n*w/W, n*(w+1)/W), so the instance-to-worker assignment is a pure
/// function of (n, W). Callers that accumulate into per-worker buffers and
/// reduce them in worker order therefore get bit-reproducible results for a
/// fixed thread count.
class ThreadPool {
 public:
  explicit ThreadPool(int threads) {
    if (threads < 1) threads = 1;
    workers_ = threads;
    if (workers_ == 1) return;  // run everything inline
    threads_.reserve(workers_);
    for (int w = 0; w < workers_; ++w) {
      threads_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      stop_ = true;
      ++generation_;
    }
    cv_task_.notify_all();
    for (auto& t : threads_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return workers_; }

  /// Runs fn(worker, begin, end) over a block partition of [0, n).
  /// Blocks until all workers finish. Exceptions thrown by fn propagate.
  void for_blocks(long n, const std::function<void(int, long, long)>& fn) {
    if (n <= 0) return;
    if (workers_ == 1) {
      fn(0, 0, n);
      return;
    }
    {
      std::unique_lock<std::mutex> lock(mutex_);
      task_ = &fn;
      task_n_ = n;
      pending_ = workers_;
      error_ = nullptr;
      ++generation_;
    }
    cv_task_.notify_all();
    {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_done_.wait(lock, [this] { return pending_ == 0; });
      task_ = nullptr;
      if (error_) std::rethrow_exception(error_);
    }
  }

  static int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
  }

 private:
  void worker_loop(int w) {
    std::uint64_t seen = 0;
    while (true) {
      const std::function<void(int, long, long)>* task = nullptr;
      long n = 0;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_task_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        task = task_;
        n = task_n_;
      }
      const long begin = n * w / workers_;
      const long end = n * (w + 1) / workers_;
      std::exception_ptr err;
      if (task && begin < end) {
        try {
          (*task)(w, begin, end);
        } catch (...) {
          err = std::current_exception();
        }
      }
      {
        std::unique_lock<std::mutex> lock(mutex_);
        if (err && !error_) error_ = err;
        if (--pending_ == 0) cv_done_.notify_all();
      }
    }
  }

  int workers_ = 1;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_task_;
  std::condition_variable cv_done_;
  const std::function<void(int, long, long)>* task_ = nullptr;
  long task_n_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace rankae

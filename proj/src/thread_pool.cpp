#include "lexhmm/thread_pool.hpp"

namespace lexhmm {

ThreadPool::ThreadPool(std::size_t threads) {
  if (threads > 1) {
    workers_.reserve(threads - 1);
    for (std::size_t i = 0; i + 1 < threads; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop() {
  std::uint64_t seen = 0;
  while (true) {
    std::unique_lock<std::mutex> lk(mu_);
    cv_work_.wait(lk, [&] { return stop_ || generation_ != seen; });
    if (stop_) return;
    seen = generation_;
    while (next_ < job_size_) {
      const std::size_t i = next_++;
      lk.unlock();
      (*job_)(i);
      lk.lock();
    }
    if (--active_ == 0) cv_done_.notify_all();
  }
}

void ThreadPool::run(std::size_t n, const std::function<void(std::size_t)>& f) {
  if (workers_.empty() || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::unique_lock<std::mutex> lk(mu_);
  job_ = &f;
  job_size_ = n;
  next_ = 0;
  active_ = workers_.size();
  ++generation_;
  cv_work_.notify_all();
  while (next_ < job_size_) {
    const std::size_t i = next_++;
    lk.unlock();
    f(i);
    lk.lock();
  }
  cv_done_.wait(lk, [&] { return active_ == 0; });
  job_ = nullptr;
}

}  // namespace lexhmm

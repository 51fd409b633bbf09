#include "pibench/taskgraph.hpp"

namespace pibench::taskgraph {

std::size_t hardware_cores() {
  const auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

WorkerPool::WorkerPool(std::size_t n_workers) {
  if (n_workers == 0) n_workers = hardware_cores();
  workers_.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& w : workers_) w.join();
}

void WorkerPool::submit(std::function<void()> task) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) throw std::logic_error("submit on a stopping worker pool");
    queue_.push_back(std::move(task));
  }
  cv_.notify_one();
}

void WorkerPool::worker_loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      // Drain remaining work before exiting so no future is left pending.
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

}  // namespace pibench::taskgraph

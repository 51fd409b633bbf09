#pragma once

// Minimal asynchronous task layer: one-shot futures with continuations,
// dataflow composition, keyed channels and a fixed-size worker pool.

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace pibench::taskgraph {

/// Value carried by futures of tasks that return nothing.
struct Unit {
  friend bool operator==(Unit, Unit) { return true; }
};

class FutureError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

template <class T>
class SharedState {
 public:
  void set_value(T value) { complete(Result{std::in_place_index<1>, std::move(value)}); }
  void set_error(std::exception_ptr error) {
    complete(Result{std::in_place_index<2>, std::move(error)});
  }

  bool is_ready() const {
    std::lock_guard lock(mutex_);
    return result_.index() != 0;
  }

  void wait() const {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return result_.index() != 0; });
  }

  // Only valid once ready; the result is immutable after completion.
  const T& value() const {
    if (result_.index() == 2) std::rethrow_exception(std::get<2>(result_));
    return std::get<1>(result_);
  }
  std::exception_ptr error() const {
    return result_.index() == 2 ? std::get<2>(result_) : nullptr;
  }

  /// Runs `fn` inline now if already complete, otherwise on the completing thread.
  void on_ready(std::function<void()> fn) {
    {
      std::lock_guard lock(mutex_);
      if (result_.index() == 0) {
        continuations_.push_back(std::move(fn));
        return;
      }
    }
    fn();
  }

 private:
  using Result = std::variant<std::monostate, T, std::exception_ptr>;

  void complete(Result r) {
    std::vector<std::function<void()>> pending;
    {
      std::lock_guard lock(mutex_);
      if (result_.index() != 0) throw FutureError("future already completed");
      result_ = std::move(r);
      pending.swap(continuations_);
    }
    cv_.notify_all();
    for (auto& fn : pending) fn();
  }

  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  Result result_;
  std::vector<std::function<void()>> continuations_;
};

}  // namespace detail

template <class T>
class Promise;

/// Shared, copyable handle to a one-shot result.
template <class T>
class Future {
 public:
  using value_type = T;

  Future() = default;

  bool valid() const { return state_ != nullptr; }
  bool is_ready() const { return state_->is_ready(); }
  bool failed() const { return is_ready() && state_->error() != nullptr; }

  void wait() const { state_->wait(); }

  /// Blocks until ready. Rethrows the stored error if the future failed.
  const T& get() const {
    state_->wait();
    return state_->value();
  }

  std::exception_ptr error() const {
    state_->wait();
    return state_->error();
  }

  void on_ready(std::function<void()> fn) const { state_->on_ready(std::move(fn)); }

 private:
  friend class Promise<T>;
  explicit Future(std::shared_ptr<detail::SharedState<T>> s) : state_(std::move(s)) {}
  std::shared_ptr<detail::SharedState<T>> state_;
};

template <class T>
class Promise {
 public:
  Promise() : state_(std::make_shared<detail::SharedState<T>>()) {}

  Future<T> get_future() const { return Future<T>(state_); }

  /// Throws FutureError on a second completion.
  void set_value(T value) const { state_->set_value(std::move(value)); }
  void set_error(std::exception_ptr e) const { state_->set_error(std::move(e)); }

 private:
  std::shared_ptr<detail::SharedState<T>> state_;
};

template <class T>
Future<T> make_ready(T value) {
  Promise<T> p;
  p.set_value(std::move(value));
  return p.get_future();
}

template <class T>
Future<T> make_failed(std::exception_ptr e) {
  Promise<T> p;
  p.set_error(std::move(e));
  return p.get_future();
}

/// Fixed number of OS threads draining one shared FIFO queue.
class WorkerPool {
 public:
  /// n_workers == 0 selects the hardware core count.
  explicit WorkerPool(std::size_t n_workers = 0);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return workers_.size(); }
  void submit(std::function<void()> task);

 private:
  void worker_loop();

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

std::size_t hardware_cores();

namespace detail {

template <class R>
using stored_t = std::conditional_t<std::is_void_v<R>, Unit, R>;

template <class R, class Fn, class... Args>
void fulfil(const Promise<stored_t<R>>& promise, Fn& fn, Args&&... args) {
  try {
    if constexpr (std::is_void_v<R>) {
      std::invoke(fn, std::forward<Args>(args)...);
      promise.set_value(Unit{});
    } else {
      promise.set_value(std::invoke(fn, std::forward<Args>(args)...));
    }
  } catch (...) {
    promise.set_error(std::current_exception());
  }
}

}  // namespace detail

/// Runs `task` on some worker of `pool`. An escaping exception fails the future.
template <class Fn>
auto spawn(WorkerPool& pool, Fn task) -> Future<detail::stored_t<std::invoke_result_t<Fn&>>> {
  using R = std::invoke_result_t<Fn&>;
  Promise<detail::stored_t<R>> promise;
  auto result = promise.get_future();
  pool.submit([promise, task = std::move(task)]() mutable {
    detail::fulfil<R>(promise, task);
  });
  return result;
}

/// Attaches `cont` to `f`. The continuation runs inline on whichever thread
/// completes `f` (or immediately, if `f` is already ready).
template <class T, class Fn>
auto then(const Future<T>& f, Fn cont)
    -> Future<detail::stored_t<std::invoke_result_t<Fn&, const T&>>> {
  using R = std::invoke_result_t<Fn&, const T&>;
  Promise<detail::stored_t<R>> promise;
  auto result = promise.get_future();
  f.on_ready([f, promise, cont = std::move(cont)]() mutable {
    if (auto e = f.error()) {
      promise.set_error(e);
      return;
    }
    detail::fulfil<R>(promise, cont, f.get());
  });
  return result;
}

namespace detail {

// Invokes `ready` once all `n` registrations have fired.
class Countdown {
 public:
  Countdown(std::size_t n, std::function<void()> ready)
      : remaining_(n), ready_(std::move(ready)) {}
  void arrive() {
    if (remaining_.fetch_sub(1, std::memory_order_acq_rel) == 1) ready_();
  }

 private:
  std::atomic<std::size_t> remaining_;
  std::function<void()> ready_;
};

template <class... Ts>
std::exception_ptr first_error(const Future<Ts>&... fs) {
  std::exception_ptr e;
  ((e = e ? e : fs.error()), ...);
  return e;
}

}  // namespace detail

/// Schedules `fn(deps.get()...)` on `pool` once every dependency is ready.
/// If any dependency failed, `fn` is skipped and the first error (in
/// argument order) is propagated.
template <class Fn, class... Ts>
auto dataflow(WorkerPool& pool, Fn fn, Future<Ts>... deps)
    -> Future<detail::stored_t<std::invoke_result_t<Fn&, const Ts&...>>> {
  using R = std::invoke_result_t<Fn&, const Ts&...>;
  Promise<detail::stored_t<R>> promise;
  auto result = promise.get_future();

  auto launch = [&pool, promise, fn = std::move(fn), deps...]() mutable {
    pool.submit([promise, fn = std::move(fn), deps...]() mutable {
      if (auto e = detail::first_error(deps...)) {
        promise.set_error(e);
        return;
      }
      detail::fulfil<R>(promise, fn, deps.get()...);
    });
  };

  if constexpr (sizeof...(Ts) == 0) {
    launch();
  } else {
    auto gate = std::make_shared<detail::Countdown>(sizeof...(Ts), std::move(launch));
    (deps.on_ready([gate] { gate->arrive(); }), ...);
  }
  return result;
}

/// Homogeneous variant: `fn` receives every dependency value, in order.
template <class T, class Fn>
auto dataflow(WorkerPool& pool, std::vector<Future<T>> deps, Fn fn)
    -> Future<detail::stored_t<std::invoke_result_t<Fn&, const std::vector<T>&>>> {
  using R = std::invoke_result_t<Fn&, const std::vector<T>&>;
  Promise<detail::stored_t<R>> promise;
  auto result = promise.get_future();
  auto shared_deps = std::make_shared<const std::vector<Future<T>>>(std::move(deps));

  auto launch = [&pool, promise, fn = std::move(fn), shared_deps]() mutable {
    pool.submit([promise, fn = std::move(fn), shared_deps]() mutable {
      std::vector<T> values;
      values.reserve(shared_deps->size());
      for (const auto& d : *shared_deps) {
        if (auto e = d.error()) {
          promise.set_error(e);
          return;
        }
        values.push_back(d.get());
      }
      detail::fulfil<R>(promise, fn, std::as_const(values));
    });
  };

  if (shared_deps->empty()) {
    launch();
  } else {
    auto gate = std::make_shared<detail::Countdown>(shared_deps->size(), std::move(launch));
    for (const auto& d : *shared_deps) d.on_ready([gate] { gate->arrive(); });
  }
  return result;
}

/// Waits for every future; rethrows the first failure encountered.
template <class T>
void wait_all(const std::vector<Future<T>>& fs) {
  for (const auto& f : fs) f.wait();
  for (const auto& f : fs)
    if (auto e = f.error()) std::rethrow_exception(e);
}

class ChannelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Single-slot-per-key rendezvous. `get` and `set` may happen in either order.
template <class Key, class Value>
class Channel {
 public:
  /// Throws ChannelError if `key` was already set.
  void set(const Key& key, Value value) {
    Promise<Value> slot;
    {
      std::lock_guard lock(mutex_);
      auto& entry = entries_[key];
      if (entry.failed) return;
      if (entry.was_set) throw ChannelError("channel key set twice");
      entry.was_set = true;
      slot = entry.promise;
    }
    slot.set_value(std::move(value));
  }

  void fail(const Key& key, std::exception_ptr e) {
    Promise<Value> slot;
    {
      std::lock_guard lock(mutex_);
      auto& entry = entries_[key];
      if (entry.was_set) return;
      entry.was_set = entry.failed = true;
      slot = entry.promise;
    }
    slot.set_error(std::move(e));
  }

  Future<Value> get(const Key& key) {
    Promise<Value> doomed;
    std::exception_ptr reason;
    Future<Value> result;
    {
      std::lock_guard lock(mutex_);
      auto& entry = entries_[key];
      if (!entry.was_set) {
        for (const auto& c : closers_)
          if (c.pred(key)) {
            entry.was_set = entry.failed = true;
            doomed = entry.promise;
            reason = c.error;
            break;
          }
      }
      result = entry.promise.get_future();
    }
    if (reason) doomed.set_error(reason);
    return result;
  }

  /// Fails every unset key matching `pred`, including ones requested later.
  void fail_where(std::function<bool(const Key&)> pred, std::exception_ptr e) {
    std::vector<Promise<Value>> open;
    {
      std::lock_guard lock(mutex_);
      for (auto& [k, entry] : entries_)
        if (!entry.was_set && pred(k)) {
          entry.was_set = entry.failed = true;
          open.push_back(entry.promise);
        }
      closers_.push_back({std::move(pred), e});
    }
    for (auto& p : open) p.set_error(e);
  }

  void fail_all(std::exception_ptr e) {
    fail_where([](const Key&) { return true; }, std::move(e));
  }

 private:
  struct Entry {
    Promise<Value> promise;
    bool was_set = false;
    bool failed = false;
  };
  struct Closer {
    std::function<bool(const Key&)> pred;
    std::exception_ptr error;
  };
  std::mutex mutex_;
  std::map<Key, Entry> entries_;
  std::vector<Closer> closers_;
};

}  // namespace pibench::taskgraph

#include <mutex>

#include "pibench/netlayer.hpp"

namespace pibench::netlayer {

namespace {

struct Fabric {
  std::mutex mutex;
  std::vector<std::shared_ptr<HaloChannel>> inboxes;  // null once closed
};

class InprocEndpoint final : public Endpoint {
 public:
  InprocEndpoint(int rank, int size, std::shared_ptr<Fabric> fabric)
      : Endpoint(rank, size), fabric_(std::move(fabric)) {}
  ~InprocEndpoint() override { close(); }

  std::string address() const override { return "inproc://" + std::to_string(rank()); }

  taskgraph::Future<taskgraph::Unit> send_halo(Direction neighbor, std::uint32_t step,
                                               std::vector<double> cells) override {
    using taskgraph::Unit;
    const int peer = neighbor_rank(neighbor);
    std::shared_ptr<HaloChannel> target;
    bool self_open = false;
    {
      std::lock_guard lock(fabric_->mutex);
      self_open = fabric_->inboxes[rank()] != nullptr;
      target = fabric_->inboxes[peer];
    }
    if (!self_open)
      return taskgraph::make_failed<Unit>(std::make_exception_ptr(
          TransportError("rank " + std::to_string(rank()) + ": endpoint closed")));
    if (!target)
      return taskgraph::make_failed<Unit>(std::make_exception_ptr(
          TransportError("send to rank " + std::to_string(peer) + " (inproc://" + std::to_string(peer) +
                         ") failed: peer closed")));
    try {
      target->set({step, mirror(neighbor)}, std::move(cells));
    } catch (...) {
      return taskgraph::make_failed<Unit>(std::current_exception());
    }
    return taskgraph::make_ready(Unit{});
  }

  void close() override {
    std::lock_guard lock(fabric_->mutex);
    fabric_->inboxes[rank()] = nullptr;
  }

 private:
  std::shared_ptr<Fabric> fabric_;
};

}  // namespace

std::vector<std::unique_ptr<Endpoint>> make_inproc_ring(int n) {
  if (n < 1) throw std::invalid_argument("make_inproc_ring: need at least one rank");
  auto fabric = std::make_shared<Fabric>();
  std::vector<std::unique_ptr<Endpoint>> out;
  for (int r = 0; r < n; ++r) {
    out.push_back(std::make_unique<InprocEndpoint>(r, n, fabric));
    fabric->inboxes.push_back(out.back()->inbox_handle());
  }
  return out;
}

}  // namespace pibench::netlayer

#include "session/errors.hpp"
#include "session/transport.hpp"

#include <condition_variable>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>

namespace session {

namespace {

using Clock = std::chrono::steady_clock;

// Copy mode carries the encoded frame; zero-copy mode carries the value.
using Packet = std::variant<wire::Frame, wire::Bytes>;

enum class QueueStatus { Ok, Closed, Timeout };

// Bounded FIFO between two threads. Closing wakes every waiter; items
// already queued stay readable.
class PacketQueue {
public:
  explicit PacketQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  QueueStatus push(Packet p, Clock::time_point deadline) {
    std::unique_lock lock(mu_);
    if (!not_full_.wait_until(lock, deadline, [&] { return closed_ || items_.size() < capacity_; }))
      return QueueStatus::Timeout;
    if (closed_) return QueueStatus::Closed;
    items_.push_back(std::move(p));
    not_empty_.notify_one();
    return QueueStatus::Ok;
  }

  // Control frames bypass the capacity bound so failure signalling never blocks.
  void push_control(Packet p) {
    std::lock_guard lock(mu_);
    if (closed_) return;
    items_.push_back(std::move(p));
    not_empty_.notify_one();
  }

  std::pair<QueueStatus, std::optional<Packet>> pop(Clock::time_point deadline) {
    std::unique_lock lock(mu_);
    if (!not_empty_.wait_until(lock, deadline, [&] { return closed_ || !items_.empty(); }))
      return {QueueStatus::Timeout, std::nullopt};
    if (items_.empty()) return {QueueStatus::Closed, std::nullopt};
    Packet p = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return {QueueStatus::Ok, std::move(p)};
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

private:
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<Packet> items_;
  std::size_t capacity_;
  bool closed_ = false;
};

std::uint64_t scalar_count(const Message& m) {
  switch (kind_of(m)) {
  case MessageKind::DoubleArray: return std::get<DoubleArray>(m).size();
  case MessageKind::DoubleMatrix: return std::get<DoubleMatrix>(m).values().size();
  case MessageKind::ParticleArray: return std::get<ParticleArray>(m).size() * 5;
  default: return 1;
  }
}

} // namespace

struct InProcRegistry::State {
  struct ConnectRequest {
    std::string canonical_type;
    std::shared_ptr<PacketQueue> client_to_server;
    std::shared_ptr<PacketQueue> server_to_client;
    std::promise<bool> verdict;
  };

  struct Listener {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::shared_ptr<ConnectRequest>> pending;
    bool closed = false;
  };

  std::mutex mu;
  std::condition_variable bound;
  std::map<std::string, std::shared_ptr<Listener>> listeners;
  std::atomic<std::uint64_t> copied{0};
};

InProcRegistry::InProcRegistry() : state_(std::make_shared<State>()) {}
InProcRegistry::~InProcRegistry() = default;

std::uint64_t InProcRegistry::copied_elements() const noexcept { return state_->copied.load(); }

namespace {

using State = InProcRegistry::State;

class InProcChannel final : public Channel {
public:
  InProcChannel(std::shared_ptr<PacketQueue> out, std::shared_ptr<PacketQueue> in, std::shared_ptr<State> registry,
                const RuntimeConfig& cfg)
      : out_(std::move(out)), in_(std::move(in)), registry_(std::move(registry)), cfg_(cfg) {}

  ~InProcChannel() override { abort(false); }

  void send(wire::Frame frame) override {
    Packet packet;
    auto* msg = std::get_if<Message>(&frame);
    if (msg && cfg_.mode == Mode::Copy) {
      registry_->copied.fetch_add(scalar_count(*msg), std::memory_order_relaxed);
      wire::Bytes bytes;
      wire::encode_frame(frame, bytes);
      packet = std::move(bytes);
    } else {
      packet = std::move(frame);
    }
    switch (out_->push(std::move(packet), Clock::now() + cfg_.watchdog)) {
    case QueueStatus::Ok: return;
    case QueueStatus::Closed: throw SessionFailure("connection lost: peer closed the in-process channel");
    case QueueStatus::Timeout: throw SessionFailure("watchdog expired while sending");
    }
  }

  wire::Frame receive() override {
    auto [status, packet] = in_->pop(Clock::now() + cfg_.watchdog);
    if (status == QueueStatus::Timeout) throw SessionFailure("watchdog expired while receiving");
    if (status == QueueStatus::Closed) throw SessionFailure("connection lost: peer closed the in-process channel");
    if (auto* bytes = std::get_if<wire::Bytes>(&*packet)) {
      wire::SpanSource src(*bytes);
      return wire::decode_frame(src);
    }
    return std::get<wire::Frame>(std::move(*packet));
  }

  void close() noexcept override {
    out_->close();
    in_->close();
  }

  void abort(bool signal_failure) noexcept override {
    if (signal_failure) out_->push_control(wire::Frame{wire::Failure{}});
    out_->close();
    in_->close();
  }

  TransportKind kind() const noexcept override { return TransportKind::InProcess; }

private:
  std::shared_ptr<PacketQueue> out_;
  std::shared_ptr<PacketQueue> in_;
  std::shared_ptr<State> registry_;
  RuntimeConfig cfg_;
};

class InProcAcceptor final : public Acceptor {
public:
  InProcAcceptor(std::shared_ptr<State> registry, std::string key, std::shared_ptr<State::Listener> listener,
                 const RuntimeConfig& cfg)
      : registry_(std::move(registry)), key_(std::move(key)), listener_(std::move(listener)), cfg_(cfg) {}

  ~InProcAcceptor() override { close(); }

  std::unique_ptr<Channel> accept(const SessionType& local) override {
    std::shared_ptr<State::ConnectRequest> req;
    {
      std::unique_lock lock(listener_->mu);
      if (!listener_->cv.wait_for(lock, cfg_.watchdog, [&] { return listener_->closed || !listener_->pending.empty(); }))
        throw SessionFailure("watchdog expired while accepting on '" + key_ + "'");
      if (listener_->closed) throw SessionFailure("server socket '" + key_ + "' closed");
      req = std::move(listener_->pending.front());
      listener_->pending.pop_front();
    }
    SessionType remote;
    try {
      remote = parse(req->canonical_type);
    } catch (const ParseError& e) {
      req->verdict.set_value(false);
      throw HandshakeError(std::string("unparseable remote session type: ") + e.what());
    }
    bool ok = remote.expanded() && is_dual(remote, local);
    req->verdict.set_value(ok);
    if (!ok)
      throw IncompatibleSession("incompatible session: client offered '" + req->canonical_type + "', server expects dual of '" +
                                canonicalize(local) + "'");
    return std::make_unique<InProcChannel>(req->server_to_client, req->client_to_server, registry_, cfg_);
  }

  void close() noexcept override {
    {
      std::lock_guard lock(registry_->mu);
      auto it = registry_->listeners.find(key_);
      if (it != registry_->listeners.end() && it->second == listener_) registry_->listeners.erase(it);
    }
    std::lock_guard lock(listener_->mu);
    listener_->closed = true;
    for (auto& req : listener_->pending) req->verdict.set_value(false);
    listener_->pending.clear();
    listener_->cv.notify_all();
  }

private:
  std::shared_ptr<State> registry_;
  std::string key_;
  std::shared_ptr<State::Listener> listener_;
  RuntimeConfig cfg_;
};

class InProcConnector final : public Connector {
public:
  InProcConnector(std::shared_ptr<State> registry, std::string key, const RuntimeConfig& cfg)
      : registry_(std::move(registry)), key_(std::move(key)), cfg_(cfg) {}

  std::unique_ptr<Channel> connect(const SessionType& local) override {
    const auto deadline = Clock::now() + cfg_.watchdog;
    std::shared_ptr<State::Listener> listener;
    {
      std::unique_lock lock(registry_->mu);
      if (!registry_->bound.wait_until(lock, deadline, [&] { return registry_->listeners.count(key_) > 0; }))
        throw SessionFailure("no in-process server bound to '" + key_ + "'");
      listener = registry_->listeners.at(key_);
    }

    auto req = std::make_shared<State::ConnectRequest>();
    req->canonical_type = canonicalize(local);
    req->client_to_server = std::make_shared<PacketQueue>(cfg_.queue_capacity);
    req->server_to_client = std::make_shared<PacketQueue>(cfg_.queue_capacity);
    std::future<bool> verdict = req->verdict.get_future();
    {
      std::lock_guard lock(listener->mu);
      if (listener->closed) throw SessionFailure("server socket '" + key_ + "' closed");
      listener->pending.push_back(req);
      listener->cv.notify_one();
    }
    if (verdict.wait_until(deadline) != std::future_status::ready)
      throw SessionFailure("watchdog expired waiting for '" + key_ + "' to accept");
    if (!verdict.get())
      throw IncompatibleSession("incompatible session: server '" + key_ + "' rejected '" + req->canonical_type + "'");
    return std::make_unique<InProcChannel>(req->client_to_server, req->server_to_client, registry_, cfg_);
  }

private:
  std::shared_ptr<State> registry_;
  std::string key_;
  RuntimeConfig cfg_;
};

} // namespace

std::unique_ptr<Acceptor> make_inproc_acceptor(InProcRegistry& registry, const std::string& key,
                                               const RuntimeConfig& cfg) {
  auto state = registry.state();
  auto listener = std::make_shared<State::Listener>();
  {
    std::lock_guard lock(state->mu);
    if (!state->listeners.emplace(key, listener).second)
      throw std::invalid_argument("in-process key '" + key + "' already bound");
    state->bound.notify_all();
  }
  return std::make_unique<InProcAcceptor>(state, key, std::move(listener), cfg);
}

std::unique_ptr<Connector> make_inproc_connector(InProcRegistry& registry, const std::string& key,
                                                 const RuntimeConfig& cfg) {
  return std::make_unique<InProcConnector>(registry.state(), key, cfg);
}

} // namespace session

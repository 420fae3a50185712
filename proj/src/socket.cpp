#include "session/socket.hpp"

#include "session/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <stdexcept>

namespace session {

RuntimeConfig RuntimeConfig::from_env() {
  RuntimeConfig cfg;
  if (const char* v = std::getenv("SESSION_QUEUE_CAPACITY")) cfg.queue_capacity = std::strtoull(v, nullptr, 10);
  if (const char* v = std::getenv("SESSION_WATCHDOG_MS")) cfg.watchdog = std::chrono::milliseconds(std::strtoll(v, nullptr, 10));
  if (const char* v = std::getenv("SESSION_MODE")) {
    std::string mode = v;
    if (mode == "copy") cfg.mode = Mode::Copy;
    else if (mode == "zerocopy" || mode == "zero-copy") cfg.mode = Mode::ZeroCopy;
    else throw std::invalid_argument("SESSION_MODE must be copy or zerocopy");
  }
  if (cfg.queue_capacity == 0) throw std::invalid_argument("SESSION_QUEUE_CAPACITY must be positive");
  return cfg;
}

namespace detail {

struct ScopeState {
  std::mutex mu;
  SessionScope::State state = SessionScope::State::Active;
  std::vector<std::weak_ptr<SocketCore>> members;
  std::size_t open = 0;
};

struct SocketCore {
  SocketCore(std::unique_ptr<Channel> ch, MonitorState m, Mode md, SessionScope sc)
      : channel(std::move(ch)), monitor(std::move(m)), mode(md), kind(channel->kind()), scope(std::move(sc)) {}

  std::unique_ptr<Channel> channel;
  MonitorState monitor;
  Mode mode;
  TransportKind kind;
  SessionScope scope;
  std::atomic<SessionSocket::Status> status{SessionSocket::Status::Active};
  std::atomic<bool> busy{false};
  bool closed_by_owner = false;

  // Active -> Failed exactly once; tears the transport down.
  bool mark_failed(bool signal) noexcept {
    auto expected = SessionSocket::Status::Active;
    if (!status.compare_exchange_strong(expected, SessionSocket::Status::Failed)) return false;
    channel->abort(signal);
    return true;
  }

  // Local failure: this session is unusable and everything in its scope
  // must hear about it.
  void fail_and_propagate() noexcept {
    mark_failed(true);
    scope.fail();
  }

  void ensure_usable() const {
    if (closed_by_owner) throw ProtocolViolation("open session", "operation after close");
    if (status.load() != SessionSocket::Status::Active) throw SessionFailure("session has failed");
  }

  void transmit(wire::Frame f) {
    try {
      channel->send(std::move(f));
    } catch (const SessionFailure&) {
      fail_and_propagate();
      throw;
    }
  }

  wire::Frame collect() {
    wire::Frame f;
    try {
      f = channel->receive();
    } catch (const SessionFailure&) {
      fail_and_propagate();
      throw;
    } catch (const WireError& e) {
      fail_and_propagate();
      throw SessionFailure(std::string("corrupt frame: ") + e.what());
    }
    if (std::holds_alternative<wire::Failure>(f)) {
      fail_and_propagate();
      throw SessionFailure("peer signalled failure");
    }
    return f;
  }

  static void join(const SessionScope& scope, const std::shared_ptr<SocketCore>& core) {
    ScopeState& st = *scope.state_;
    std::lock_guard lock(st.mu);
    if (st.state == SessionScope::State::Failed) {
      core->mark_failed(true);
      throw SessionFailure("session scope has already failed");
    }
    // A completed scope that gains a member is live again.
    st.state = SessionScope::State::Active;
    st.members.push_back(core);
    ++st.open;
  }

  void leave_cleanly() {
    ScopeState& st = *scope.state_;
    std::lock_guard lock(st.mu);
    if (st.open > 0) --st.open;
    if (st.open == 0 && st.state == SessionScope::State::Active) st.state = SessionScope::State::Completed;
  }

  bool collect_flag() {
    wire::Frame f = collect();
    if (auto* flag = std::get_if<wire::Flag>(&f)) return flag->value;
    fail_and_propagate();
    throw TypeTagMismatch("expected an iteration flag, received a " +
                          std::string(to_string(kind_of(std::get<Message>(f)))) + " message");
  }
};

class BusyGuard {
public:
  explicit BusyGuard(SocketCore& core) : core_(core) {
    if (core_.busy.exchange(true, std::memory_order_acquire)) throw ConcurrentAccess();
  }
  ~BusyGuard() { core_.busy.store(false, std::memory_order_release); }
  BusyGuard(const BusyGuard&) = delete;
  BusyGuard& operator=(const BusyGuard&) = delete;

private:
  SocketCore& core_;
};

} // namespace detail

using detail::BusyGuard;
using detail::SocketCore;

// SessionScope ----------------------------------------------------------------

SessionScope::SessionScope() : state_(std::make_shared<detail::ScopeState>()) {}

SessionScope::State SessionScope::state() const {
  std::lock_guard lock(state_->mu);
  return state_->state;
}

std::size_t SessionScope::size() const {
  std::lock_guard lock(state_->mu);
  return state_->members.size();
}

void SessionScope::fail() noexcept {
  std::vector<std::shared_ptr<SocketCore>> targets;
  {
    std::lock_guard lock(state_->mu);
    if (state_->state != State::Active) return;
    state_->state = State::Failed;
    for (auto& w : state_->members)
      if (auto m = w.lock()) targets.push_back(std::move(m));
  }
  for (auto& m : targets) m->mark_failed(true);
}

namespace {

template <class T>
constexpr MessageKind kind_for() {
  if constexpr (std::is_same_v<T, std::int32_t>) return MessageKind::Int;
  else if constexpr (std::is_same_v<T, double>) return MessageKind::Double;
  else if constexpr (std::is_same_v<T, DoubleArray>) return MessageKind::DoubleArray;
  else if constexpr (std::is_same_v<T, DoubleMatrix>) return MessageKind::DoubleMatrix;
  else return MessageKind::ParticleArray;
}

SocketCore& core_of(const std::shared_ptr<SocketCore>& core) {
  if (!core) throw ProtocolViolation("established session", "operation on an empty socket");
  return *core;
}

void check_permits(SocketCore& c, const Action& a) {
  BusyGuard guard(c);
  c.ensure_usable();
  if (!c.monitor.permits(a)) throw ProtocolViolation(c.monitor.expected(), to_string(a));
}

} // namespace

// SessionSocket ---------------------------------------------------------------

SessionSocket::SessionSocket(std::shared_ptr<SocketCore> core) noexcept : core_(std::move(core)) {}

SessionSocket& SessionSocket::operator=(SessionSocket&& other) noexcept {
  if (this != &other) {
    close();
    core_ = std::move(other.core_);
  }
  return *this;
}

SessionSocket::~SessionSocket() { close(); }

void SessionSocket::send(Message m) {
  SocketCore& c = core_of(core_);
  BusyGuard guard(c);
  c.ensure_usable();
  const Action a = Action::send(kind_of(m));
  if (!c.monitor.permits(a)) throw ProtocolViolation(c.monitor.expected(), to_string(a));
  c.transmit(wire::Frame{std::move(m)});
  c.monitor.apply(a);
}

Message SessionSocket::receive() {
  SocketCore& c = core_of(core_);
  BusyGuard guard(c);
  c.ensure_usable();
  const Node* head = c.monitor.head();
  if (!head || head->kind != Node::Kind::In) throw ProtocolViolation(c.monitor.expected(), "receive");
  const MessageKind expected = head->message;

  wire::Frame f = c.collect();
  auto* msg = std::get_if<Message>(&f);
  if (!msg) {
    c.fail_and_propagate();
    throw TypeTagMismatch("expected a " + std::string(to_string(expected)) + " message, received an iteration flag");
  }
  if (kind_of(*msg) != expected) {
    c.fail_and_propagate();
    throw TypeTagMismatch("expected a " + std::string(to_string(expected)) + " message, received " +
                          std::string(to_string(kind_of(*msg))));
  }
  c.monitor.apply(Action::receive(expected));
  return std::move(*msg);
}

template <class T>
T SessionSocket::receive_as() {
  {
    SocketCore& c = core_of(core_);
    const Node* head = c.monitor.head();
    const Action a = Action::receive(kind_for<T>());
    if (!c.closed_by_owner && (!head || !c.monitor.permits(a))) throw ProtocolViolation(c.monitor.expected(), to_string(a));
  }
  return std::get<T>(receive());
}

std::int32_t SessionSocket::receive_int() { return receive_as<std::int32_t>(); }
double SessionSocket::receive_double() { return receive_as<double>(); }
DoubleArray SessionSocket::receive_double_array() { return receive_as<DoubleArray>(); }
DoubleMatrix SessionSocket::receive_double_matrix() { return receive_as<DoubleMatrix>(); }
ParticleArray SessionSocket::receive_particles() { return receive_as<ParticleArray>(); }

void SessionSocket::close() noexcept {
  if (!core_ || core_->closed_by_owner) return;
  SocketCore& c = *core_;
  c.closed_by_owner = true;
  if (c.status.load() == Status::Active && c.monitor.complete()) {
    auto expected = Status::Active;
    if (c.status.compare_exchange_strong(expected, Status::Closed)) {
      c.channel->close();
      c.leave_cleanly();
      return;
    }
  }
  // Premature close, or the session already failed.
  c.mark_failed(true);
  c.scope.fail();
}

std::function<void()> SessionSocket::kill_switch() const {
  std::weak_ptr<SocketCore> weak = core_;
  return [weak] {
    if (auto c = weak.lock()) {
      auto expected = Status::Active;
      if (c->status.compare_exchange_strong(expected, Status::Failed)) c->channel->abort(false);
    }
  };
}

SessionSocket::Status SessionSocket::status() const noexcept {
  if (!core_) return Status::Closed;
  if (core_->closed_by_owner && core_->status.load() == Status::Active) return Status::Closed;
  return core_->status.load();
}

const MonitorState& SessionSocket::monitor() const { return core_of(core_).monitor; }
SessionScope SessionSocket::scope() const { return core_of(core_).scope; }
Mode SessionSocket::mode() const noexcept { return core_ ? core_->mode : Mode::Copy; }
TransportKind SessionSocket::transport() const noexcept { return core_ ? core_->kind : TransportKind::InProcess; }

// Server socket / service -----------------------------------------------------

namespace {

void require_rooted(const SessionType& type, Role role) {
  if (!type.expanded()) throw std::invalid_argument("session type must be expanded");
  validate(type);
  if (!type.has_begin() || type.nodes.front().role != role)
    throw std::invalid_argument(std::string("session type must start with ") + (role == Role::Server ? "sbegin" : "cbegin"));
}

} // namespace

SessionServerSocket::SessionServerSocket(SessionType type, std::unique_ptr<Acceptor> acceptor, RuntimeConfig cfg)
    : type_(std::move(type)), acceptor_(std::move(acceptor)), cfg_(cfg) {}

SessionServerSocket SessionServerSocket::tcp(SessionType type, const TcpAddress& addr, RuntimeConfig cfg) {
  require_rooted(type, Role::Server);
  auto acceptor = make_tcp_acceptor(addr, cfg);
  return SessionServerSocket(std::move(type), std::move(acceptor), cfg);
}

SessionServerSocket SessionServerSocket::inproc(SessionType type, InProcRegistry& registry, const std::string& key,
                                                RuntimeConfig cfg) {
  require_rooted(type, Role::Server);
  auto acceptor = make_inproc_acceptor(registry, key, cfg);
  return SessionServerSocket(std::move(type), std::move(acceptor), cfg);
}

SessionSocket SessionServerSocket::accept(SessionScope scope) {
  if (!acceptor_) throw std::logic_error("server socket closed");
  auto channel = acceptor_->accept(type_);
  auto core = std::make_shared<SocketCore>(std::move(channel), MonitorState(type_), cfg_.mode, scope);
  SocketCore::join(scope, core);
  return SessionSocket(std::move(core));
}

std::uint16_t SessionServerSocket::port() const { return acceptor_ ? bound_port(*acceptor_) : 0; }

void SessionServerSocket::close() noexcept {
  if (acceptor_) acceptor_->close();
}

SessionService::SessionService(SessionType type, std::unique_ptr<Connector> connector, RuntimeConfig cfg)
    : type_(std::move(type)), connector_(std::move(connector)), cfg_(cfg) {}

SessionService SessionService::tcp(SessionType type, const TcpAddress& addr, RuntimeConfig cfg) {
  require_rooted(type, Role::Client);
  return SessionService(std::move(type), make_tcp_connector(addr, cfg), cfg);
}

SessionService SessionService::inproc(SessionType type, InProcRegistry& registry, const std::string& key,
                                      RuntimeConfig cfg) {
  require_rooted(type, Role::Client);
  return SessionService(std::move(type), make_inproc_connector(registry, key, cfg), cfg);
}

SessionSocket SessionService::request(SessionScope scope) {
  auto channel = connector_->connect(type_);
  auto core = std::make_shared<SocketCore>(std::move(channel), MonitorState(type_), cfg_.mode, scope);
  SocketCore::join(scope, core);
  return SessionSocket(std::move(core));
}

// Multicast and iteration -----------------------------------------------------

namespace {

void fail_all(std::span<SessionSocket* const> sockets) noexcept {
  for (SessionSocket* s : sockets)
    if (s && s->valid()) s->scope().fail();
}

} // namespace

void multicast_send(std::span<SessionSocket* const> sockets, Message m) {
  const Action a = Action::send(kind_of(m));
  for (SessionSocket* s : sockets) check_permits(core_of(s->core_), a);
  try {
    for (std::size_t i = 0; i < sockets.size(); ++i)
      sockets[i]->send(i + 1 < sockets.size() ? clone(m) : std::move(m));
  } catch (const SessionFailure&) {
    fail_all(sockets);
    throw;
  }
}

OutLoop::OutLoop(std::span<SessionSocket* const> sockets) : sockets_(sockets.begin(), sockets.end()) {}
OutLoop::OutLoop(std::vector<SessionSocket*> sockets) : sockets_(std::move(sockets)) {}

bool OutLoop::next(bool flag) {
  if (done_) throw std::logic_error("outwhile loop already finished");
  const Action step = entered_ ? Action::loop_continue() : Action::enter_outwhile();
  for (SessionSocket* s : sockets_) check_permits(core_of(s->core_), step);
  try {
    for (SessionSocket* s : sockets_) {
      SocketCore& c = *s->core_;
      BusyGuard guard(c);
      c.ensure_usable();
      c.monitor.apply(step);
      c.transmit(wire::Flag{flag});
      if (!flag) c.monitor.apply(Action::loop_exit());
    }
  } catch (const SessionFailure&) {
    fail_all(sockets_);
    throw;
  }
  entered_ = true;
  done_ = !flag;
  return flag;
}

InLoop::InLoop(std::span<SessionSocket* const> sockets) : sockets_(sockets.begin(), sockets.end()) {}
InLoop::InLoop(std::vector<SessionSocket*> sockets) : sockets_(std::move(sockets)) {}

bool InLoop::next() {
  if (done_) throw std::logic_error("inwhile loop already finished");
  const Action step = entered_ ? Action::loop_continue() : Action::enter_inwhile();
  for (SessionSocket* s : sockets_) check_permits(core_of(s->core_), step);

  std::vector<bool> flags;
  flags.reserve(sockets_.size());
  try {
    for (SessionSocket* s : sockets_) {
      SocketCore& c = *s->core_;
      BusyGuard guard(c);
      c.ensure_usable();
      c.monitor.apply(step);
      flags.push_back(c.collect_flag());
    }
  } catch (const SessionFailure&) {
    fail_all(sockets_);
    throw;
  }
  entered_ = true;
  if (flags.empty()) {
    done_ = true;
    return false;
  }
  for (bool f : flags) {
    if (f != flags.front()) {
      fail_all(sockets_);
      throw FlagDisagreement("multicast peers sent differing iteration flags");
    }
  }
  if (!flags.front()) {
    for (SessionSocket* s : sockets_) s->core_->monitor.apply(Action::loop_exit());
    done_ = true;
  }
  return flags.front();
}

void outwhile(std::span<SessionSocket* const> sockets, const std::function<bool()>& cond,
              const std::function<void()>& body) {
  OutLoop loop(sockets);
  try {
    while (loop.next(cond())) body();
  } catch (...) {
    fail_all(sockets);
    throw;
  }
}

void inwhile(std::span<SessionSocket* const> sockets, const std::function<void()>& body) {
  InLoop loop(sockets);
  try {
    while (loop.next()) body();
  } catch (...) {
    fail_all(sockets);
    throw;
  }
}

} // namespace session

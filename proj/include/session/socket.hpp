#pragma once

#include "session/message.hpp"
#include "session/monitor.hpp"
#include "session/protocol.hpp"
#include "session/transport.hpp"

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace session {

namespace detail {
struct SocketCore;
struct ScopeState;
} // namespace detail

/// A group of sessions that fail together. Copies share one scope.
class SessionScope {
public:
  enum class State : std::uint8_t { Active, Failed, Completed };

  SessionScope();

  State state() const;

  /// Sends FAILURE on every member whose transport is still open and marks
  /// every member failed. Idempotent; transport errors are swallowed.
  void fail() noexcept;

  std::size_t size() const;

  friend bool operator==(const SessionScope& a, const SessionScope& b) noexcept { return a.state_ == b.state_; }

private:
  friend class SessionSocket;
  friend struct detail::SocketCore;
  std::shared_ptr<detail::ScopeState> state_;
};

/// Free-function spelling of SessionScope::fail.
inline void fail_scope(SessionScope& scope) noexcept { scope.fail(); }

/// One endpoint of an established session. Move-only; owned by one thread
/// at a time. Every operation is checked against the residual session type
/// before any byte moves.
class SessionSocket {
public:
  enum class Status : std::uint8_t { Active, Failed, Closed };

  SessionSocket() = default;
  SessionSocket(SessionSocket&&) noexcept = default;
  SessionSocket& operator=(SessionSocket&& other) noexcept;
  SessionSocket(const SessionSocket&) = delete;
  SessionSocket& operator=(const SessionSocket&) = delete;
  ~SessionSocket();

  /// Consumes `m`. Throws ProtocolViolation (nothing sent) or SessionFailure.
  void send(Message m);

  /// Throws ProtocolViolation (nothing read), TypeTagMismatch or SessionFailure.
  Message receive();

  std::int32_t receive_int();
  double receive_double();
  DoubleArray receive_double_array();
  DoubleMatrix receive_double_matrix();
  ParticleArray receive_particles();

  /// Completes the session. Closing with an unconsumed residual fails the
  /// scope. Idempotent.
  void close() noexcept;

  /// Drops the transport without any failure signal, as if the owning
  /// process had died. Thread-safe. For fault-injection tests.
  std::function<void()> kill_switch() const;

  Status status() const noexcept;
  bool valid() const noexcept { return core_ != nullptr; }
  const MonitorState& monitor() const;
  SessionScope scope() const;
  Mode mode() const noexcept;
  TransportKind transport() const noexcept;

private:
  friend class SessionServerSocket;
  friend class SessionService;
  friend class OutLoop;
  friend class InLoop;
  friend void multicast_send(std::span<SessionSocket* const>, Message);

  explicit SessionSocket(std::shared_ptr<detail::SocketCore> core) noexcept;

  template <class T>
  T receive_as();

  std::shared_ptr<detail::SocketCore> core_;
};

/// Listens for clients of a server-rooted session type.
class SessionServerSocket {
public:
  static SessionServerSocket tcp(SessionType type, const TcpAddress& addr, RuntimeConfig cfg = {});
  static SessionServerSocket inproc(SessionType type, InProcRegistry& registry, const std::string& key,
                                    RuntimeConfig cfg = {});

  /// Performs the server-side handshake. Throws IncompatibleSession when the
  /// client's type is not dual to ours.
  SessionSocket accept(SessionScope scope = {});

  /// Bound TCP port (0 for in-process).
  std::uint16_t port() const;
  const SessionType& type() const noexcept { return type_; }
  void close() noexcept;

private:
  SessionServerSocket(SessionType type, std::unique_ptr<Acceptor> acceptor, RuntimeConfig cfg);

  SessionType type_;
  std::unique_ptr<Acceptor> acceptor_;
  RuntimeConfig cfg_;
};

/// Client-side handle on a remote service of a client-rooted session type.
class SessionService {
public:
  static SessionService tcp(SessionType type, const TcpAddress& addr, RuntimeConfig cfg = {});
  static SessionService inproc(SessionType type, InProcRegistry& registry, const std::string& key,
                               RuntimeConfig cfg = {});

  /// Connects and performs the client-side handshake. Throws
  /// IncompatibleSession when the server rejects our type.
  SessionSocket request(SessionScope scope = {});

  const SessionType& type() const noexcept { return type_; }

private:
  SessionService(SessionType type, std::unique_ptr<Connector> connector, RuntimeConfig cfg);

  SessionType type_;
  std::unique_ptr<Connector> connector_;
  RuntimeConfig cfg_;
};

/// Sends `m` on every socket in order after checking that every residual
/// permits it. Earlier peers get copies; the last peer gets `m` itself.
void multicast_send(std::span<SessionSocket* const> sockets, Message m);
inline void multicast_send(std::initializer_list<SessionSocket*> sockets, Message m) {
  multicast_send(std::span<SessionSocket* const>(sockets.begin(), sockets.size()), std::move(m));
}

/// Sender side of session iteration over one or more sockets. Each call to
/// `next` transmits the flag to every peer; a false flag leaves the loop.
class OutLoop {
public:
  explicit OutLoop(std::span<SessionSocket* const> sockets);
  OutLoop(std::initializer_list<SessionSocket*> sockets) : OutLoop(std::vector<SessionSocket*>(sockets)) {}
  explicit OutLoop(std::vector<SessionSocket*> sockets);

  bool next(bool flag);
  bool done() const noexcept { return done_; }

private:
  std::vector<SessionSocket*> sockets_;
  bool entered_ = false;
  bool done_ = false;
};

/// Receiver side of session iteration. `next` reads one flag from every
/// socket; the flags must agree.
class InLoop {
public:
  explicit InLoop(std::span<SessionSocket* const> sockets);
  InLoop(std::initializer_list<SessionSocket*> sockets) : InLoop(std::vector<SessionSocket*>(sockets)) {}
  explicit InLoop(std::vector<SessionSocket*> sockets);

  bool next();
  bool done() const noexcept { return done_; }

private:
  std::vector<SessionSocket*> sockets_;
  bool entered_ = false;
  bool done_ = false;
};

/// Runs `body` while `cond` holds, telling every peer each decision before
/// acting on it. An exception escaping `body` or `cond` fails every scope
/// involved and is rethrown.
void outwhile(std::span<SessionSocket* const> sockets, const std::function<bool()>& cond,
              const std::function<void()>& body);
inline void outwhile(std::initializer_list<SessionSocket*> sockets, const std::function<bool()>& cond,
                     const std::function<void()>& body) {
  outwhile(std::span<SessionSocket* const>(sockets.begin(), sockets.size()), cond, body);
}

/// Runs `body` for as long as the peers' flags say so.
void inwhile(std::span<SessionSocket* const> sockets, const std::function<void()>& body);
inline void inwhile(std::initializer_list<SessionSocket*> sockets, const std::function<void()>& body) {
  inwhile(std::span<SessionSocket* const>(sockets.begin(), sockets.size()), body);
}

} // namespace session

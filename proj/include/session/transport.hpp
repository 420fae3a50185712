#pragma once

#include "session/protocol.hpp"
#include "session/wire.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

namespace session {

/// How the in-process transport moves array payloads. TCP always copies.
enum class Mode : std::uint8_t {
  Copy,     // serialize on send, deserialize on receive
  ZeroCopy, // hand the value itself to the peer
};

enum class TransportKind : std::uint8_t { Tcp, InProcess };

struct RuntimeConfig {
  std::size_t queue_capacity = 16;
  std::chrono::milliseconds watchdog{30'000};
  Mode mode = Mode::Copy;

  /// Defaults overridden by SESSION_QUEUE_CAPACITY, SESSION_WATCHDOG_MS and
  /// SESSION_MODE (`copy` | `zerocopy`).
  static RuntimeConfig from_env();
};

/// One end of a connected, handshaken transport. Frames are delivered in
/// FIFO order. `send` and `receive` are called by the owning socket only;
/// `abort` may be called from any thread.
class Channel {
public:
  virtual ~Channel() = default;

  /// Blocks while the transport is full. Throws SessionFailure when the
  /// peer is gone or the watchdog expires.
  virtual void send(wire::Frame frame) = 0;

  /// Blocks until a frame arrives. Throws SessionFailure when the peer is
  /// gone or the watchdog expires.
  virtual wire::Frame receive() = 0;

  /// Orderly shutdown after a completed session.
  virtual void close() noexcept = 0;

  /// Tears the transport down, first trying to deliver a FAILURE frame when
  /// `signal_failure` is set. Never blocks on a full transport.
  virtual void abort(bool signal_failure) noexcept = 0;

  virtual TransportKind kind() const noexcept = 0;
};

/// Server side of a transport: yields channels whose handshake succeeded.
class Acceptor {
public:
  virtual ~Acceptor() = default;
  /// Throws IncompatibleSession when the client's type is not dual to `local`.
  virtual std::unique_ptr<Channel> accept(const SessionType& local) = 0;
  virtual void close() noexcept = 0;
};

class Connector {
public:
  virtual ~Connector() = default;
  /// Throws IncompatibleSession when the server rejects `local`.
  virtual std::unique_ptr<Channel> connect(const SessionType& local) = 0;
};

// In-process transport --------------------------------------------------------

/// Maps server names to listeners within one process.
class InProcRegistry {
public:
  InProcRegistry();
  ~InProcRegistry();
  InProcRegistry(const InProcRegistry&) = delete;
  InProcRegistry& operator=(const InProcRegistry&) = delete;

  /// Scalar elements serialized by copy-mode sends through this registry.
  std::uint64_t copied_elements() const noexcept;

  struct State;
  std::shared_ptr<State> state() const noexcept { return state_; }

private:
  std::shared_ptr<State> state_;
};

/// Binds `key`; throws std::invalid_argument if it is already bound.
std::unique_ptr<Acceptor> make_inproc_acceptor(InProcRegistry& registry, const std::string& key,
                                               const RuntimeConfig& cfg);
/// Waits up to the watchdog for `key` to be bound.
std::unique_ptr<Connector> make_inproc_connector(InProcRegistry& registry, const std::string& key,
                                                 const RuntimeConfig& cfg);

// TCP transport ---------------------------------------------------------------

struct TcpAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Parses `host:port`.
TcpAddress parse_endpoint(const std::string& text);

/// Listens on `addr`; port 0 picks an ephemeral port, see `bound_port`.
std::unique_ptr<Acceptor> make_tcp_acceptor(const TcpAddress& addr, const RuntimeConfig& cfg);
std::uint16_t bound_port(const Acceptor& acceptor);
/// Retries refused connections until the watchdog expires.
std::unique_ptr<Connector> make_tcp_connector(const TcpAddress& addr, const RuntimeConfig& cfg);

} // namespace session

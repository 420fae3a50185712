#include "session/errors.hpp"
#include "session/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

namespace session {

namespace {

using Clock = std::chrono::steady_clock;

std::string errno_text(int err) { return std::strerror(err); }

class Fd {
public:
  Fd() = default;
  explicit Fd(int fd) noexcept : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }
  int get() const noexcept { return fd_; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

private:
  int fd_ = -1;
};

void configure_stream(int fd, std::chrono::milliseconds watchdog) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(watchdog.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((watchdog.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

sockaddr_in resolve(const TcpAddress& addr) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const char* host = addr.host.empty() ? nullptr : addr.host.c_str();
  if (int rc = ::getaddrinfo(host, nullptr, &hints, &res); rc != 0)
    throw std::runtime_error("cannot resolve '" + addr.host + "': " + ::gai_strerror(rc));
  sockaddr_in sa{};
  std::memcpy(&sa, res->ai_addr, sizeof sa);
  ::freeaddrinfo(res);
  sa.sin_port = htons(addr.port);
  return sa;
}

// Buffered byte stream over a connected socket. Reads and writes come from
// the owning thread; `abort` may race with them and only uses shutdown().
class TcpStream final : public wire::ByteStream {
public:
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {}

  std::size_t read_some(std::span<std::uint8_t> out) override {
    if (begin_ == end_) {
      for (;;) {
        ssize_t n = ::recv(fd_.get(), buf_, sizeof buf_, 0);
        if (n > 0) {
          begin_ = 0;
          end_ = static_cast<std::size_t>(n);
          break;
        }
        if (n == 0) return 0;
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw SessionFailure("watchdog expired while receiving");
        if (errno == ECONNRESET || errno == ENOTCONN) return 0;
        throw SessionFailure("connection lost: " + errno_text(errno));
      }
    }
    std::size_t n = std::min(out.size(), end_ - begin_);
    std::memcpy(out.data(), buf_ + begin_, n);
    begin_ += n;
    return n;
  }

  void write_all(std::span<const std::uint8_t> data) override {
    std::lock_guard lock(write_mu_);
    write_locked(data);
  }

  // Best effort: gives up if a writer holds the lock or the buffer is full.
  void try_write_nonblocking(std::span<const std::uint8_t> data) noexcept {
    std::unique_lock lock(write_mu_, std::try_to_lock);
    if (!lock.owns_lock()) return;
    (void)::send(fd_.get(), data.data(), data.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
  }

  void shutdown(int how) noexcept { ::shutdown(fd_.get(), how); }

private:
  void write_locked(std::span<const std::uint8_t> data) {
    while (!data.empty()) {
      ssize_t n = ::send(fd_.get(), data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw SessionFailure("watchdog expired while sending");
        throw SessionFailure("connection lost: " + errno_text(errno));
      }
      data = data.subspan(static_cast<std::size_t>(n));
    }
  }

  Fd fd_;
  std::mutex write_mu_;
  std::uint8_t buf_[64 * 1024];
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
};

class TcpChannel final : public Channel {
public:
  explicit TcpChannel(std::unique_ptr<TcpStream> stream) : stream_(std::move(stream)) {}

  void send(wire::Frame frame) override {
    wire::Bytes bytes;
    wire::encode_frame(frame, bytes);
    stream_->write_all(bytes);
  }

  wire::Frame receive() override {
    try {
      return wire::decode_frame(*stream_);
    } catch (const TruncatedFrame&) {
      throw SessionFailure("connection lost");
    } catch (const SessionFailure&) {
      throw;
    } catch (const WireError& e) {
      throw SessionFailure(std::string("corrupt frame: ") + e.what());
    }
  }

  void close() noexcept override { stream_->shutdown(SHUT_WR); }

  void abort(bool signal_failure) noexcept override {
    if (signal_failure) {
      const std::uint8_t failure = wire::kTagFailure;
      stream_->try_write_nonblocking({&failure, 1});
    }
    stream_->shutdown(SHUT_RDWR);
  }

  TransportKind kind() const noexcept override { return TransportKind::Tcp; }

private:
  std::unique_ptr<TcpStream> stream_;
};

} // namespace

class TcpAcceptorImpl final : public Acceptor {
public:
  TcpAcceptorImpl(const TcpAddress& addr, const RuntimeConfig& cfg) : cfg_(cfg) {
    sockaddr_in sa = resolve(addr);
    fd_ = Fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (fd_.get() < 0) throw std::runtime_error("socket: " + errno_text(errno));
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
      throw std::runtime_error("bind " + addr.host + ":" + std::to_string(addr.port) + ": " + errno_text(errno));
    if (::listen(fd_.get(), 64) != 0) throw std::runtime_error("listen: " + errno_text(errno));
    socklen_t len = sizeof sa;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
  }

  std::unique_ptr<Channel> accept(const SessionType& local) override {
    pollfd pfd{fd_.get(), POLLIN, 0};
    int rc;
    do {
      rc = ::poll(&pfd, 1, static_cast<int>(cfg_.watchdog.count()));
    } while (rc < 0 && errno == EINTR);
    if (rc == 0) throw SessionFailure("watchdog expired while accepting on port " + std::to_string(port_));
    if (rc < 0) throw SessionFailure("poll: " + errno_text(errno));

    Fd conn(::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC));
    if (conn.get() < 0) throw SessionFailure("accept: " + errno_text(errno));
    configure_stream(conn.get(), cfg_.watchdog);
    auto stream = std::make_unique<TcpStream>(std::move(conn));
    bool ok;
    try {
      ok = wire::handshake_server(*stream, local);
    } catch (const TruncatedFrame&) {
      throw SessionFailure("connection lost during handshake");
    }
    if (!ok) {
      stream->shutdown(SHUT_RDWR);
      throw IncompatibleSession("incompatible session: client type is not the dual of '" + canonicalize(local) + "'");
    }
    return std::make_unique<TcpChannel>(std::move(stream));
  }

  void close() noexcept override { fd_.reset(); }

  std::uint16_t port() const noexcept { return port_; }

private:
  Fd fd_;
  std::uint16_t port_ = 0;
  RuntimeConfig cfg_;
};

namespace {

class TcpConnector final : public Connector {
public:
  TcpConnector(TcpAddress addr, const RuntimeConfig& cfg) : addr_(std::move(addr)), cfg_(cfg) {}

  std::unique_ptr<Channel> connect(const SessionType& local) override {
    sockaddr_in sa = resolve(addr_);
    const auto deadline = Clock::now() + cfg_.watchdog;
    Fd fd;
    for (;;) {
      fd = Fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
      if (fd.get() < 0) throw std::runtime_error("socket: " + errno_text(errno));
      if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0) break;
      int err = errno;
      if ((err != ECONNREFUSED && err != EINTR) || Clock::now() >= deadline)
        throw SessionFailure("connect " + addr_.host + ":" + std::to_string(addr_.port) + ": " + errno_text(err));
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    configure_stream(fd.get(), cfg_.watchdog);
    auto stream = std::make_unique<TcpStream>(std::move(fd));
    bool ok;
    try {
      ok = wire::handshake_client(*stream, local);
    } catch (const TruncatedFrame&) {
      throw SessionFailure("connection lost during handshake");
    }
    if (!ok) {
      stream->shutdown(SHUT_RDWR);
      throw IncompatibleSession("incompatible session: server at " + addr_.host + ":" + std::to_string(addr_.port) +
                                " rejected '" + canonicalize(local) + "'");
    }
    return std::make_unique<TcpChannel>(std::move(stream));
  }

private:
  TcpAddress addr_;
  RuntimeConfig cfg_;
};

} // namespace

TcpAddress parse_endpoint(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint must be host:port, got '" + text + "'");
  TcpAddress addr;
  addr.host = text.substr(0, colon);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in endpoint '" + text + "'");
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range in '" + text + "'");
  addr.port = static_cast<std::uint16_t>(port);
  return addr;
}

std::unique_ptr<Acceptor> make_tcp_acceptor(const TcpAddress& addr, const RuntimeConfig& cfg) {
  return std::make_unique<TcpAcceptorImpl>(addr, cfg);
}

std::uint16_t bound_port(const Acceptor& acceptor) {
  if (auto* tcp = dynamic_cast<const TcpAcceptorImpl*>(&acceptor)) return tcp->port();
  return 0;
}

std::unique_ptr<Connector> make_tcp_connector(const TcpAddress& addr, const RuntimeConfig& cfg) {
  return std::make_unique<TcpConnector>(addr, cfg);
}

} // namespace session

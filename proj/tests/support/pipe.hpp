#pragma once

// In-memory duplex byte stream for driving handshakes without sockets.

#include "session/wire.hpp"

#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>

namespace testsupport {

class BytePipe {
public:
  void write(std::span<const std::uint8_t> data) {
    std::lock_guard lock(mu_);
    bytes_.insert(bytes_.end(), data.begin(), data.end());
    cv_.notify_all();
  }
  std::size_t read(std::span<std::uint8_t> out) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !bytes_.empty(); });
    const std::size_t n = std::min(out.size(), bytes_.size());
    std::copy_n(bytes_.begin(), n, out.begin());
    bytes_.erase(bytes_.begin(), bytes_.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }
  std::vector<std::uint8_t> log; // everything ever written, for fixtures

private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint8_t> bytes_;
  bool closed_ = false;
};

class PipeEnd final : public session::wire::ByteStream {
public:
  PipeEnd(std::shared_ptr<BytePipe> in, std::shared_ptr<BytePipe> out) : in_(std::move(in)), out_(std::move(out)) {}
  std::size_t read_some(std::span<std::uint8_t> out) override { return in_->read(out); }
  void write_all(std::span<const std::uint8_t> data) override {
    written.insert(written.end(), data.begin(), data.end());
    out_->write(data);
  }
  void close() { out_->close(); }
  std::vector<std::uint8_t> written;

private:
  std::shared_ptr<BytePipe> in_, out_;
};

inline std::pair<PipeEnd, PipeEnd> make_duplex() {
  auto a = std::make_shared<BytePipe>();
  auto b = std::make_shared<BytePipe>();
  return {PipeEnd(a, b), PipeEnd(b, a)};
}

} // namespace testsupport

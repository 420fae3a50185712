#pragma once

#include "session/message.hpp"
#include "session/protocol.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace session::wire {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kTagInt = 0x01;
inline constexpr std::uint8_t kTagDouble = 0x02;
inline constexpr std::uint8_t kTagDoubleArray = 0x03;
inline constexpr std::uint8_t kTagDoubleMatrix = 0x04;
inline constexpr std::uint8_t kTagParticleArray = 0x05;
inline constexpr std::uint8_t kTagFlag = 0x06;
inline constexpr std::uint8_t kTagFailure = 0xFF;

inline constexpr std::array<std::uint8_t, 4> kHandshakeMagic{0x53, 0x4A, 0x50, 0x31}; // "SJP1"
inline constexpr std::uint8_t kAccept = 0x01;
inline constexpr std::uint8_t kReject = 0x00;

/// Longest canonical type a server will read during the handshake.
inline constexpr std::uint32_t kMaxHandshakeLength = 1u << 20;

class ByteSource {
public:
  virtual ~ByteSource() = default;
  /// Reads at least one byte unless the source is exhausted; returns 0 at end.
  virtual std::size_t read_some(std::span<std::uint8_t> out) = 0;
};

class ByteSink {
public:
  virtual ~ByteSink() = default;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
};

class ByteStream : public ByteSource, public ByteSink {};

/// Reads from a fixed byte range.
class SpanSource final : public ByteSource {
public:
  explicit SpanSource(std::span<const std::uint8_t> bytes) noexcept : bytes_(bytes) {}
  std::size_t read_some(std::span<std::uint8_t> out) override;
  std::size_t remaining() const noexcept { return bytes_.size() - offset_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

struct Flag {
  bool value = false;
  friend bool operator==(const Flag&, const Flag&) = default;
};
struct Failure {
  friend bool operator==(const Failure&, const Failure&) = default;
};

/// Anything that can arrive on a session.
using Frame = std::variant<Message, Flag, Failure>;

/// Appends the frame for `m`. Throws WireError when a length exceeds 2^32-1.
void encode_message(const Message& m, Bytes& out);
Bytes encode_message(const Message& m);

/// Throws UnknownTag, TruncatedFrame, FailureSignal (tag 0xFF), or
/// WireError for a flag frame.
Message decode_message(ByteSource& in);

Bytes encode_flag(bool value);
bool decode_flag(ByteSource& in);

Bytes encode_failure();

void encode_frame(const Frame& f, Bytes& out);
/// Decodes any frame. Throws UnknownTag or TruncatedFrame.
Frame decode_frame(ByteSource& in);

/// Client hello: magic, u32 big-endian length, canonical type text.
Bytes encode_hello(const SessionType& local);
/// Reads a client hello and returns the canonical type text. Throws
/// HandshakeError on bad magic or oversized length, TruncatedFrame on EOF.
std::string read_hello(ByteSource& in);

/// Sends the hello and waits for the verdict byte.
bool handshake_client(ByteStream& stream, const SessionType& local);
/// Reads the hello, replies accept iff the remote type is the dual of
/// `local`. An unparseable remote type is rejected and rethrown.
bool handshake_server(ByteStream& stream, const SessionType& local);

} // namespace session::wire

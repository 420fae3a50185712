#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace session {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed protocol source. `position` is a byte offset into the text
/// handed to the parser (after comment stripping, offsets are unchanged).
class ParseError : public Error {
public:
  ParseError(std::string what, std::size_t position)
      : Error(what + " at offset " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// Unresolved or cyclic `@(name)` reference.
class ExpansionError : public Error {
public:
  using Error::Error;
};

/// An operation that the residual session type does not permit.
class ProtocolViolation : public Error {
public:
  ProtocolViolation(std::string expected, std::string attempted)
      : Error("protocol violation: expected " + expected + ", attempted " + attempted),
        expected_(std::move(expected)), attempted_(std::move(attempted)) {}

  const std::string& expected() const noexcept { return expected_; }
  const std::string& attempted() const noexcept { return attempted_; }

private:
  std::string expected_;
  std::string attempted_;
};

/// Codec errors.
class WireError : public Error {
public:
  using Error::Error;
};

class UnknownTag : public WireError {
public:
  explicit UnknownTag(unsigned tag)
      : WireError("unknown frame tag 0x" + hex(tag)), tag_(tag) {}
  unsigned tag() const noexcept { return tag_; }

private:
  static std::string hex(unsigned v) {
    static constexpr char digits[] = "0123456789ABCDEF";
    return {digits[(v >> 4) & 0xF], digits[v & 0xF]};
  }
  unsigned tag_;
};

/// The byte source ended inside a frame. `consumed == 0` means it ended
/// cleanly on a frame boundary.
class TruncatedFrame : public WireError {
public:
  explicit TruncatedFrame(std::size_t consumed)
      : WireError("truncated frame after " + std::to_string(consumed) + " bytes"),
        consumed_(consumed) {}
  std::size_t consumed() const noexcept { return consumed_; }

private:
  std::size_t consumed_;
};

/// A FAILURE frame (0xFF) was decoded where a message or flag was expected.
class FailureSignal : public WireError {
public:
  FailureSignal() : WireError("peer signalled failure") {}
};

class HandshakeError : public WireError {
public:
  using WireError::WireError;
};

/// The peers' session types are not dual; raised on both ends.
class IncompatibleSession : public Error {
public:
  using Error::Error;
};

/// The session (or a session in the same scope) failed: the peer signalled
/// failure, the connection was lost, or the watchdog expired.
class SessionFailure : public Error {
public:
  using Error::Error;
};

/// The frame on the wire does not carry the kind the monitor expects.
class TypeTagMismatch : public SessionFailure {
public:
  using SessionFailure::SessionFailure;
};

/// Multicast `inwhile` peers sent differing iteration flags.
class FlagDisagreement : public SessionFailure {
public:
  using SessionFailure::SessionFailure;
};

/// A session socket was entered by a second thread while in use.
class ConcurrentAccess : public Error {
public:
  ConcurrentAccess() : Error("session socket used concurrently from two threads") {}
};

} // namespace session

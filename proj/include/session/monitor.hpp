#pragma once

#include "session/protocol.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace session {

struct Action {
  enum class Kind : std::uint8_t {
    Send,
    Receive,
    EnterOutWhile,
    EnterInWhile,
    LoopContinue,
    LoopExit,
    Finish,
  };

  Kind kind = Kind::Finish;
  MessageKind message = MessageKind::Int; // Send, Receive

  static Action send(MessageKind m) { return {Kind::Send, m}; }
  static Action receive(MessageKind m) { return {Kind::Receive, m}; }
  static Action enter_outwhile() { return {Kind::EnterOutWhile, {}}; }
  static Action enter_inwhile() { return {Kind::EnterInWhile, {}}; }
  static Action loop_continue() { return {Kind::LoopContinue, {}}; }
  static Action loop_exit() { return {Kind::LoopExit, {}}; }
  static Action finish() { return {Kind::Finish, {}}; }

  friend bool operator==(const Action& a, const Action& b) noexcept {
    if (a.kind != b.kind) return false;
    return (a.kind != Kind::Send && a.kind != Kind::Receive) || a.message == b.message;
  }
};

std::string to_string(const Action& a);

/// The residual-type monitor: the not-yet-performed suffix of an expanded
/// session type plus the stack of loop bodies currently entered.
///
/// Loop words are `enter (body continue)* [body] exit`: exit is permitted at
/// the start of a body pass (flag false) or after a complete pass, continue
/// only after a complete pass.
class MonitorState {
public:
  /// `st` must be expanded; a leading Begin is skipped.
  explicit MonitorState(SessionType st);

  bool permits(const Action& a) const noexcept;

  /// Applies `a` in place. Throws ProtocolViolation and leaves the state
  /// unchanged when `a` is not permitted.
  void apply(const Action& a);

  /// Pure form of `apply`.
  MonitorState advance(const Action& a) const {
    MonitorState next = *this;
    next.apply(a);
    return next;
  }

  /// Next node of the innermost sequence, or nullptr at the end of it.
  const Node* head() const noexcept;

  /// Residual is End with no loop entered.
  bool complete() const noexcept { return frames_.size() == 1 && head() == nullptr; }

  std::size_t loop_depth() const noexcept { return frames_.size() - 1; }

  /// Suffix of the outermost sequence, starting at the node in progress.
  SessionType residual() const;

  /// Human-readable description of what the monitor would accept next.
  std::string expected() const;

  const SessionType& declared() const noexcept { return *type_; }

  friend bool operator==(const MonitorState& a, const MonitorState& b) noexcept;

private:
  struct Frame {
    const std::vector<Node>* seq;
    std::size_t pos;
  };

  std::shared_ptr<const SessionType> type_;
  std::vector<Frame> frames_;
};

} // namespace session

#include "session/monitor.hpp"

#include "session/errors.hpp"

#include <stdexcept>

namespace session {

std::string to_string(const Action& a) {
  switch (a.kind) {
  case Action::Kind::Send: return "send(" + std::string(to_string(a.message)) + ")";
  case Action::Kind::Receive: return "receive(" + std::string(to_string(a.message)) + ")";
  case Action::Kind::EnterOutWhile: return "enter-outwhile";
  case Action::Kind::EnterInWhile: return "enter-inwhile";
  case Action::Kind::LoopContinue: return "loop-continue";
  case Action::Kind::LoopExit: return "loop-exit";
  case Action::Kind::Finish: return "finish";
  }
  return "?";
}

MonitorState::MonitorState(SessionType st) : type_(std::make_shared<const SessionType>(std::move(st))) {
  if (!type_->expanded()) throw std::invalid_argument("monitor requires an expanded session type");
  validate(*type_);
  frames_.push_back({&type_->nodes, type_->has_begin() ? std::size_t{1} : std::size_t{0}});
}

const Node* MonitorState::head() const noexcept {
  const Frame& top = frames_.back();
  return top.pos < top.seq->size() ? &(*top.seq)[top.pos] : nullptr;
}

bool MonitorState::permits(const Action& a) const noexcept {
  const Node* h = head();
  const Frame& top = frames_.back();
  switch (a.kind) {
  case Action::Kind::Send: return h && h->kind == Node::Kind::Out && h->message == a.message;
  case Action::Kind::Receive: return h && h->kind == Node::Kind::In && h->message == a.message;
  case Action::Kind::EnterOutWhile: return h && h->kind == Node::Kind::OutWhile;
  case Action::Kind::EnterInWhile: return h && h->kind == Node::Kind::InWhile;
  case Action::Kind::LoopContinue: return loop_depth() > 0 && h == nullptr;
  case Action::Kind::LoopExit: return loop_depth() > 0 && (top.pos == 0 || h == nullptr);
  case Action::Kind::Finish: return complete();
  }
  return false;
}

void MonitorState::apply(const Action& a) {
  if (!permits(a)) throw ProtocolViolation(expected(), to_string(a));
  Frame& top = frames_.back();
  switch (a.kind) {
  case Action::Kind::Send:
  case Action::Kind::Receive: ++top.pos; break;
  case Action::Kind::EnterOutWhile:
  case Action::Kind::EnterInWhile: {
    const Node* loop = head();
    frames_.push_back({&loop->body, 0});
    break;
  }
  case Action::Kind::LoopContinue: top.pos = 0; break;
  case Action::Kind::LoopExit:
    frames_.pop_back();
    ++frames_.back().pos;
    break;
  case Action::Kind::Finish: break;
  }
}

SessionType MonitorState::residual() const {
  const Frame& root = frames_.front();
  SessionType st;
  st.nodes.assign(root.seq->begin() + static_cast<std::ptrdiff_t>(root.pos), root.seq->end());
  return st;
}

std::string MonitorState::expected() const {
  const Node* h = head();
  if (h) {
    std::string what = canonicalize(SessionType{{*h}});
    if (loop_depth() > 0 && frames_.back().pos == 0) what += " or loop-exit";
    return what;
  }
  if (loop_depth() > 0) return "loop-continue or loop-exit";
  return "end";
}

bool operator==(const MonitorState& a, const MonitorState& b) noexcept {
  if (a.frames_.size() != b.frames_.size()) return false;
  for (std::size_t i = 0; i < a.frames_.size(); ++i)
    if (a.frames_[i].pos != b.frames_[i].pos) return false;
  return a.type_ == b.type_ || *a.type_ == *b.type_;
}

} // namespace session

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace session {

enum class MessageKind : std::uint8_t {
  Int = 0x01,
  Double = 0x02,
  DoubleArray = 0x03,
  DoubleMatrix = 0x04,
  ParticleArray = 0x05,
};

/// Surface spelling used by the canonical form (`int`, `double[]`, ...).
std::string_view to_string(MessageKind kind) noexcept;

enum class Role : std::uint8_t { Client, Server };

/// One element of a session type. End is implicit at the end of a sequence.
struct Node {
  enum class Kind : std::uint8_t { Begin, Out, In, OutWhile, InWhile, Ref };

  Kind kind = Kind::Out;
  Role role = Role::Client;              // Begin
  MessageKind message = MessageKind::Int; // Out, In
  std::vector<Node> body;                // OutWhile, InWhile
  std::string name;                      // Ref

  static Node begin(Role r) { return Node{Kind::Begin, r, {}, {}, {}}; }
  static Node out(MessageKind m) { return Node{Kind::Out, {}, m, {}, {}}; }
  static Node in(MessageKind m) { return Node{Kind::In, {}, m, {}, {}}; }
  static Node out_while(std::vector<Node> b) { return Node{Kind::OutWhile, {}, {}, std::move(b), {}}; }
  static Node in_while(std::vector<Node> b) { return Node{Kind::InWhile, {}, {}, std::move(b), {}}; }
  static Node ref(std::string n) { return Node{Kind::Ref, {}, {}, {}, std::move(n)}; }

  bool is_loop() const noexcept { return kind == Kind::OutWhile || kind == Kind::InWhile; }

  /// Compares only the fields meaningful for the node's kind.
  friend bool operator==(const Node& a, const Node& b) noexcept;
};

/// A session type: an ordered sequence of nodes followed by an implicit End.
///
/// Invariants (checked by `validate`): at most one Begin and only in first
/// position; loop bodies hold no Begin.
struct SessionType {
  std::vector<Node> nodes;

  bool empty() const noexcept { return nodes.empty(); }
  bool has_begin() const noexcept { return !nodes.empty() && nodes.front().kind == Node::Kind::Begin; }
  bool expanded() const noexcept;

  friend bool operator==(const SessionType&, const SessionType&) = default;
};

/// Named sub-protocols, e.g. `protocol matrix_size !<int>`.
using ProtocolEnv = std::map<std::string, SessionType, std::less<>>;

/// Parses a protocol body such as `sbegin.?(int).!<int>`. Whitespace and
/// `//` / `/* */` comments are ignored. Throws ParseError.
SessionType parse(std::string_view text);

/// Parses a file of `protocol <name> { <body> }` or `protocol <name> <body>`
/// declarations. Throws ParseError.
ProtocolEnv parse_protocol_file(std::string_view text);

/// Inlines every `@(name)` reference. Throws ExpansionError on an unknown
/// name, a cycle, or nesting deeper than `max_depth`.
SessionType expand(const SessionType& st, const ProtocolEnv& env, int max_depth = 64);

/// Swaps client/server and input/output throughout. Involutive.
SessionType dual(const SessionType& st);

bool is_dual(const SessionType& a, const SessionType& b);

/// Whitespace-free text form; `parse(canonicalize(st)) == st`.
std::string canonicalize(const SessionType& st);

/// Throws std::invalid_argument naming the first broken structural invariant.
void validate(const SessionType& st);

} // namespace session

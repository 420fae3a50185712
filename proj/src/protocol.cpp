#include "session/protocol.hpp"

#include "session/errors.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>

namespace session {

std::string_view to_string(MessageKind kind) noexcept {
  switch (kind) {
  case MessageKind::Int: return "int";
  case MessageKind::Double: return "double";
  case MessageKind::DoubleArray: return "double[]";
  case MessageKind::DoubleMatrix: return "double[][]";
  case MessageKind::ParticleArray: return "Particle[]";
  }
  return "?";
}

namespace {

bool has_ref(const std::vector<Node>& seq) {
  return std::any_of(seq.begin(), seq.end(), [](const Node& n) {
    return n.kind == Node::Kind::Ref || (n.is_loop() && has_ref(n.body));
  });
}

// Comments become spaces so byte offsets survive.
std::string strip_comments(std::string_view text) {
  std::string out(text);
  std::size_t i = 0;
  while (i < out.size()) {
    if (out.compare(i, 2, "//") == 0) {
      while (i < out.size() && out[i] != '\n') out[i++] = ' ';
    } else if (out.compare(i, 2, "/*") == 0) {
      std::size_t start = i;
      std::size_t end = out.find("*/", i + 2);
      if (end == std::string::npos) throw ParseError("unterminated comment", start);
      for (; i < end + 2; ++i)
        if (out[i] != '\n') out[i] = ' ';
    } else {
      ++i;
    }
  }
  return out;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Parser {
public:
  Parser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  SessionType parse_type() {
    SessionType st;
    skip_ws();
    if (at_end()) return st;
    if (auto role = try_begin()) {
      st.nodes.push_back(Node::begin(*role));
      skip_ws();
      if (at_end()) return st;
      expect('.');
    }
    parse_items(st.nodes);
    skip_ws();
    if (!at_end()) fail("unexpected '" + std::string(1, peek()) + "'");
    return st;
  }

private:
  void parse_items(std::vector<Node>& out) {
    for (;;) {
      out.push_back(parse_item());
      skip_ws();
      if (at_end() || peek() != '.') return;
      ++pos_;
    }
  }

  Node parse_item() {
    skip_ws();
    if (at_end()) fail("expected protocol item");
    std::size_t start = pos_;
    char c = peek();
    if (c == '!' || c == '?') {
      ++pos_;
      skip_ws();
      if (at_end()) fail("expected '<', '(' or '[' after '" + std::string(1, c) + "'");
      char d = peek();
      if (c == '!' && d == '<') {
        ++pos_;
        MessageKind m = parse_mtype();
        expect('>');
        return Node::out(m);
      }
      if (c == '?' && d == '(') {
        ++pos_;
        MessageKind m = parse_mtype();
        expect(')');
        return Node::in(m);
      }
      if (d == '[') {
        ++pos_;
        std::vector<Node> body = parse_body(start);
        return c == '!' ? Node::out_while(std::move(body)) : Node::in_while(std::move(body));
      }
      fail("unexpected '" + std::string(1, d) + "' after '" + std::string(1, c) + "'");
    }
    if (c == '@') {
      ++pos_;
      expect('(');
      skip_ws();
      std::string name = parse_ident();
      if (name.empty()) fail("expected protocol name");
      expect(')');
      return Node::ref(std::move(name));
    }
    if (try_begin()) {
      pos_ = start;
      fail("begin must be the first item");
    }
    fail("unknown token");
  }

  std::vector<Node> parse_body(std::size_t open) {
    std::vector<Node> body;
    skip_ws();
    if (!at_end() && peek() != ']') parse_items(body);
    skip_ws();
    if (at_end()) {
      pos_ = open;
      fail("unbalanced loop bracket");
    }
    expect(']');
    if (at_end() || peek() != '*') fail("expected '*' after ']'");
    ++pos_;
    return body;
  }

  MessageKind parse_mtype() {
    skip_ws();
    std::size_t start = pos_;
    std::string name = parse_ident();
    while (text_.substr(pos_, 2) == "[]") {
      name += "[]";
      pos_ += 2;
    }
    if (name == "int") return MessageKind::Int;
    if (name == "double" || name == "Double") return MessageKind::Double;
    if (name == "double[]") return MessageKind::DoubleArray;
    if (name == "double[][]") return MessageKind::DoubleMatrix;
    if (name == "Particle[]") return MessageKind::ParticleArray;
    pos_ = start;
    fail("unknown message type '" + name + "'");
  }

  std::optional<Role> try_begin() {
    std::size_t save = pos_;
    std::string word = parse_ident();
    if (word == "cbegin") return Role::Client;
    if (word == "sbegin") return Role::Server;
    pos_ = save;
    return std::nullopt;
  }

  std::string parse_ident() {
    std::size_t start = pos_;
    if (at_end() || !ident_start(peek())) return {};
    while (!at_end() && ident_char(peek())) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
    skip_ws();
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, base_ + pos_); }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

void expand_into(const std::vector<Node>& seq, const ProtocolEnv& env, std::vector<std::string>& stack,
                 int max_depth, std::vector<Node>& out) {
  for (const Node& n : seq) {
    switch (n.kind) {
    case Node::Kind::Ref: {
      if (std::find(stack.begin(), stack.end(), n.name) != stack.end())
        throw ExpansionError("cyclic protocol reference @(" + n.name + ")");
      if (static_cast<int>(stack.size()) >= max_depth)
        throw ExpansionError("protocol expansion deeper than " + std::to_string(max_depth));
      auto it = env.find(n.name);
      if (it == env.end()) throw ExpansionError("unresolved protocol reference @(" + n.name + ")");
      if (it->second.has_begin())
        throw ExpansionError("referenced protocol '" + n.name + "' contains a begin");
      stack.push_back(n.name);
      expand_into(it->second.nodes, env, stack, max_depth, out);
      stack.pop_back();
      break;
    }
    case Node::Kind::OutWhile:
    case Node::Kind::InWhile: {
      Node loop{n.kind, {}, {}, {}, {}};
      expand_into(n.body, env, stack, max_depth, loop.body);
      out.push_back(std::move(loop));
      break;
    }
    default:
      out.push_back(n);
    }
  }
}

std::vector<Node> dual_seq(const std::vector<Node>& seq) {
  std::vector<Node> out;
  out.reserve(seq.size());
  for (const Node& n : seq) {
    switch (n.kind) {
    case Node::Kind::Begin:
      out.push_back(Node::begin(n.role == Role::Client ? Role::Server : Role::Client));
      break;
    case Node::Kind::Out: out.push_back(Node::in(n.message)); break;
    case Node::Kind::In: out.push_back(Node::out(n.message)); break;
    case Node::Kind::OutWhile: out.push_back(Node::in_while(dual_seq(n.body))); break;
    case Node::Kind::InWhile: out.push_back(Node::out_while(dual_seq(n.body))); break;
    case Node::Kind::Ref: out.push_back(n); break;
    }
  }
  return out;
}

void canonical_seq(const std::vector<Node>& seq, std::string& out) {
  bool first = true;
  for (const Node& n : seq) {
    if (!first) out += '.';
    first = false;
    switch (n.kind) {
    case Node::Kind::Begin: out += n.role == Role::Client ? "cbegin" : "sbegin"; break;
    case Node::Kind::Out: out += "!<"; out += to_string(n.message); out += '>'; break;
    case Node::Kind::In: out += "?("; out += to_string(n.message); out += ')'; break;
    case Node::Kind::OutWhile:
    case Node::Kind::InWhile:
      out += n.kind == Node::Kind::OutWhile ? "![" : "?[";
      canonical_seq(n.body, out);
      out += "]*";
      break;
    case Node::Kind::Ref: out += "@("; out += n.name; out += ')'; break;
    }
  }
}

void validate_body(const std::vector<Node>& seq) {
  for (const Node& n : seq) {
    if (n.kind == Node::Kind::Begin) throw std::invalid_argument("begin inside a loop body");
    if (n.is_loop()) validate_body(n.body);
  }
}

} // namespace

bool operator==(const Node& a, const Node& b) noexcept {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
  case Node::Kind::Begin: return a.role == b.role;
  case Node::Kind::Out:
  case Node::Kind::In: return a.message == b.message;
  case Node::Kind::OutWhile:
  case Node::Kind::InWhile: return a.body == b.body;
  case Node::Kind::Ref: return a.name == b.name;
  }
  return false;
}

bool SessionType::expanded() const noexcept { return !has_ref(nodes); }

SessionType parse(std::string_view text) {
  std::string clean = strip_comments(text);
  return Parser(clean, 0).parse_type();
}

ProtocolEnv parse_protocol_file(std::string_view text) {
  std::string clean = strip_comments(text);
  std::string_view s = clean;
  ProtocolEnv env;

  auto is_keyword_at = [&](std::size_t i) {
    return s.compare(i, 8, "protocol") == 0 && (i == 0 || !ident_char(s[i - 1])) &&
           (i + 8 >= s.size() || !ident_char(s[i + 8]));
  };
  auto skip_ws = [&](std::size_t i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return i;
  };

  std::size_t i = skip_ws(0);
  while (i < s.size()) {
    if (!is_keyword_at(i)) throw ParseError("expected 'protocol'", i);
    i = skip_ws(i + 8);
    std::size_t name_start = i;
    while (i < s.size() && ident_char(s[i])) ++i;
    if (i == name_start || !ident_start(s[name_start])) throw ParseError("expected protocol name", name_start);
    std::string name(s.substr(name_start, i - name_start));
    i = skip_ws(i);

    std::size_t body_start = i;
    std::size_t body_end;
    std::size_t next;
    if (i < s.size() && s[i] == '{') {
      body_start = i + 1;
      body_end = s.find('}', body_start);
      if (body_end == std::string_view::npos) throw ParseError("unbalanced '{'", i);
      next = body_end + 1;
    } else {
      body_end = body_start;
      while (body_end < s.size() && !is_keyword_at(body_end)) ++body_end;
      next = body_end;
    }

    SessionType st = Parser(s.substr(body_start, body_end - body_start), body_start).parse_type();
    if (!env.emplace(name, std::move(st)).second) throw ParseError("duplicate protocol '" + name + "'", name_start);
    i = skip_ws(next);
  }
  return env;
}

SessionType expand(const SessionType& st, const ProtocolEnv& env, int max_depth) {
  std::vector<std::string> stack;
  SessionType out;
  expand_into(st.nodes, env, stack, max_depth, out.nodes);
  return out;
}

SessionType dual(const SessionType& st) { return SessionType{dual_seq(st.nodes)}; }

bool is_dual(const SessionType& a, const SessionType& b) { return dual(a) == b; }

std::string canonicalize(const SessionType& st) {
  std::string out;
  canonical_seq(st.nodes, out);
  return out;
}

void validate(const SessionType& st) {
  for (std::size_t i = 0; i < st.nodes.size(); ++i) {
    const Node& n = st.nodes[i];
    if (n.kind == Node::Kind::Begin && i != 0) throw std::invalid_argument("begin must be first");
    if (n.is_loop()) validate_body(n.body);
  }
}

} // namespace session

#include "session/errors.hpp"
#include "session/monitor.hpp"
#include "typegen.hpp"

#include <doctest.h>

using namespace session;

TEST_CASE("monitor: single send") {
  MonitorState m(parse("!<int>"));
  CHECK(m.permits(Action::send(MessageKind::Int)));
  m.apply(Action::send(MessageKind::Int));
  CHECK(m.complete());
  CHECK(m.residual() == SessionType{});
  CHECK(m.permits(Action::finish()));
}

TEST_CASE("monitor: mismatched action throws and leaves state") {
  MonitorState m(parse("!<int>"));
  const MonitorState before = m;
  try {
    m.apply(Action::receive(MessageKind::Int));
    FAIL("expected ProtocolViolation");
  } catch (const ProtocolViolation& e) {
    CHECK(e.expected().find("int") != std::string::npos);
    CHECK(e.attempted().find("receive") != std::string::npos);
  }
  CHECK(m == before);
  CHECK_FALSE(m.permits(Action::send(MessageKind::Double)));
  CHECK_FALSE(m.permits(Action::finish()));
}

TEST_CASE("monitor: leading begin is skipped") {
  MonitorState m(parse("sbegin.?(int).!<int>"));
  CHECK(m.residual() == parse("?(int).!<int>"));
  m.apply(Action::receive(MessageKind::Int));
  m.apply(Action::send(MessageKind::Int));
  CHECK(m.complete());
}

TEST_CASE("monitor: masterToWorker loop trace") {
  MonitorState m(parse("![!<double[]>.?(double[])]*"));
  m.apply(Action::enter_outwhile());
  CHECK(m.loop_depth() == 1);
  CHECK_FALSE(m.permits(Action::loop_continue()));
  m.apply(Action::send(MessageKind::DoubleArray));
  CHECK_FALSE(m.permits(Action::loop_exit())); // mid-body
  m.apply(Action::receive(MessageKind::DoubleArray));
  m.apply(Action::loop_exit());
  CHECK(m.complete());
}

TEST_CASE("monitor: loop continue re-enters the body") {
  MonitorState m(parse("?[?(int)]*.!<double>"));
  m.apply(Action::enter_inwhile());
  for (int i = 0; i < 3; ++i) {
    m.apply(Action::receive(MessageKind::Int));
    m.apply(Action::loop_continue());
  }
  m.apply(Action::loop_exit()); // flag false at the top of a pass
  CHECK(m.head()->kind == Node::Kind::Out);
  m.apply(Action::send(MessageKind::Double));
  CHECK(m.complete());
}

TEST_CASE("monitor: wrong loop direction") {
  MonitorState m(parse("![!<int>]*"));
  CHECK_FALSE(m.permits(Action::enter_inwhile()));
  CHECK_THROWS_AS(m.apply(Action::enter_inwhile()), ProtocolViolation);
  CHECK_THROWS_AS(m.apply(Action::loop_exit()), ProtocolViolation);
}

TEST_CASE("monitor: rejects unexpanded types") {
  CHECK_THROWS(MonitorState(parse("@(x)")));
}

TEST_CASE("monitor: residual shows the loop in progress") {
  MonitorState m(parse("![!<int>]*.?(int)"));
  m.apply(Action::enter_outwhile());
  CHECK(canonicalize(m.residual()) == "![!<int>]*.?(int)");
  m.apply(Action::send(MessageKind::Int));
  m.apply(Action::loop_exit());
  CHECK(canonicalize(m.residual()) == "?(int)");
}

namespace {

using testsupport::ReferenceMatcher;

struct Explorer {
  ReferenceMatcher ref;
  SessionType type;
  SessionType peer;
  std::vector<Action> alphabet = testsupport::alphabet();
  std::size_t max_len;
  std::size_t words = 0;

  Explorer(const SessionType& st, std::size_t len) : ref(st), type(st), peer(dual(st)), max_len(len) {}

  void run() {
    std::vector<Action> trace;
    walk(MonitorState(type), MonitorState(peer), trace);
  }

  void walk(const MonitorState& m, const MonitorState& d, std::vector<Action>& trace) {
    const bool word = ref.is_word(trace);
    REQUIRE(m.complete() == word);
    REQUIRE(m.permits(Action::finish()) == word);
    if (word) {
      ++words;
      REQUIRE(d.complete());
    }
    if (trace.size() == max_len) return;
    for (const Action& a : alphabet) {
      trace.push_back(a);
      const bool ok = ref.is_prefix(trace);
      INFO("type " << canonicalize(type) << " trace length " << trace.size() << " action " << to_string(a));
      REQUIRE(m.permits(a) == ok);
      if (ok) {
        const Action c = testsupport::complement(a);
        REQUIRE(d.permits(c));
        walk(m.advance(a), d.advance(c), trace);
      } else {
        CHECK_THROWS_AS(m.advance(a), ProtocolViolation);
      }
      trace.pop_back();
    }
  }
};

} // namespace

TEST_CASE("property: monitor agrees with the reference language") {
  // Small types (at most 6 nodes overall), traces long enough for three
  // unrollings of a one-node loop.
  testsupport::TypeGen gen(21, 3, 2);
  int checked = 0;
  for (int i = 0; checked < 150 && i < 10000; ++i) {
    SessionType st = gen.type(i % 2 == 0);
    std::size_t nodes = 0;
    std::function<void(const std::vector<Node>&)> count = [&](const std::vector<Node>& s) {
      for (const Node& n : s) {
        ++nodes;
        if (n.is_loop()) count(n.body);
      }
    };
    count(st.nodes);
    if (nodes > 6) continue;
    Explorer ex(st, 9);
    ex.run();
    CHECK(ex.words >= 1);
    ++checked;
  }
  CHECK(checked == 150);
}

TEST_CASE("property: hand-picked types against the reference") {
  for (const char* text : {"![]*", "?[]*.!<int>", "![![!<int>]*]*", "![?(int)]*.![!<double>]*", "?[?[?(Particle[])]*]*"}) {
    Explorer ex(parse(text), 8);
    ex.run();
    CHECK(ex.words >= 1);
  }
}

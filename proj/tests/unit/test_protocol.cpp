#include "session/errors.hpp"
#include "session/protocol.hpp"
#include "typegen.hpp"

#include <doctest.h>

using namespace session;

namespace {

const char* kMasterToWorker = R"(
protocol masterToWorker {
  cbegin.                        // Request the Worker service.
  !<int>.                        // Send the size of the matrix.
  ![                             // Enter the main loop (check termination condition).
    !<double[]>.?(double[]).     /* Send our boundary values and..
                                    ..get the Worker's updated ghost points. */
    ?(double).?(double)          // Receive the convergence data for Worker's subgrid.
  ]*.                            // After the last iteration..
  ?(double[][])                  // ..get the final results.
}
)";

const char* kNamedParts = R"(
  protocol p_mc sbegin.?(int).!<double[][]> // Master-to-Client.

  protocol matrix_size !<int>
  protocol stopping_condition ?(Double).?(Double)
  protocol ghost_points !<double[]>.?(double[])
  protocol partial_result ?(double[][])

  protocol p_mw { // Master-to-Workers.
    cbegin
    .@(matrix_size)
    .![
      @(ghost_points)
      .@(stopping_condition)
    ]*
    .@(partial_result)
  }
)";

SessionType seq(std::initializer_list<Node> nodes) { return SessionType{std::vector<Node>(nodes)}; }

} // namespace

TEST_CASE("parse: worker protocol") {
  auto st = parse("sbegin.?(int).!<int>");
  CHECK(st == seq({Node::begin(Role::Server), Node::in(MessageKind::Int), Node::out(MessageKind::Int)}));
}

TEST_CASE("parse: empty text is End") {
  CHECK(parse("").nodes.empty());
  CHECK(parse("  // nothing\n").nodes.empty());
}

TEST_CASE("parse: masterToWorker with whitespace") {
  auto st = parse("cbegin.!<int>.![ !<double[]>.?(double[]).?(double).?(double) ]*.?(double[][])");
  auto expected = seq({Node::begin(Role::Client), Node::out(MessageKind::Int),
                       Node::out_while({Node::out(MessageKind::DoubleArray), Node::in(MessageKind::DoubleArray),
                                        Node::in(MessageKind::Double), Node::in(MessageKind::Double)}),
                       Node::in(MessageKind::DoubleMatrix)});
  CHECK(st == expected);
}

TEST_CASE("parse: nested inwhile of serverSide") {
  auto st = parse("sbegin.!<int>.?[ ?[ ?(Particle[]) ]* ]*");
  CHECK(st == seq({Node::begin(Role::Server), Node::out(MessageKind::Int),
                   Node::in_while({Node::in_while({Node::in(MessageKind::ParticleArray)})})}));
}

TEST_CASE("parse: Double and double are one kind") {
  CHECK(parse("?(Double)") == parse("?(double)"));
}

TEST_CASE("parse: lone begin") {
  CHECK(parse("cbegin") == seq({Node::begin(Role::Client)}));
}

TEST_CASE("parse: errors carry positions") {
  auto fails_at = [](const char* text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.position();
    }
    FAIL("no ParseError for '" << text << "'");
    return 0;
  };
  CHECK(fails_at("!<int>.sbegin") == 7);
  CHECK(fails_at("!<float>") == 2);
  CHECK(fails_at("!<int>.![!<int>") == 7); // points at the unclosed loop
  CHECK_THROWS_AS(parse("!<int>]*"), ParseError);
  CHECK_THROWS_AS(parse("!<int>..?(int)"), ParseError);
  CHECK_THROWS_AS(parse("cbegin.sbegin"), ParseError);
  CHECK_THROWS_AS(parse("hello"), ParseError);
  CHECK_THROWS_AS(parse("![cbegin]*"), ParseError);
  CHECK_THROWS_AS(parse("!<int>."), ParseError);
}

TEST_CASE("protocol files: both declaration styles") {
  auto env = parse_protocol_file(kMasterToWorker);
  REQUIRE(env.count("masterToWorker") == 1);
  CHECK(canonicalize(env.at("masterToWorker")) ==
        "cbegin.!<int>.![!<double[]>.?(double[]).?(double).?(double)]*.?(double[][])");

  auto app = parse_protocol_file(kNamedParts);
  CHECK(app.size() == 6);
  CHECK(app.at("matrix_size") == seq({Node::out(MessageKind::Int)}));
  CHECK(canonicalize(app.at("p_mc")) == "sbegin.?(int).!<double[][]>");
  CHECK_THROWS_AS(parse_protocol_file("protocol a !<int> protocol a ?(int)"), ParseError);
}

TEST_CASE("expand: inlines references") {
  ProtocolEnv env{{"matrix_size", seq({Node::out(MessageKind::Int)})}};
  CHECK(expand(seq({Node::ref("matrix_size")}), env) == seq({Node::out(MessageKind::Int)}));

  auto plain = parse("sbegin.?(int).!<int>");
  CHECK(expand(plain, env) == plain);
}

TEST_CASE("expand: named parts inline to the masterToWorker type") {
  auto app = parse_protocol_file(kNamedParts);
  auto mtw = parse_protocol_file(kMasterToWorker).at("masterToWorker");
  auto expanded = expand(app.at("p_mw"), app);
  CHECK(expanded.expanded());
  CHECK(expanded == mtw);
}

TEST_CASE("expand: errors") {
  ProtocolEnv cyc{{"a", seq({Node::ref("b")})}, {"b", seq({Node::out(MessageKind::Int), Node::ref("a")})}};
  CHECK_THROWS_AS(expand(seq({Node::ref("a")}), cyc), ExpansionError);
  CHECK_THROWS_AS(expand(seq({Node::ref("missing")}), {}), ExpansionError);

  ProtocolEnv self{{"loop", seq({Node::out_while({Node::ref("loop")})})}};
  CHECK_THROWS_AS(expand(seq({Node::ref("loop")}), self), ExpansionError);

  // A long but acyclic chain trips the depth cap.
  ProtocolEnv chain;
  for (int i = 0; i < 70; ++i) chain["p" + std::to_string(i)] = seq({Node::ref("p" + std::to_string(i + 1))});
  chain["p70"] = seq({Node::out(MessageKind::Int)});
  CHECK_THROWS_AS(expand(seq({Node::ref("p0")}), chain), ExpansionError);
  CHECK_NOTHROW(expand(seq({Node::ref("p10")}), chain));

  ProtocolEnv begins{{"b", parse("cbegin.!<int>")}};
  CHECK_THROWS(expand(seq({Node::ref("b")}), begins));
}

TEST_CASE("dual: examples") {
  CHECK(dual(parse("sbegin.?(int).!<int>")) == parse("cbegin.!<int>.?(int)"));
  CHECK(dual(parse("sbegin.!<int>.?[?[?(Particle[])]*]*")) == parse("cbegin.?(int).![![!<Particle[]>]*]*"));
  CHECK(dual(SessionType{}) == SessionType{});
}

TEST_CASE("is_dual: examples") {
  auto worker = parse("sbegin.?(int).!<int>");
  CHECK(is_dual(worker, parse("cbegin.!<int>.?(int)")));
  CHECK_FALSE(is_dual(worker, worker));
  CHECK(is_dual(parse("sbegin.!<int>.?[?[?(Particle[])]*]*"), parse("cbegin.?(int).![![!<Particle[]>]*]*")));
  CHECK(is_dual(SessionType{}, SessionType{}));
}

TEST_CASE("canonicalize: examples") {
  CHECK(canonicalize(seq({Node::begin(Role::Server), Node::in(MessageKind::Int), Node::out(MessageKind::Int)})) ==
        "sbegin.?(int).!<int>");
  CHECK(canonicalize(SessionType{}).empty());
  CHECK(canonicalize(parse("![]*")) == "![]*");
}

TEST_CASE("property: involution and round trip over random types") {
  testsupport::TypeGen gen(7);
  for (int i = 0; i < 2000; ++i) {
    SessionType st = gen.type(i % 3 != 0);
    INFO(canonicalize(st));
    REQUIRE(dual(dual(st)) == st);
    REQUIRE(parse(canonicalize(st)) == st);
    REQUIRE(is_dual(st, dual(st)));
    const std::string c = canonicalize(st);
    REQUIRE(canonicalize(parse(c)) == c);
  }
}

TEST_CASE("property: non-empty types are never self-dual") {
  testsupport::TypeGen gen(11);
  for (int i = 0; i < 500; ++i) {
    SessionType st = gen.nonempty_type(i % 2 == 0);
    REQUIRE_FALSE(is_dual(st, st));
  }
}

TEST_CASE("property: mutations break duality") {
  testsupport::TypeGen gen(13);
  for (int i = 0; i < 500; ++i) {
    SessionType st = gen.nonempty_type();
    SessionType other = gen.mutate(dual(st));
    if (other == dual(st)) continue;
    REQUIRE_FALSE(is_dual(st, other));
  }
}

TEST_CASE("validate") {
  CHECK_NOTHROW(validate(parse("cbegin.!<int>")));
  SessionType bad = seq({Node::out(MessageKind::Int), Node::begin(Role::Client)});
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  SessionType nested = seq({Node::out_while({Node::begin(Role::Server)})});
  CHECK_THROWS_AS(validate(nested), std::invalid_argument);
}

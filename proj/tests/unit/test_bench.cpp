#include "session/bench/bench.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace session;
using namespace session::bench;

TEST_CASE("summarize: mean, median, sample deviation") {
  auto s = summarize({1, 2, 3, 4});
  CHECK(s.mean == 2.5);
  CHECK(s.median == 2.5);
  CHECK(s.stddev == doctest::Approx(1.2909944487358056)); // sqrt(5/3)
  s = summarize({5, 1, 3});
  CHECK(s.median == 3);
  CHECK(summarize({7}).stddev == 0.0);
  CHECK(summarize({}).mean == 0.0);
}

TEST_CASE("checksum is FNV-1a over big-endian bytes") {
  Checksum empty;
  CHECK(empty.value() == 0xcbf29ce484222325ULL);
  Checksum c;
  c.add_u64(0x6162636465666768ULL); // "abcdefgh"
  CHECK(c.value() == 0x25da8c1836a8d66dULL);
  Checksum d;
  d.add_double(1.0);
  CHECK(d.value() == 0xfcb659e6f17300eaULL);
}

TEST_CASE("name parsing") {
  CHECK(parse_algorithm("nbody") == Algorithm::NBody);
  CHECK(parse_transport("inproc") == Transport::InProc);
  CHECK(parse_mode("zero-copy") == Mode::ZeroCopy);
  CHECK(to_string(parse_transport("localhost")) == "localhost");
  CHECK_THROWS_AS(parse_algorithm("fft"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mode("shared"), std::invalid_argument);
}

TEST_CASE("validate") {
  BenchConfig c;
  c.algorithm = Algorithm::Jacobi;
  c.workers = 2;
  c.scale = 30;
  CHECK_NOTHROW(validate(c));
  c.scale = 31;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c.scale = 30;
  c.workers = 3;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c.algorithm = Algorithm::NBody;
  c.workers = 1;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c.algorithm = Algorithm::Pi;
  c.reps = 0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
}

TEST_CASE("csv rows round trip and the header is written once") {
  BenchReport r;
  r.config.algorithm = Algorithm::Pi;
  r.config.transport = Transport::InProc;
  r.config.mode = Mode::ZeroCopy;
  r.config.workers = 4;
  r.config.scale = 1000000;
  r.config.reps = 3;
  r.mean_ms = 1.0 / 3.0;
  r.median_ms = 0.25;
  r.stddev_ms = 1e-7;
  r.checksum = 0x00ff00ff00ff00ffULL;

  CsvRecord rec = parse_csv_row(csv_row(r));
  CHECK(rec.algorithm == "pi");
  CHECK(rec.mode == "zerocopy");
  CHECK(rec.workers == 4);
  CHECK(rec.scale == 1000000);
  CHECK(rec.mean_ms == r.mean_ms);
  CHECK(rec.stddev_ms == r.stddev_ms);
  CHECK(rec.checksum == r.checksum);
  CHECK_THROWS(parse_csv_row("pi,inproc"));

  const auto path = std::filesystem::temp_directory_path() / "bench_csv_test.csv";
  std::filesystem::remove(path);
  emit_csv(r, path.string());
  emit_csv(r, path.string());
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == kCsvHeader);
  CHECK(lines[1] == lines[2]);
  std::filesystem::remove(path);
}

namespace {

BenchConfig small(Algorithm a) {
  BenchConfig c;
  c.algorithm = a;
  c.reps = 2;
  c.seed = 9;
  switch (a) {
  case Algorithm::Pi: c.workers = 3; c.scale = 30000; break;
  case Algorithm::Jacobi: c.workers = 2; c.scale = 12; c.iterations = 40; break;
  case Algorithm::NBody: c.workers = 3; c.scale = 12; c.steps = 2; break;
  }
  return c;
}

} // namespace

TEST_CASE("run_bench checksums do not depend on the transport") {
  for (Algorithm a : {Algorithm::Pi, Algorithm::Jacobi, Algorithm::NBody}) {
    CAPTURE(to_string(a));
    BenchConfig c = small(a);
    BenchReport copy = run_bench(c);
    REQUIRE(copy.ok());
    CHECK(copy.times_ms.size() == 2);

    c.mode = Mode::ZeroCopy;
    BenchReport zero = run_bench(c);
    REQUIRE(zero.ok());
    CHECK(zero.checksum == copy.checksum);

    c.mode = Mode::Copy;
    c.transport = Transport::Localhost;
    BenchReport tcp = run_bench(c);
    REQUIRE(tcp.ok());
    CHECK(tcp.checksum == copy.checksum);

    c = small(a);
    c.seed = 10;
    if (a != Algorithm::Jacobi) CHECK(run_bench(c).checksum != copy.checksum);
  }
}

TEST_CASE("copy mode serializes, zero-copy does not") {
  BenchConfig c = small(Algorithm::Jacobi);
  BenchReport copy = run_bench(c);
  CHECK(copy.serialized_elements > 0);
  c.mode = Mode::ZeroCopy;
  BenchReport zero = run_bench(c);
  CHECK(zero.serialized_elements == 0);
  CHECK(zero.element_copies == 0);
}

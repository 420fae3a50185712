#include "session/algo/jacobi.hpp"
#include "harness.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace session;
using namespace session::algo;
using testsupport::Net;

namespace {

// Independent reference: nested vectors, same formula, row-major.
using Plain = std::vector<std::vector<double>>;

Plain reference_step(const Plain& u) {
  Plain out = u;
  for (std::size_t i = 1; i + 1 < u.size(); ++i)
    for (std::size_t j = 1; j + 1 < u[i].size(); ++j)
      out[i][j] = (u[i - 1][j] + u[i + 1][j] + u[i][j - 1] + u[i][j + 1]) / 4.0;
  return out;
}

Plain to_plain(const Grid& g) {
  Plain p(g.rows(), std::vector<double>(g.cols()));
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) p[i][j] = g(i, j);
  return p;
}

bool bit_equal(const DoubleMatrix& a, const DoubleMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.values().data(), b.values().data(), a.values().size() * sizeof(double)) == 0;
}

double zero(double, double) { return 0.0; }

} // namespace

TEST_CASE("jacobi_step: zeros") {
  Grid u(5, 5), n(5, 5);
  auto r = jacobi_step(u, n);
  CHECK(r.diff == 0.0);
  CHECK(r.valmx == 0.0);
  CHECK(n == Grid(5, 5));
}

TEST_CASE("jacobi_step: one interior cell") {
  Grid u(3, 3), n(3, 3);
  u(0, 1) = 1;
  u(2, 1) = 2;
  u(1, 0) = 3;
  u(1, 2) = 4;
  auto r = jacobi_step(u, n);
  CHECK(n(1, 1) == 2.5);
  CHECK(r.diff == 2.5);
  CHECK(r.valmx == 2.5);
  CHECK(n(0, 1) == 0.0); // halo untouched
}

TEST_CASE("jacobi_step: random grid against the reference loop") {
  SplitMix64 rng(6);
  Grid u(8, 8), n(8, 8);
  for (double& v : u.values()) v = rng.coordinate();
  jacobi_step(u, n);
  const Plain ref = reference_step(to_plain(u));
  for (std::size_t i = 1; i < 7; ++i)
    for (std::size_t j = 1; j < 7; ++j) REQUIRE(std::memcmp(&ref[i][j], &n(i, j), sizeof(double)) == 0);
  Grid wrong(7, 8);
  CHECK_THROWS_AS(jacobi_step(u, wrong), std::invalid_argument);
}

TEST_CASE("init_strip: boundary on the outer edge only") {
  Grid g = init_strip(6, 1, 6, xy_boundary);
  CHECK(g(0, 0) == xy_boundary(-1, -1));
  CHECK(g(7, 7) == xy_boundary(1, 1));
  CHECK(g(0, 3) == xy_boundary(grid_coordinate(3, 6), -1));
  CHECK(g(3, 3) == 0.0);
  // A middle strip has no top or bottom edge of its own.
  Grid mid = init_strip(6, 3, 2, xy_boundary);
  CHECK(mid(0, 2) == 0.0);
  CHECK(mid(1, 0) == xy_boundary(-1, grid_coordinate(3, 6)));
}

TEST_CASE("size 3 with zero boundary stops after the forced first sweep") {
  JacobiConfig cfg;
  cfg.boundary = zero;
  auto run = testsupport::run_jacobi(Net::InProcCopy, 3, cfg);
  CHECK(run.stats.iterations == 2);
  CHECK(run.result == DoubleMatrix(3, 3));
  int seq_iters = 0;
  CHECK(jacobi_sequential_converge(3, cfg, &seq_iters) == DoubleMatrix(3, 3));
  CHECK(seq_iters == 2);
}

TEST_CASE("decomposed run is bitwise equal to the whole-grid run") {
  JacobiConfig cfg;
  cfg.max_iterations = 100;
  const DoubleMatrix oracle = jacobi_sequential(30, xy_boundary, 100);
  for (Net net : {Net::InProcCopy, Net::InProcZeroCopy, Net::Tcp}) {
    CAPTURE(testsupport::name(net));
    auto run = testsupport::run_jacobi(net, 30, cfg);
    CHECK(run.stats.iterations == 100);
    CHECK(bit_equal(run.result, oracle));
  }
}

TEST_CASE("converged solution matches the harmonic boundary") {
  JacobiConfig cfg;
  std::vector<double> diffs;
  auto run = testsupport::run_jacobi(Net::InProcZeroCopy, 30, cfg,
                                     [&](int, double diff, double) { diffs.push_back(diff); });
  double worst = 0.0;
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j)
      worst = std::max(worst, std::abs(run.result(i, j) - grid_coordinate(j + 1, 30) * grid_coordinate(i + 1, 30)));
  CHECK(worst < 1e-3);
  CHECK(run.stats.iterations < cfg.max_iterations);

  int seq_iters = 0;
  const DoubleMatrix seq = jacobi_sequential_converge(30, cfg, &seq_iters);
  CHECK(seq_iters == run.stats.iterations);
  CHECK(bit_equal(seq, run.result));

  // Progress is monotone once the first sweep is done.
  REQUIRE(diffs.size() == static_cast<std::size_t>(run.stats.iterations));
  for (std::size_t k = 2; k < diffs.size(); ++k) REQUIRE(diffs[k] <= diffs[k - 1]);
}

TEST_CASE("worker sends the row facing the master") {
  const int size = 6, rows = 2;
  testsupport::Wires w(Net::InProcCopy);
  auto srv = w.server(kJacobiWorker, "north");
  testsupport::Crew crew;
  JacobiConfig cfg;
  crew.spawn([&] {
    SessionSocket s = srv.accept();
    jacobi_worker(s, Strip::North, cfg);
  });
  SessionSocket m = w.service(kJacobiMasterToWorker, srv, "north").request();
  m.send(size);

  Grid u = init_strip(size, 1, rows, xy_boundary);
  Grid n = init_strip(size, 1, rows, xy_boundary);
  OutLoop loop{&m};
  for (int it = 0; it < 3; ++it) {
    loop.next(true);
    const StepResult expect = jacobi_step(u, n);
    DoubleArray ghost(size, 0.25 * it);
    std::copy(ghost.begin(), ghost.end(), n.row(rows + 1).begin() + 1);
    m.send(std::move(ghost));
    const DoubleArray facing = m.receive_double_array();
    CHECK(std::equal(facing.begin(), facing.end(), n.row(rows).begin() + 1));
    CHECK(m.receive_double() == expect.diff);
    CHECK(m.receive_double() == expect.valmx);
    std::swap(u, n);
  }
  loop.next(false);
  CHECK(m.receive_double_matrix() == u);
  m.close();
  crew.join();
}

TEST_CASE("master rejects bad sizes") {
  JacobiConfig cfg;
  CHECK_THROWS(testsupport::run_jacobi(Net::InProcCopy, 10, cfg));
}

TEST_CASE("zero-copy ghost exchange makes no element copies") {
  JacobiConfig cfg;
  cfg.max_iterations = 50;
  const auto before = element_copies();
  testsupport::Wires dummy(Net::InProcZeroCopy);
  auto run = testsupport::run_jacobi(Net::InProcZeroCopy, 30, cfg);
  CHECK(element_copies() == before);
  CHECK(run.stats.iterations == 50);
}

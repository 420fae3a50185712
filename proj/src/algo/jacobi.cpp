#include "session/algo/jacobi.hpp"

#include "session/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace session::algo {

StepResult jacobi_step(const Grid& u, Grid& newu) {
  if (u.rows() != newu.rows() || u.cols() != newu.cols()) throw std::invalid_argument("jacobi_step: shape mismatch");
  if (u.rows() < 3 || u.cols() < 3) throw std::invalid_argument("jacobi_step: grid has no interior");
  StepResult r;
  const std::size_t rows = u.rows() - 2;
  const std::size_t cols = u.cols() - 2;
  for (std::size_t i = 1; i < rows + 1; ++i) {
    for (std::size_t j = 1; j < cols + 1; ++j) {
      newu(i, j) = (u(i - 1, j) + u(i + 1, j) + u(i, j - 1) + u(i, j + 1)) / 4.0;
      r.diff = std::max(r.diff, std::abs(newu(i, j) - u(i, j)));
      r.valmx = std::max(r.valmx, std::abs(newu(i, j)));
    }
  }
  return r;
}

double grid_coordinate(int k, int size) { return -1.0 + 2.0 * k / (size + 1); }

Grid init_strip(int size, int first_row, int rows, const BoundaryFn& f) {
  Grid g(static_cast<std::size_t>(rows) + 2, static_cast<std::size_t>(size) + 2, 0.0);
  for (int i = 0; i < rows + 2; ++i) {
    const int global = first_row - 1 + i;
    const double y = grid_coordinate(global, size);
    const bool edge_row = global == 0 || global == size + 1;
    for (int j = 0; j < size + 2; ++j) {
      const bool edge = edge_row || j == 0 || j == size + 1;
      if (edge) g(i, j) = f(grid_coordinate(j, size), y);
    }
  }
  return g;
}

namespace {

void check_size(int size) {
  if (size < 3 || size % 3 != 0) throw std::invalid_argument("grid size must be a positive multiple of 3");
}

DoubleArray copy_row(const Grid& g, std::size_t r) {
  DoubleArray out(g.cols() - 2);
  std::copy_n(g.row(r).begin() + 1, out.size(), out.begin());
  return out;
}

void fill_row(Grid& g, std::size_t r, const DoubleArray& values) {
  if (values.size() != g.cols() - 2) throw SessionFailure("ghost row has the wrong length");
  std::copy(values.begin(), values.end(), g.row(r).begin() + 1);
}

bool keep_going(double diff, double valmx, int iterations, const JacobiConfig& cfg) {
  return (diff / valmx) >= cfg.epsilon && iterations <= cfg.max_iterations;
}

} // namespace

JacobiStats jacobi_master(SessionSocket& client, SessionSocket& north, SessionSocket& south, const JacobiConfig& cfg,
                          const ProgressFn& progress) {
  const int size = client.receive_int();
  check_size(size);
  const int rows = size / 3;

  multicast_send({&north, &south}, size);

  Grid u = init_strip(size, rows + 1, rows, cfg.boundary);
  Grid newu = init_strip(size, rows + 1, rows, cfg.boundary);

  double diff = 1.0;
  double valmx = 1.0;
  int iterations = 1;

  outwhile(
      {&north, &south}, [&] { return keep_going(diff, valmx, iterations, cfg); },
      [&] {
        const StepResult own = jacobi_step(u, newu);
        diff = own.diff;
        valmx = own.valmx;

        north.send(copy_row(newu, 1));
        south.send(copy_row(newu, rows));

        fill_row(newu, 0, north.receive_double_array());
        fill_row(newu, rows + 1, south.receive_double_array());

        std::swap(u, newu);

        diff = std::max(diff, north.receive_double());
        valmx = std::max(valmx, north.receive_double());
        diff = std::max(diff, south.receive_double());
        valmx = std::max(valmx, south.receive_double());

        if (progress) progress(iterations, diff, valmx);
        if (iterations == 1) {
          diff = 1.0;
          valmx = 1.0;
        }
        ++iterations;
      });

  const DoubleMatrix w1 = north.receive_double_matrix();
  const DoubleMatrix w2 = south.receive_double_matrix();
  const auto expect = [&](const DoubleMatrix& w) {
    if (w.rows() != static_cast<std::size_t>(rows) + 2 || w.cols() != static_cast<std::size_t>(size) + 2)
      throw SessionFailure("worker returned a subgrid of the wrong shape");
  };
  expect(w1);
  expect(w2);

  DoubleMatrix result(size, size);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < size; ++j) result(i, j) = w1(i + 1, j + 1);
  for (int i = rows; i < 2 * rows; ++i)
    for (int j = 0; j < size; ++j) result(i, j) = u(i - rows + 1, j + 1);
  for (int i = 2 * rows; i < size; ++i)
    for (int j = 0; j < size; ++j) result(i, j) = w2(i - 2 * rows + 1, j + 1);

  client.send(std::move(result));
  north.close();
  south.close();
  client.close();
  return JacobiStats{iterations - 1};
}

void jacobi_worker(SessionSocket& master, Strip strip, const JacobiConfig& cfg) {
  const int size = master.receive_int();
  check_size(size);
  const int rows = size / 3;
  const bool north = strip == Strip::North;

  const int first_row = north ? 1 : 2 * rows + 1;
  Grid u = init_strip(size, first_row, rows, cfg.boundary);
  Grid newu = init_strip(size, first_row, rows, cfg.boundary);
  // The row facing the master and the halo row the master's ghosts land in.
  const std::size_t facing = north ? rows : 1;
  const std::size_t ghost = north ? rows + 1 : 0;

  inwhile({&master}, [&] {
    const StepResult own = jacobi_step(u, newu);
    fill_row(newu, ghost, master.receive_double_array());
    master.send(copy_row(newu, facing));
    std::swap(u, newu);
    master.send(own.diff);
    master.send(own.valmx);
  });

  master.send(std::move(u));
  master.close();
}

DoubleMatrix jacobi_client(SessionSocket& master, int size) {
  master.send(size);
  DoubleMatrix result = master.receive_double_matrix();
  master.close();
  return result;
}

namespace {

DoubleMatrix interior(const Grid& g) {
  const std::size_t n = g.rows() - 2;
  DoubleMatrix out(n, g.cols() - 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = g(i + 1, j + 1);
  return out;
}

} // namespace

DoubleMatrix jacobi_sequential(int size, const BoundaryFn& f, int iterations) {
  if (size < 1) throw std::invalid_argument("grid size must be positive");
  Grid u = init_strip(size, 1, size, f);
  Grid newu = init_strip(size, 1, size, f);
  for (int k = 0; k < iterations; ++k) {
    jacobi_step(u, newu);
    std::swap(u, newu);
  }
  return interior(u);
}

DoubleMatrix jacobi_sequential_converge(int size, const JacobiConfig& cfg, int* iterations_out) {
  if (size < 1) throw std::invalid_argument("grid size must be positive");
  Grid u = init_strip(size, 1, size, cfg.boundary);
  Grid newu = init_strip(size, 1, size, cfg.boundary);
  double diff = 1.0;
  double valmx = 1.0;
  int iterations = 1;
  while (keep_going(diff, valmx, iterations, cfg)) {
    const StepResult r = jacobi_step(u, newu);
    std::swap(u, newu);
    diff = r.diff;
    valmx = r.valmx;
    if (iterations == 1) {
      diff = 1.0;
      valmx = 1.0;
    }
    ++iterations;
  }
  if (iterations_out) *iterations_out = iterations - 1;
  return interior(u);
}

} // namespace session::algo

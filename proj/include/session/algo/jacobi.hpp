#pragma once

#include "session/socket.hpp"

#include <cstdint>
#include <functional>
#include <string_view>

namespace session::algo {

// Master side toward each worker, then the worker's own view, then the
// client link. `double` and `Double` are the same wire kind.
inline constexpr std::string_view kJacobiMasterToWorker =
    "cbegin.!<int>.![!<double[]>.?(double[]).?(Double).?(Double)]*.?(double[][])";
inline constexpr std::string_view kJacobiWorker =
    "sbegin.?(int).?[?(double[]).!<double[]>.!<Double>.!<Double>]*.!<double[][]>";
inline constexpr std::string_view kJacobiMasterToClient = "sbegin.?(int).!<double[][]>";
inline constexpr std::string_view kJacobiClient = "cbegin.!<int>.?(double[][])";

/// Fixed value on the outer edge of the global grid at (x, y) in [-1, 1]^2.
using BoundaryFn = std::function<double(double x, double y)>;

inline double xy_boundary(double x, double y) { return x * y; }

struct JacobiConfig {
  int max_iterations = 100000;
  double epsilon = 1e-5;
  BoundaryFn boundary = xy_boundary;
};

enum class Strip { North, South };

/// A strip of the global grid with a one-cell halo all round:
/// (rows+2) x (cols+2), row-major.
using Grid = DoubleMatrix;

struct StepResult {
  double diff = 0.0;  // max |new - old| over the interior
  double valmx = 0.0; // max |new| over the interior
};

/// One sweep over the interior of `u` into `newu`. Halo cells are read, never
/// written. Row-major ascending.
StepResult jacobi_step(const Grid& u, Grid& newu);

/// Coordinate of global grid index `k` in 0..size+1.
double grid_coordinate(int k, int size);

/// Strip of `rows` interior rows whose first interior row is global row
/// `first_row` (1-based). Outer edges take the boundary function, the rest
/// starts at zero.
Grid init_strip(int size, int first_row, int rows, const BoundaryFn& f);

struct JacobiStats {
  int iterations = 0; // sweeps performed
};

using ProgressFn = std::function<void(int iteration, double diff, double valmx)>;

/// Central strip. Reads the size from the client, drives both workers and
/// returns the assembled size x size interior to the client.
JacobiStats jacobi_master(SessionSocket& client, SessionSocket& north, SessionSocket& south, const JacobiConfig& cfg,
                          const ProgressFn& progress = {});

/// North or south strip.
void jacobi_worker(SessionSocket& master, Strip strip, const JacobiConfig& cfg);

/// Sends the problem size and waits for the solution.
DoubleMatrix jacobi_client(SessionSocket& master, int size);

/// Whole-grid oracle: exactly `iterations` sweeps, interior returned.
DoubleMatrix jacobi_sequential(int size, const BoundaryFn& f, int iterations);

/// Whole-grid run under the same stopping rule as the master, including its
/// first-iteration override. `iterations_out` gets the sweep count.
DoubleMatrix jacobi_sequential_converge(int size, const JacobiConfig& cfg, int* iterations_out = nullptr);

} // namespace session::algo

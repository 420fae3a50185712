#pragma once

#include "session/transport.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace session::bench {

enum class Algorithm { Pi, Jacobi, NBody };
// Tcp and Localhost both run over TCP sockets; Localhost pins the host to
// 127.0.0.1, Tcp honours --host.
enum class Transport { Tcp, Localhost, InProc };

struct BenchConfig {
  Algorithm algorithm = Algorithm::Pi;
  int workers = 1;          // pi workers, ring units for nbody; jacobi is always 2
  std::int64_t scale = 0;   // pi: total trials; jacobi: grid side; nbody: total particles
  int steps = 1;            // nbody
  int iterations = 0;       // jacobi sweep cap, 0 = the default cap
  Transport transport = Transport::InProc;
  Mode mode = Mode::Copy;
  int reps = 100;
  std::uint64_t seed = 0;
  std::string host = "127.0.0.1";
  std::chrono::milliseconds watchdog{30'000};
  std::string particle_file; // nbody initial state instead of random
};

struct BenchReport {
  BenchConfig config;
  std::vector<double> times_ms;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double stddev_ms = 0.0;
  std::uint64_t checksum = 0;
  int failed_reps = 0;
  std::vector<std::string> errors;
  std::uint64_t element_copies = 0;     // Array copies during the timed reps
  std::uint64_t serialized_elements = 0; // scalars serialized by in-process copy mode
  bool ok() const noexcept { return failed_reps == 0; }
};

std::string_view to_string(Algorithm a) noexcept;
std::string_view to_string(Transport t) noexcept;
std::string_view to_string(Mode m) noexcept;
Algorithm parse_algorithm(std::string_view s);
Transport parse_transport(std::string_view s);
Mode parse_mode(std::string_view s);

/// Throws std::invalid_argument on an unusable config.
void validate(const BenchConfig& cfg);

/// Runs every role on its own thread of this process, `reps` times.
BenchReport run_bench(const BenchConfig& cfg);

/// FNV-1a 64 over big-endian bytes.
class Checksum {
public:
  void add_u64(std::uint64_t v) noexcept;
  void add_double(double v) noexcept;
  std::uint64_t value() const noexcept { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline constexpr std::string_view kCsvHeader =
    "algorithm,transport,mode,workers,scale,reps,mean_ms,median_ms,stddev_ms,checksum";

std::string csv_row(const BenchReport& report);
/// Appends one row, writing the header first if the file is new or empty.
void emit_csv(const BenchReport& report, const std::string& path);

struct CsvRecord {
  std::string algorithm, transport, mode;
  int workers = 0;
  std::int64_t scale = 0;
  int reps = 0;
  double mean_ms = 0, median_ms = 0, stddev_ms = 0;
  std::uint64_t checksum = 0;
};
CsvRecord parse_csv_row(std::string_view line);

struct Summary {
  double mean = 0, median = 0, stddev = 0;
};
Summary summarize(const std::vector<double>& xs);

} // namespace session::bench

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "occakit/engine/buffer.hpp"
#include "occakit/engine/device.hpp"
#include "occakit/engine/kernel.hpp"
#include "occakit/lang/defines.hpp"

namespace occakit::apps {

// Second-order-in-time finite-difference solver on a periodic w x h grid.
struct FdConfig {
  int w = 256;
  int h = 256;
  int r = 3;
  double dx = 0.0;
  double dt = 0.0;
  int steps = 1;
  std::vector<double> weights;  // w_{-r..r}

  // dx = 2/(w-1), dt = dx/4 and central second-difference weights.
  static FdConfig make(int w, int h, int r, int steps = 1);

  // Throws std::invalid_argument when w or h < 2r+1, r < 1, dt or dx is not
  // positive, or the weight count is not 2r+1.
  void validate() const;
};

// Central second-difference coefficients of order 2r, scaled by 1/dx^2.
std::vector<double> default_weights(int r, double dx);

// {r, w, h, dx, dt} in that order.
lang::DefineSet fd_defines(const FdConfig& config);

// The shipped fd2d kernel source.
std::string_view fd2d_source();

inline constexpr int kFdLocalSize = 16;

// Device, kernel and the three rotating state buffers. u1 holds the field at
// t_n, u2 at t_{n-1}; each step writes u3 and rotates u1 <- u2 <- u3.
class FdSolver {
 public:
  // Zero initial fields unless u1/u2 are given (each w*h values).
  FdSolver(FdConfig config, engine::ExecMode mode,
           std::optional<std::vector<double>> u1 = std::nullopt,
           std::optional<std::vector<double>> u2 = std::nullopt);

  void timestep();
  void run(int steps);

  const FdConfig& config() const { return config_; }
  double current_time() const { return current_time_; }
  const engine::Kernel& kernel() const { return kernel_; }

  std::vector<double> u1() const { return u1_.read<double>(); }
  std::vector<double> u2() const { return u2_.read<double>(); }
  std::vector<double> u3() const { return u3_.read<double>(); }

  // Sum of |u| over the most recently computed field.
  double checksum() const { return u2_.abs_sum(); }

 private:
  FdConfig config_;
  engine::Device device_;
  engine::Kernel kernel_;
  engine::Buffer u1_, u2_, u3_, weight_;
  double current_time_ = 0.0;
};

// Listing-order global size: local * ceil(extent / local).
std::size_t fd_global_size(int extent, int local = kFdLocalSize);

// Direct double loop over the grid with the kernel's operation order.
std::vector<double> fd_reference(const std::vector<double>& u1, const std::vector<double>& u2,
                                 const FdConfig& config);

struct FdFields {
  std::vector<double> u1, u2, u3;
};

// `steps` reference updates with the same buffer rotation as FdSolver.
FdFields fd_reference_run(std::vector<double> u1, std::vector<double> u2, const FdConfig& config,
                          int steps);

// Unit impulse at the centre node.
std::vector<double> fd_impulse(int w, int h);

struct BenchReport {
  std::string backend;
  int threads = 1;
  int w = 0, h = 0, r = 0, steps = 0;
  double mnodes_per_s = 0.0;
  double wall_seconds = 0.0;
  double checksum = 0.0;
};

// Runs config.steps timesteps from a centre impulse in u1 and u2 and times
// them. Throws std::invalid_argument for steps < 1.
BenchReport bench(const FdConfig& config, engine::ExecMode mode);

std::string_view bench_csv_header();
std::string bench_csv_row(const BenchReport& report);

}  // namespace occakit::apps

#include "occakit/apps/fd.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "fd2d_source.hpp"

namespace occakit::apps {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void check_grid(const std::vector<double>& u, const FdConfig& c, const char* name) {
  if (u.size() != static_cast<std::size_t>(c.w) * static_cast<std::size_t>(c.h)) {
    throw std::invalid_argument(std::string(name) + " must hold w*h values");
  }
}

}  // namespace

std::vector<double> default_weights(int r, double dx) {
  if (r < 1) throw std::invalid_argument("stencil radius must be at least 1");
  std::vector<double> c(static_cast<std::size_t>(2 * r + 1), 0.0);
  const double rf2 = factorial(r) * factorial(r);
  double centre = 0.0;
  for (int k = 1; k <= r; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    const double ck = 2.0 * sign * rf2 / (static_cast<double>(k) * k * factorial(r - k) * factorial(r + k));
    c[static_cast<std::size_t>(r + k)] = ck;
    c[static_cast<std::size_t>(r - k)] = ck;
    centre -= 2.0 / (static_cast<double>(k) * k);
  }
  c[static_cast<std::size_t>(r)] = centre;
  const double scale = 1.0 / (dx * dx);
  for (double& v : c) v *= scale;
  return c;
}

FdConfig FdConfig::make(int w, int h, int r, int steps) {
  FdConfig c;
  c.w = w;
  c.h = h;
  c.r = r;
  c.steps = steps;
  c.dx = w > 1 ? 2.0 / (w - 1) : 1.0;
  c.dt = c.dx / 4.0;
  if (r >= 1) c.weights = default_weights(r, c.dx);
  return c;
}

void FdConfig::validate() const {
  if (r < 1) throw std::invalid_argument("stencil radius must be at least 1");
  if (w < 2 * r + 1 || h < 2 * r + 1) {
    throw std::invalid_argument("grid " + std::to_string(w) + "x" + std::to_string(h) +
                                " is smaller than the stencil width " + std::to_string(2 * r + 1));
  }
  if (static_cast<std::int64_t>(w) * h > std::numeric_limits<std::int32_t>::max()) {
    throw std::invalid_argument("grid has too many nodes");
  }
  if (!(dx > 0.0) || !std::isfinite(dx)) throw std::invalid_argument("dx must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (weights.size() != static_cast<std::size_t>(2 * r + 1)) {
    throw std::invalid_argument("expected " + std::to_string(2 * r + 1) + " stencil weights, got " +
                                std::to_string(weights.size()));
  }
}

lang::DefineSet fd_defines(const FdConfig& c) {
  lang::DefineSet d;
  d.add("r", static_cast<std::int64_t>(c.r));
  d.add("w", static_cast<std::int64_t>(c.w));
  d.add("h", static_cast<std::int64_t>(c.h));
  d.add("dx", c.dx);
  d.add("dt", c.dt);
  return d;
}

std::string_view fd2d_source() { return generated::kFd2dSource; }

std::size_t fd_global_size(int extent, int local) {
  const auto e = static_cast<std::size_t>(extent);
  const auto l = static_cast<std::size_t>(local);
  return l * ((e + l - 1) / l);
}

FdSolver::FdSolver(FdConfig config, engine::ExecMode mode, std::optional<std::vector<double>> u1,
                   std::optional<std::vector<double>> u2)
    : config_(std::move(config)), device_(mode) {
  config_.validate();
  const std::size_t n = static_cast<std::size_t>(config_.w) * static_cast<std::size_t>(config_.h);
  if (u1) check_grid(*u1, config_, "u1");
  if (u2) check_grid(*u2, config_, "u2");
  u1_ = u1 ? device_.create_buffer(*u1) : device_.create_buffer(engine::ElemType::Float64, n);
  u2_ = u2 ? device_.create_buffer(*u2) : device_.create_buffer(engine::ElemType::Float64, n);
  u3_ = device_.create_buffer(engine::ElemType::Float64, n);
  weight_ = device_.create_buffer(config_.weights);

  kernel_ = device_.build_kernel(fd2d_source(), "fd2d", fd_defines(config_));
  const std::array<std::size_t, 2> local{kFdLocalSize, kFdLocalSize};
  const std::array<std::size_t, 2> global{fd_global_size(config_.w), fd_global_size(config_.h)};
  kernel_.set_thread_array(global, local, 2);
}

void FdSolver::timestep() {
  current_time_ += config_.dt;
  kernel_(u1_, u2_, u3_, weight_, current_time_);
  u1_.swap(u2_);
  u2_.swap(u3_);
}

void FdSolver::run(int steps) {
  for (int s = 0; s < steps; ++s) timestep();
}

std::vector<double> fd_reference(const std::vector<double>& u1, const std::vector<double>& u2,
                                 const FdConfig& c) {
  c.validate();
  check_grid(u1, c, "u1");
  check_grid(u2, c, "u2");
  const int w = c.w, h = c.h, r = c.r;
  const double dt2 = c.dt * c.dt;
  std::vector<double> u3(u1.size());
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const std::size_t id = static_cast<std::size_t>(j) * w + i;
      double lap = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int nx = (i + k + w) % w;
        const int ny = (j + k + h) % h;
        const double wk = c.weights[static_cast<std::size_t>(r + k)];
        lap += wk * u1[static_cast<std::size_t>(j) * w + nx] +
               wk * u1[static_cast<std::size_t>(ny) * w + i];
      }
      u3[id] = -2 * u1[id] + u2[id] - dt2 * lap;
    }
  }
  return u3;
}

FdFields fd_reference_run(std::vector<double> u1, std::vector<double> u2, const FdConfig& c,
                          int steps) {
  std::vector<double> u3(u1.size(), 0.0);
  for (int s = 0; s < steps; ++s) {
    u3 = fd_reference(u1, u2, c);
    std::swap(u1, u2);
    std::swap(u2, u3);
  }
  return {std::move(u1), std::move(u2), std::move(u3)};
}

std::vector<double> fd_impulse(int w, int h) {
  std::vector<double> u(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
  u[static_cast<std::size_t>(h / 2) * w + static_cast<std::size_t>(w / 2)] = 1.0;
  return u;
}

BenchReport bench(const FdConfig& config, engine::ExecMode mode) {
  if (config.steps < 1) throw std::invalid_argument("bench needs at least one step");
  FdSolver solver(config, mode, fd_impulse(config.w, config.h), fd_impulse(config.w, config.h));

  const auto start = std::chrono::steady_clock::now();
  solver.run(config.steps);
  const auto stop = std::chrono::steady_clock::now();

  BenchReport rep;
  rep.backend = mode.parallel ? "parallel" : "serial";
  rep.threads = mode.threads;
  rep.w = config.w;
  rep.h = config.h;
  rep.r = config.r;
  rep.steps = config.steps;
  rep.wall_seconds = std::chrono::duration<double>(stop - start).count();
  const double nodes = static_cast<double>(config.w) * config.h * config.steps;
  rep.mnodes_per_s = rep.wall_seconds > 0.0 ? nodes / rep.wall_seconds / 1e6
                                            : std::numeric_limits<double>::infinity();
  rep.checksum = solver.checksum();
  return rep;
}

std::string_view bench_csv_header() { return "backend,threads,w,h,r,steps,mnodes_per_s,checksum"; }

std::string bench_csv_row(const BenchReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.backend << ',' << r.threads << ',' << r.w << ',' << r.h << ',' << r.r << ','
      << r.steps << ',';
  out.precision(6);
  out << r.mnodes_per_s << ',';
  out.precision(17);
  out << r.checksum;
  return out.str();
}

}  // namespace occakit::apps

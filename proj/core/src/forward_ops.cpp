#include "dcloss/forward_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dcloss/errors.hpp"

namespace dcloss {

Kernel1D gaussian_kernel(double sigma_index_space, std::size_t halfwidth) {
  if (!(sigma_index_space > 0.0)) throw ParameterError("gaussian_kernel: sigma must be > 0");
  if (halfwidth == 0) throw ParameterError("gaussian_kernel: halfwidth must be >= 1");
  Kernel1D kernel;
  kernel.halfwidth = halfwidth;
  kernel.taps.resize(2 * halfwidth + 1);
  const auto h = static_cast<double>(halfwidth);
  double total = 0.0;
  for (std::size_t i = 0; i < kernel.taps.size(); ++i) {
    const double k = static_cast<double>(i) - h;
    kernel.taps[i] = std::exp(-k * k / (2.0 * sigma_index_space * sigma_index_space));
    total += kernel.taps[i];
  }
  for (auto& t : kernel.taps) t /= total;
  return kernel;
}

void ProjectorGeometry::validate() const {
  if (image_side < 2) throw ParameterError("ProjectorGeometry: image_side must be >= 2");
  if (n_angles < 1) throw ParameterError("ProjectorGeometry: n_angles must be >= 1");
  if (static_cast<double>(n_bins) < static_cast<double>(image_side) * std::numbers::sqrt2) {
    throw ParameterError("ProjectorGeometry: n_bins must be >= image_side * sqrt(2) for full coverage");
  }
  if (!(pixel_size > 0.0) || !(bin_size > 0.0) || !(gain > 0.0)) {
    throw ParameterError("ProjectorGeometry: pixel_size, bin_size and gain must be > 0");
  }
}

namespace {

constexpr double kParallelTol = 1e-12;

struct Hit {
  std::uint32_t pixel;
  double length;
};

// Grid line index when coordinate c lies on one (within tol), otherwise -1.
long grid_line(double c, double lo, double pixel, std::size_t side) {
  const double u = (c - lo) / pixel;
  const double k = std::round(u);
  if (std::fabs(u - k) < 1e-9 && k >= 0.0 && k <= static_cast<double>(side)) return static_cast<long>(k);
  return -1;
}

void trace_ray(double px, double py, double dx, double dy, std::size_t side, double pixel,
               std::vector<double>& alphas, std::vector<Hit>& hits) {
  hits.clear();
  const double half = 0.5 * static_cast<double>(side) * pixel;
  const double lo = -half;
  const bool par_x = std::fabs(dx) < kParallelTol;  // ray runs along y
  const bool par_y = std::fabs(dy) < kParallelTol;  // ray runs along x
  if (par_x) dx = 0.0;
  if (par_y) dy = 0.0;

  double a_min = -std::numeric_limits<double>::infinity();
  double a_max = std::numeric_limits<double>::infinity();
  auto clip = [&](double p, double d) {
    if (d == 0.0) return p >= lo - 1e-12 * pixel && p <= half + 1e-12 * pixel;
    double a0 = (lo - p) / d;
    double a1 = (half - p) / d;
    if (a0 > a1) std::swap(a0, a1);
    a_min = std::max(a_min, a0);
    a_max = std::min(a_max, a1);
    return true;
  };
  if (!clip(px, dx) || !clip(py, dy) || !(a_max > a_min)) return;

  alphas.clear();
  alphas.push_back(a_min);
  alphas.push_back(a_max);
  for (std::size_t i = 0; i <= side; ++i) {
    const double plane = lo + static_cast<double>(i) * pixel;
    if (dx != 0.0) {
      const double a = (plane - px) / dx;
      if (a > a_min && a < a_max) alphas.push_back(a);
    }
    if (dy != 0.0) {
      const double a = (plane - py) / dy;
      if (a > a_min && a < a_max) alphas.push_back(a);
    }
  }
  std::sort(alphas.begin(), alphas.end());

  const long line_x = par_x ? grid_line(px, lo, pixel, side) : -1;
  const long line_y = par_y ? grid_line(py, lo, pixel, side) : -1;
  const auto last = static_cast<long>(side) - 1;
  auto index_of = [&](double c) {
    return std::clamp(static_cast<long>(std::floor((c - lo) / pixel)), 0L, last);
  };
  auto emit = [&](long ix, long iy, double len) {
    if (ix < 0 || ix > last || iy < 0 || iy > last) return;
    hits.push_back({static_cast<std::uint32_t>(iy * static_cast<long>(side) + ix), len});
  };

  for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
    const double len = alphas[k + 1] - alphas[k];
    if (len <= 1e-12 * pixel) continue;
    const double mid = 0.5 * (alphas[k] + alphas[k + 1]);
    const double mx = px + mid * dx;
    const double my = py + mid * dy;
    if (line_x >= 0) {
      const long iy = index_of(my);
      emit(line_x - 1, iy, 0.5 * len);
      emit(line_x, iy, 0.5 * len);
    } else if (line_y >= 0) {
      const long ix = index_of(mx);
      emit(ix, line_y - 1, 0.5 * len);
      emit(ix, line_y, 0.5 * len);
    } else {
      emit(index_of(mx), index_of(my), len);
    }
  }
}

std::size_t fold_reflect(long j, std::size_t n) {
  const auto period = static_cast<long>(2 * n);
  long k = j % period;
  if (k < 0) k += period;
  if (k >= static_cast<long>(n)) k = period - 1 - k;
  return static_cast<std::size_t>(k);
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InputError(std::string(what) + ": dimension mismatch (got " + std::to_string(got) + ", expected " +
                     std::to_string(want) + ")");
  }
}

}  // namespace

SparseRows build_parallel_beam(const ProjectorGeometry& geometry) {
  geometry.validate();
  const std::size_t side = geometry.image_side;
  SparseRows m;
  m.cols = side * side;
  m.row_ptr.reserve(geometry.n_angles * geometry.n_bins + 1);
  m.row_ptr.push_back(0);
  std::vector<double> alphas;
  std::vector<Hit> hits;
  const double centre = 0.5 * (static_cast<double>(geometry.n_bins) - 1.0);
  for (std::size_t a = 0; a < geometry.n_angles; ++a) {
    const double phi = std::numbers::pi * static_cast<double>(a) / static_cast<double>(geometry.n_angles);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    for (std::size_t b = 0; b < geometry.n_bins; ++b) {
      const double t = (static_cast<double>(b) - centre) * geometry.bin_size;
      // Ray through t * (cos, sin) running along (-sin, cos).
      trace_ray(t * c, t * s, -s, c, side, geometry.pixel_size, alphas, hits);
      for (const auto& h : hits) {
        m.col.push_back(h.pixel);
        m.val.push_back(h.length * geometry.gain);
      }
      m.row_ptr.push_back(m.col.size());
    }
  }
  return m;
}

ForwardOp ForwardOp::identity(std::size_t n) { return ForwardOp(IdentityOp{n}); }

ForwardOp ForwardOp::conv1d(Kernel1D kernel, std::size_t n) {
  if (n == 0) throw ParameterError("conv1d: signal length must be >= 1");
  if (kernel.taps.size() != 2 * kernel.halfwidth + 1) throw ParameterError("conv1d: kernel must have 2*halfwidth+1 taps");
  return ForwardOp(Conv1DOp{std::move(kernel), n});
}

ForwardOp ForwardOp::parallel_beam(const ProjectorGeometry& geometry) {
  return ForwardOp(ParallelBeamOp{geometry, build_parallel_beam(geometry)});
}

std::size_t ForwardOp::input_size() const noexcept {
  if (const auto* id = std::get_if<IdentityOp>(&op_)) return id->n;
  if (const auto* cv = std::get_if<Conv1DOp>(&op_)) return cv->n;
  return std::get<ParallelBeamOp>(op_).matrix.cols;
}

std::size_t ForwardOp::output_size() const noexcept {
  if (const auto* id = std::get_if<IdentityOp>(&op_)) return id->n;
  if (const auto* cv = std::get_if<Conv1DOp>(&op_)) return cv->n;
  return std::get<ParallelBeamOp>(op_).matrix.rows();
}

std::vector<double> apply(const ForwardOp& op, std::span<const double> theta) {
  require_size(theta.size(), op.input_size(), "apply");
  if (std::holds_alternative<IdentityOp>(op.params())) return {theta.begin(), theta.end()};
  std::vector<double> y(op.output_size(), 0.0);
  if (const auto* cv = std::get_if<Conv1DOp>(&op.params())) {
    const auto h = static_cast<long>(cv->kernel.halfwidth);
    for (std::size_t i = 0; i < cv->n; ++i) {
      double acc = 0.0;
      for (long k = -h; k <= h; ++k) {
        acc += cv->kernel.taps[static_cast<std::size_t>(k + h)] * theta[fold_reflect(static_cast<long>(i) + k, cv->n)];
      }
      y[i] = acc;
    }
    return y;
  }
  const auto& m = std::get<ParallelBeamOp>(op.params()).matrix;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) acc += m.val[e] * theta[m.col[e]];
    y[r] = acc;
  }
  return y;
}

std::vector<double> adjoint(const ForwardOp& op, std::span<const double> v) {
  require_size(v.size(), op.output_size(), "adjoint");
  if (std::holds_alternative<IdentityOp>(op.params())) return {v.begin(), v.end()};
  std::vector<double> x(op.input_size(), 0.0);
  if (const auto* cv = std::get_if<Conv1DOp>(&op.params())) {
    const auto h = static_cast<long>(cv->kernel.halfwidth);
    for (std::size_t i = 0; i < cv->n; ++i) {
      for (long k = -h; k <= h; ++k) {
        x[fold_reflect(static_cast<long>(i) + k, cv->n)] += cv->kernel.taps[static_cast<std::size_t>(k + h)] * v[i];
      }
    }
    return x;
  }
  const auto& m = std::get<ParallelBeamOp>(op.params()).matrix;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double vr = v[r];
    if (vr == 0.0) continue;
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) x[m.col[e]] += m.val[e] * vr;
  }
  return x;
}

std::vector<double> sensitivity(const ForwardOp& op) {
  const std::vector<double> ones(op.output_size(), 1.0);
  return adjoint(op, ones);
}

}  // namespace dcloss

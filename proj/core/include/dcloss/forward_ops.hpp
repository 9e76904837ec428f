#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace dcloss {

/// Symmetric, normalised, odd-length 1D kernel.
struct Kernel1D {
  std::vector<double> taps;
  std::size_t halfwidth = 0;
};

/// taps_k proportional to exp(-k^2 / (2 sigma^2)) for k in [-halfwidth, halfwidth].
/// Throws ParameterError for sigma <= 0 or halfwidth == 0.
Kernel1D gaussian_kernel(double sigma_index_space, std::size_t halfwidth);

/// 2D parallel-beam geometry. The image is image_side x image_side pixels of
/// side pixel_size, centred on the origin. Angles are k * pi / n_angles; bin b
/// sits at offset (b - (n_bins - 1) / 2) * bin_size from the rotation centre.
/// gain scales every line integral (counts per unit of activity x length).
struct ProjectorGeometry {
  std::size_t image_side = 64;
  std::size_t n_angles = 60;
  std::size_t n_bins = 95;
  double pixel_size = 1.0;
  double bin_size = 1.0;
  double gain = 1.0;

  /// Throws ParameterError unless image_side >= 2, n_angles >= 1,
  /// n_bins >= image_side * sqrt(2) and sizes are positive.
  void validate() const;
};

/// Compressed sparse rows of a nonnegative system matrix.
struct SparseRows {
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t rows() const noexcept { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }
};

/// Exact ray/pixel intersection lengths (Siddon), one row per (angle, bin),
/// row index angle * n_bins + bin, pixel index row-major (y * side + x).
/// A ray lying exactly on a grid line splits its length between both
/// neighbouring pixels.
SparseRows build_parallel_beam(const ProjectorGeometry& geometry);

struct IdentityOp {
  std::size_t n;
};

/// Convolution with half-sample symmetric (reflective) boundaries.
struct Conv1DOp {
  Kernel1D kernel;
  std::size_t n;
};

struct ParallelBeamOp {
  ProjectorGeometry geometry;
  SparseRows matrix;
};

/// Linear forward operator with an exact adjoint. Immutable once built.
class ForwardOp {
 public:
  using Variant = std::variant<IdentityOp, Conv1DOp, ParallelBeamOp>;

  static ForwardOp identity(std::size_t n);
  static ForwardOp conv1d(Kernel1D kernel, std::size_t n);
  static ForwardOp parallel_beam(const ProjectorGeometry& geometry);

  std::size_t input_size() const noexcept;
  std::size_t output_size() const noexcept;
  const Variant& params() const noexcept { return op_; }

 private:
  explicit ForwardOp(Variant op) : op_(std::move(op)) {}
  Variant op_;
};

/// y = f(theta). Throws InputError on a dimension mismatch.
std::vector<double> apply(const ForwardOp& op, std::span<const double> theta);

/// Exact transpose of apply.
std::vector<double> adjoint(const ForwardOp& op, std::span<const double> v);

/// adjoint(op, ones).
std::vector<double> sensitivity(const ForwardOp& op);

}  // namespace dcloss

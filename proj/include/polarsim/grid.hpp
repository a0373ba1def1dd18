#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polarsim {

/// Raised when a Field is combined with a Grid (or another Field) it does not
/// live on, or when a grid is constructed with invalid extents.
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vertex-centered tensor grid on an interval [0, L] or a rectangle
/// [0, Lx] x [0, Ly]. Nodes include the boundary, so the spacing along an
/// axis is length / (n - 1). Node (i, j) is stored at index j * nx + i.
class Grid {
 public:
  static Grid line(double length, std::size_t n);
  static Grid rectangle(double lx, double ly, std::size_t nx, std::size_t ny);

  int dim() const { return dim_; }
  double length(int axis) const { return axis == 0 ? lx_ : ly_; }
  std::size_t nodes(int axis) const { return axis == 0 ? nx_ : ny_; }
  double spacing(int axis) const;
  double min_spacing() const;
  std::size_t size() const { return nx_ * ny_; }
  /// |Omega|: length in 1D, area in 2D.
  double measure() const { return dim_ == 1 ? lx_ : lx_ * ly_; }

  std::size_t index(std::size_t i, std::size_t j = 0) const { return j * nx_ + i; }
  double x(std::size_t i) const { return static_cast<double>(i) * spacing(0); }
  double y(std::size_t j) const { return dim_ == 1 ? 0.0 : static_cast<double>(j) * spacing(1); }
  double x_of(std::size_t node) const { return x(node % nx_); }
  double y_of(std::size_t node) const { return y(node / nx_); }

  /// Trapezoid quadrature weight of a node (unnormalized; sums to measure()).
  double weight(std::size_t node) const;
  const std::vector<double>& weights() const { return weights_; }

  /// Human-readable one-line description, used in output headers.
  std::string describe() const;

  bool operator==(const Grid& other) const {
    return dim_ == other.dim_ && lx_ == other.lx_ && ly_ == other.ly_ &&
           nx_ == other.nx_ && ny_ == other.ny_;
  }

 private:
  Grid(int dim, double lx, double ly, std::size_t nx, std::size_t ny);

  int dim_;
  double lx_;
  double ly_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<double> weights_;
};

/// Scalar nodal values on a Grid.
class Field {
 public:
  explicit Field(const Grid& grid, double fill = 0.0);
  Field(const Grid& grid, std::vector<double> values);

  template <class Fn>
  static Field from_function(const Grid& grid, Fn&& fn) {
    Field f(grid);
    for (std::size_t n = 0; n < grid.size(); ++n) f[n] = fn(grid.x_of(n), grid.y_of(n));
    return f;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  double min() const;
  double max() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  Grid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Throws GridError unless both fields live on the same grid.
void require_same_grid(const Field& a, const Field& b);

/// Second-order discrete Laplacian with homogeneous Neumann conditions
/// imposed through mirror ghost nodes. Self-adjoint under the trapezoid
/// weights; annihilates constants exactly. The 2D operator is the tensor
/// sum of the 1D ones.
Field apply_laplacian(const Grid& grid, const Field& f);
/// Same operator on raw nodal arrays; `out` must not alias `in`.
void apply_laplacian(const Grid& grid, std::span<const double> in, std::span<double> out);

/// j-th (1-based, ascending, with multiplicity) eigenvalue of -Laplacian
/// with Neumann conditions on the continuum interval / rectangle.
double neumann_eigenvalue(const Grid& grid, std::size_t j);

/// j-th eigenvalue of the discrete operator -apply_laplacian on this grid.
/// In 1D: (2/h^2)(1 - cos((j-1) pi / (n-1))).
double discrete_neumann_eigenvalue(const Grid& grid, std::size_t j);

// Quadrature-based functionals. Norms and means are |Omega|-normalized.
double integral(const Field& f);
double mean(const Field& f);
Field deviation(const Field& f);
/// (1/|Omega|) * integral of f * g.
double inner(const Field& f, const Field& g);
double l2_norm(const Field& f);
double linf_norm(const Field& f);
/// Normalized ||grad f||_2 from forward differences, weighted so that
/// h1_seminorm(f)^2 == -inner(apply_laplacian(f), f).
double h1_seminorm(const Field& f);
/// Unnormalized integral of |grad f|^2 with the same discretization.
double gradient_energy(const Field& f);

/// z with -Lap z = f - mean(f) and mean(z) = 0, for the discrete Neumann
/// Laplacian. Direct recurrence in 1D; conjugate gradients on the mean-free
/// subspace in 2D, where rel_tol applies.
Field inverse_neumann_laplacian(const Field& f, double rel_tol = 1e-14);

}  // namespace polarsim

#include "polarsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace polarsim {

namespace {

std::vector<double> trapezoid_weights_1d(std::size_t n, double h) {
  std::vector<double> w(n, h);
  w.front() = 0.5 * h;
  w.back() = 0.5 * h;
  return w;
}

double discrete_mode_1d(std::size_t k, std::size_t n, double h) {
  const double theta = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1);
  return 2.0 / (h * h) * (1.0 - std::cos(theta));
}

double continuum_mode_1d(std::size_t k, double length) {
  const double q = std::numbers::pi * static_cast<double>(k) / length;
  return q * q;
}

// j-th smallest (1-based) of a(p) + b(q) over 0 <= p < np, 0 <= q < nq.
template <class A, class B>
double jth_tensor_sum(std::size_t j, std::size_t np, std::size_t nq, A&& a, B&& b) {
  np = std::min(np, j);
  nq = std::min(nq, j);
  std::vector<double> values;
  values.reserve(np * nq);
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t q = 0; q < nq; ++q) values.push_back(a(p) + b(q));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(j - 1), values.end());
  return values[j - 1];
}

}  // namespace

Grid::Grid(int dim, double lx, double ly, std::size_t nx, std::size_t ny)
    : dim_(dim), lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
  const auto wx = trapezoid_weights_1d(nx_, spacing(0));
  if (dim_ == 1) {
    weights_ = wx;
    return;
  }
  const auto wy = trapezoid_weights_1d(ny_, spacing(1));
  weights_.resize(nx_ * ny_);
  for (std::size_t j = 0; j < ny_; ++j)
    for (std::size_t i = 0; i < nx_; ++i) weights_[index(i, j)] = wx[i] * wy[j];
}

Grid Grid::line(double length, std::size_t n) {
  if (!(length > 0.0) || !std::isfinite(length)) throw GridError("grid length must be positive and finite");
  if (n < 3) throw GridError("grid needs at least 3 nodes per axis");
  return Grid(1, length, 0.0, n, 1);
}

Grid Grid::rectangle(double lx, double ly, std::size_t nx, std::size_t ny) {
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw GridError("grid lengths must be positive and finite");
  if (nx < 3 || ny < 3) throw GridError("grid needs at least 3 nodes per axis");
  return Grid(2, lx, ly, nx, ny);
}

double Grid::spacing(int axis) const {
  return axis == 0 ? lx_ / static_cast<double>(nx_ - 1) : ly_ / static_cast<double>(ny_ - 1);
}

double Grid::min_spacing() const { return dim_ == 1 ? spacing(0) : std::min(spacing(0), spacing(1)); }

double Grid::weight(std::size_t node) const { return weights_[node]; }

std::string Grid::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (dim_ == 1)
    os << "dim=1 L=" << lx_ << " n=" << nx_;
  else
    os << "dim=2 Lx=" << lx_ << " Ly=" << ly_ << " nx=" << nx_ << " ny=" << ny_;
  return os.str();
}

Field::Field(const Grid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw GridError("field value count does not match grid node count");
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw GridError("fields live on different grids");
}

Field apply_laplacian(const Grid& grid, const Field& f) {
  if (!(f.grid() == grid)) throw GridError("field does not live on the given grid");
  Field out(grid);
  apply_laplacian(grid, f.values(), out.values());
  return out;
}

void apply_laplacian(const Grid& grid, std::span<const double> f, std::span<double> out) {
  if (f.size() != grid.size() || out.size() != grid.size())
    throw GridError("array size does not match grid node count");
  const std::size_t nx = grid.nodes(0);
  const std::size_t ny = grid.nodes(1);
  const double ihx2 = 1.0 / (grid.spacing(0) * grid.spacing(0));

  for (std::size_t j = 0; j < ny; ++j) {
    const std::size_t row = j * nx;
    out[row] = 2.0 * (f[row + 1] - f[row]) * ihx2;
    for (std::size_t i = 1; i + 1 < nx; ++i)
      out[row + i] = (f[row + i + 1] - 2.0 * f[row + i] + f[row + i - 1]) * ihx2;
    out[row + nx - 1] = 2.0 * (f[row + nx - 2] - f[row + nx - 1]) * ihx2;
  }
  if (grid.dim() == 1) return;

  const double ihy2 = 1.0 / (grid.spacing(1) * grid.spacing(1));
  for (std::size_t i = 0; i < nx; ++i) {
    out[i] += 2.0 * (f[nx + i] - f[i]) * ihy2;
    for (std::size_t j = 1; j + 1 < ny; ++j) {
      const std::size_t n = j * nx + i;
      out[n] += (f[n + nx] - 2.0 * f[n] + f[n - nx]) * ihy2;
    }
    const std::size_t last = (ny - 1) * nx + i;
    out[last] += 2.0 * (f[last - nx] - f[last]) * ihy2;
  }
}

double neumann_eigenvalue(const Grid& grid, std::size_t j) {
  if (j < 1) throw GridError("eigenvalue index is 1-based");
  if (grid.dim() == 1) return continuum_mode_1d(j - 1, grid.length(0));
  return jth_tensor_sum(
      j, j, j, [&](std::size_t p) { return continuum_mode_1d(p, grid.length(0)); },
      [&](std::size_t q) { return continuum_mode_1d(q, grid.length(1)); });
}

double discrete_neumann_eigenvalue(const Grid& grid, std::size_t j) {
  if (j < 1 || j > grid.size()) throw GridError("discrete eigenvalue index out of range");
  const std::size_t nx = grid.nodes(0);
  if (grid.dim() == 1) return discrete_mode_1d(j - 1, nx, grid.spacing(0));
  const std::size_t ny = grid.nodes(1);
  return jth_tensor_sum(
      j, nx, ny, [&](std::size_t p) { return discrete_mode_1d(p, nx, grid.spacing(0)); },
      [&](std::size_t q) { return discrete_mode_1d(q, ny, grid.spacing(1)); });
}

double integral(const Field& f) {
  const auto& w = f.grid().weights();
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += w[n] * f[n];
  return s;
}

double mean(const Field& f) { return integral(f) / f.grid().measure(); }

Field deviation(const Field& f) {
  Field d = f;
  const double m = mean(f);
  for (double& v : d.values()) v -= m;
  return d;
}

double inner(const Field& f, const Field& g) {
  require_same_grid(f, g);
  const auto& w = f.grid().weights();
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += w[n] * f[n] * g[n];
  return s / f.grid().measure();
}

double l2_norm(const Field& f) { return std::sqrt(inner(f, f)); }

double linf_norm(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double gradient_energy(const Field& f) {
  const Grid& g = f.grid();
  const std::size_t nx = g.nodes(0);
  const std::size_t ny = g.nodes(1);
  const double hx = g.spacing(0);

  // 1D trapezoid weight in y of row j (1 in 1D).
  auto wy = [&](std::size_t j) {
    if (g.dim() == 1) return 1.0;
    const double hy = g.spacing(1);
    return (j == 0 || j + 1 == ny) ? 0.5 * hy : hy;
  };
  auto wx = [&](std::size_t i) { return (i == 0 || i + 1 == nx) ? 0.5 * hx : hx; };

  double s = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double d = f[g.index(i + 1, j)] - f[g.index(i, j)];
      row += d * d;
    }
    s += wy(j) * row / hx;
  }
  if (g.dim() == 2) {
    const double hy = g.spacing(1);
    for (std::size_t i = 0; i < nx; ++i) {
      double col = 0.0;
      for (std::size_t j = 0; j + 1 < ny; ++j) {
        const double d = f[g.index(i, j + 1)] - f[g.index(i, j)];
        col += d * d;
      }
      s += wx(i) * col / hy;
    }
  }
  return s;
}

double h1_seminorm(const Field& f) { return std::sqrt(gradient_energy(f) / f.grid().measure()); }

Field inverse_neumann_laplacian(const Field& f, double rel_tol) {
  const Grid& g = f.grid();
  const std::size_t N = g.size();
  const auto& w = g.weights();
  auto wdot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n) s += w[n] * a[n] * b[n];
    return s;
  };
  auto center = [&](std::vector<double>& a) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n) s += w[n] * a[n];
    s /= g.measure();
    for (double& v : a) v -= s;
  };

  std::vector<double> b(f.values().begin(), f.values().end());
  center(b);

  if (g.dim() == 1) {
    // Tridiagonal and singular: march the rows from the left with z_0 = 0.
    // The last row holds automatically because b has zero weighted mean.
    const double h2 = g.spacing(0) * g.spacing(0);
    std::vector<double> z(N, 0.0);
    z[1] = -0.5 * h2 * b[0];
    for (std::size_t i = 1; i + 1 < N; ++i) z[i + 1] = 2.0 * z[i] - z[i - 1] - h2 * b[i];
    center(z);
    return Field(g, std::move(z));
  }

  std::vector<double> x(N, 0.0), r = b, p = b, Ap(N);
  double rr = wdot(r, r);
  const double stop = rel_tol * rel_tol * rr;
  for (std::size_t it = 0; it < 20 * N && rr > stop; ++it) {
    apply_laplacian(g, p, Ap);
    for (double& v : Ap) v = -v;
    const double alpha = rr / wdot(p, Ap);
    for (std::size_t n = 0; n < N; ++n) {
      x[n] += alpha * p[n];
      r[n] -= alpha * Ap[n];
    }
    center(r);
    const double rr_next = wdot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t n = 0; n < N; ++n) p[n] = r[n] + beta * p[n];
  }
  center(x);
  return Field(g, std::move(x));
}

}  // namespace polarsim

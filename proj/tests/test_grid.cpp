#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "polarsim/grid.hpp"

using namespace polarsim;
using std::numbers::pi;

namespace {

Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Field f(g);
  for (std::size_t n = 0; n < f.size(); ++n) f[n] = U(rng);
  return f;
}

// Dense matrix of apply_laplacian, column by column.
Eigen::MatrixXd dense_laplacian(const Grid& g) {
  const auto N = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd A(N, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    Field e(g);
    e[static_cast<std::size_t>(c)] = 1.0;
    const Field col = apply_laplacian(g, e);
    for (Eigen::Index r = 0; r < N; ++r) A(r, c) = col[static_cast<std::size_t>(r)];
  }
  return A;
}

}  // namespace

TEST_CASE("grid construction") {
  const Grid g = Grid::line(2.0, 5);
  CHECK(g.dim() == 1);
  CHECK(g.size() == 5);
  CHECK(g.spacing(0) == doctest::Approx(0.5));
  CHECK(g.measure() == 2.0);

  const Grid r = Grid::rectangle(1.0, 2.0, 4, 7);
  CHECK(r.size() == 28);
  CHECK(r.spacing(1) == doctest::Approx(2.0 / 6.0));
  CHECK(r.index(3, 2) == 11);
  CHECK(r.x_of(11) == doctest::Approx(1.0));
  CHECK(r.y_of(11) == doctest::Approx(2.0 / 3.0));

  double wsum = 0.0;
  for (double w : r.weights()) wsum += w;
  CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));

  CHECK_THROWS_AS(Grid::line(1.0, 2), GridError);
  CHECK_THROWS_AS(Grid::line(-1.0, 8), GridError);
  CHECK_THROWS_AS(Grid::rectangle(1.0, 0.0, 8, 8), GridError);
}

TEST_CASE("field rejects a foreign grid") {
  const Field a(Grid::line(1.0, 8));
  const Field b(Grid::line(1.0, 9));
  CHECK_THROWS_AS(require_same_grid(a, b), GridError);
  CHECK_THROWS_AS(inner(a, b), GridError);
  CHECK_THROWS_AS(apply_laplacian(Grid::line(1.0, 9), a), GridError);
  CHECK_THROWS_AS(Field(Grid::line(1.0, 8), std::vector<double>(7, 0.0)), GridError);
}

TEST_CASE("laplacian stencil on three nodes") {
  const Grid g = Grid::line(2.0, 3);  // h = 1
  const Field f(g, {0.0, 1.0, 0.0});
  const Field l = apply_laplacian(g, f);
  CHECK(l[0] == 2.0);
  CHECK(l[1] == -2.0);
  CHECK(l[2] == 2.0);
}

TEST_CASE("laplacian annihilates constants") {
  for (const Grid& g : {Grid::line(1.3, 17), Grid::rectangle(1.0, 0.7, 9, 13)}) {
    const Field c(g, 3.75);
    CHECK(linf_norm(apply_laplacian(g, c)) <= 1e-13 * 3.75);
  }
}

TEST_CASE("laplacian is self-adjoint under the quadrature weights") {
  std::mt19937_64 rng(11);
  for (const Grid& g : {Grid::line(1.0, 33), Grid::rectangle(1.0, 2.0, 11, 7)}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Field f = random_field(g, rng);
      const Field q = random_field(g, rng);
      const double lhs = inner(apply_laplacian(g, f), q);
      const double rhs = inner(f, apply_laplacian(g, q));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), 1.0));
    }
  }
}

TEST_CASE("laplacian of the first cosine converges at second order") {
  double prev = 0.0;
  for (std::size_t n : {17u, 33u, 65u, 129u}) {
    const Grid g = Grid::line(1.0, n);
    const Field f = Field::from_function(g, [](double x, double) { return std::cos(pi * x); });
    const Field l = apply_laplacian(g, f);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(l[i] + pi * pi * f[i]));
    if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.02));
    prev = err;
  }
}

TEST_CASE("2D laplacian is the tensor sum") {
  const Grid g = Grid::rectangle(1.0, 2.0, 9, 11);
  const Field f = Field::from_function(g, [](double x, double y) { return x * x * x + std::sin(y) * x; });
  const Field l = apply_laplacian(g, f);
  const Grid gx = Grid::line(1.0, 9);
  const Grid gy = Grid::line(2.0, 11);
  for (std::size_t j = 0; j < 11; ++j) {
    Field row(gx);
    for (std::size_t i = 0; i < 9; ++i) row[i] = f[g.index(i, j)];
    const Field lx = apply_laplacian(gx, row);
    for (std::size_t i = 0; i < 9; ++i) {
      Field col(gy);
      for (std::size_t jj = 0; jj < 11; ++jj) col[jj] = f[g.index(i, jj)];
      const double ly = apply_laplacian(gy, col)[j];
      CHECK(l[g.index(i, j)] == doctest::Approx(lx[i] + ly).epsilon(1e-12));
    }
  }
}

TEST_CASE("continuum eigenvalues") {
  CHECK(neumann_eigenvalue(Grid::line(pi, 8), 2) == doctest::Approx(1.0));
  CHECK(neumann_eigenvalue(Grid::line(1.0, 8), 1) == 0.0);
  const Grid sq = Grid::rectangle(1.0, 1.0, 8, 8);
  CHECK(neumann_eigenvalue(sq, 2) == doctest::Approx(pi * pi));
  CHECK(neumann_eigenvalue(sq, 3) == doctest::Approx(pi * pi));
  CHECK(neumann_eigenvalue(sq, 4) == doctest::Approx(2.0 * pi * pi));
  CHECK(neumann_eigenvalue(sq, 5) == doctest::Approx(4.0 * pi * pi));
  const Grid r = Grid::rectangle(1.0, 2.0, 8, 8);
  CHECK(neumann_eigenvalue(r, 2) == doctest::Approx(pi * pi / 4.0));
  CHECK(neumann_eigenvalue(r, 3) == doctest::Approx(pi * pi));
}

TEST_CASE("discrete eigenvalues match a dense eigensolve") {
  for (const Grid& g : {Grid::line(1.0, 12), Grid::line(2.5, 9), Grid::rectangle(1.0, 1.5, 6, 7)}) {
    // Symmetrize with the square-root weights before eigensolving.
    const Eigen::MatrixXd A = dense_laplacian(g);
    const auto N = static_cast<Eigen::Index>(g.size());
    Eigen::VectorXd s(N);
    for (Eigen::Index i = 0; i < N; ++i) s(i) = std::sqrt(g.weight(static_cast<std::size_t>(i)));
    const Eigen::MatrixXd S = -(s.asDiagonal() * A * s.cwiseInverse().asDiagonal());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    const Eigen::VectorXd ev = es.eigenvalues();
    for (std::size_t j = 1; j <= g.size(); ++j)
      CHECK(discrete_neumann_eigenvalue(g, j) ==
            doctest::Approx(ev(static_cast<Eigen::Index>(j - 1))).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("discrete second eigenvalue converges at second order") {
  double prev = 0.0;
  for (std::size_t n : {11u, 21u, 41u, 81u}) {
    const Grid g = Grid::line(1.0, n);
    const double err = std::abs(discrete_neumann_eigenvalue(g, 2) - pi * pi);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.02));
    prev = err;
  }
}

TEST_CASE("means and norms") {
  const Grid g = Grid::line(1.0, 65);
  const Field c(g, -2.5);
  CHECK(mean(c) == doctest::Approx(-2.5));
  CHECK(linf_norm(deviation(c)) <= 1e-15);
  CHECK(h1_seminorm(c) == 0.0);
  CHECK(l2_norm(c) == doctest::Approx(2.5));

  // The trapezoid rule integrates the cosine modes to zero exactly.
  const Field cs = Field::from_function(g, [](double x, double) { return std::cos(pi * x); });
  CHECK(std::abs(mean(cs)) <= 1e-15);
  CHECK(l2_norm(cs) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(linf_norm(cs) == doctest::Approx(1.0));

  // An odd-order polynomial is integrated with an O(h^2) error.
  double prev = 0.0;
  for (std::size_t n : {17u, 33u, 65u}) {
    const Field p = Field::from_function(Grid::line(1.0, n), [](double x, double) { return x * x * x; });
    const double err = std::abs(mean(p) - 0.25);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }

  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Field f = random_field(Grid::rectangle(1.0, 3.0, 7, 9), rng);
    CHECK(std::abs(mean(deviation(f))) <= 1e-15);
  }
}

TEST_CASE("gradient energy is the discrete Dirichlet form") {
  std::mt19937_64 rng(5);
  for (const Grid& g : {Grid::line(2.0, 40), Grid::rectangle(1.0, 0.5, 10, 6)}) {
    const Field f = random_field(g, rng);
    const double form = -inner(apply_laplacian(g, f), f);
    CHECK(h1_seminorm(f) * h1_seminorm(f) == doctest::Approx(form).epsilon(1e-12));
    CHECK(gradient_energy(f) == doctest::Approx(form * g.measure()).epsilon(1e-12));
  }
}

TEST_CASE("discrete Poincare-Wirtinger with the discrete second eigenvalue") {
  std::mt19937_64 rng(17);
  for (const Grid& g : {Grid::line(1.0, 9), Grid::line(3.0, 31), Grid::rectangle(1.0, 2.0, 8, 5)}) {
    const double mu2h = discrete_neumann_eigenvalue(g, 2);
    for (int t = 0; t < 200; ++t) {
      const Field f = random_field(g, rng);
      const double dev = l2_norm(deviation(f));
      CHECK(dev * dev <= h1_seminorm(f) * h1_seminorm(f) / mu2h * (1.0 + 1e-12));
    }
    // Equality for the discrete eigenvector.
    const Field e = Field::from_function(g, [&](double x, double) { return std::cos(pi * x / g.length(0)); });
    if (g.dim() == 1 || g.length(0) >= g.length(1)) {
      const double dev = l2_norm(deviation(e));
      CHECK(dev * dev == doctest::Approx(h1_seminorm(e) * h1_seminorm(e) / mu2h).epsilon(1e-10));
    }
  }
}

TEST_CASE("inverse Neumann laplacian") {
  std::mt19937_64 rng(23);
  for (const Grid& g : {Grid::line(1.0, 50), Grid::rectangle(1.0, 1.3, 12, 9)}) {
    const Field f = random_field(g, rng);
    const Field z = inverse_neumann_laplacian(f);
    CHECK(std::abs(mean(z)) <= 1e-14);
    const Field back = apply_laplacian(g, z);
    const Field dev = deviation(f);
    double err = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) err = std::max(err, std::abs(back[n] + dev[n]));
    CHECK(err <= 1e-9 * linf_norm(dev));
  }
}

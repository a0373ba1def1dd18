#include "polarsim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace polarsim {

namespace {

// Factorized (I - c Lap) for the 1D mirror-ghost stencil.
struct TridiagonalFactor {
  std::vector<double> sub;        // a_i
  std::vector<double> upper;      // modified super-diagonal c'_i
  std::vector<double> inv_pivot;  // 1 / m_i

  TridiagonalFactor(std::size_t n, double r) : sub(n), upper(n), inv_pivot(n) {
    std::vector<double> diag(n, 1.0 + 2.0 * r), sup(n, -r);
    std::fill(sub.begin(), sub.end(), -r);
    sup[0] = -2.0 * r;
    sub[n - 1] = -2.0 * r;
    sub[0] = 0.0;
    sup[n - 1] = 0.0;
    double m = diag[0];
    inv_pivot[0] = 1.0 / m;
    upper[0] = sup[0] / m;
    for (std::size_t i = 1; i < n; ++i) {
      m = diag[i] - sub[i] * upper[i - 1];
      inv_pivot[i] = 1.0 / m;
      upper[i] = sup[i] / m;
    }
  }

  void solve(std::span<const double> rhs, std::span<double> x) const {
    const std::size_t n = rhs.size();
    x[0] = rhs[0] * inv_pivot[0];
    for (std::size_t i = 1; i < n; ++i) x[i] = (rhs[i] - sub[i] * x[i - 1]) * inv_pivot[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= upper[i] * x[i + 1];
  }
};

// Solves (I - c Lap) x = rhs. 1D: direct elimination. 2D: conjugate
// gradients in the trapezoid-weighted inner product on the mean-free part.
// The operator preserves the mean, so in both cases the mean of x is set
// to that of rhs.
class ImplicitDiffusion {
 public:
  ImplicitDiffusion(const Grid& grid, double tol) : grid_(grid), tol_(tol) {}

  void solve(double c, std::span<const double> rhs, std::span<double> x) const {
    if (c == 0.0) {
      std::copy(rhs.begin(), rhs.end(), x.begin());
      return;
    }
    if (grid_.dim() == 1) {
      factor(c).solve(rhs, x);
      // Elimination round-off shifts the mean slightly; constants are
      // invariant under the operator, so restore it exactly.
      const double drift = wmean(x) - wmean(rhs);
      for (double& v : x) v -= drift;
      return;
    }
    conjugate_gradient(c, rhs, x);
  }

 private:
  const TridiagonalFactor& factor(double c) const {
    auto it = cache_.find(c);
    if (it == cache_.end()) {
      if (cache_.size() > 32) cache_.clear();
      const double h = grid_.spacing(0);
      it = cache_.emplace(c, TridiagonalFactor(grid_.size(), c / (h * h))).first;
    }
    return it->second;
  }

  double wdot(std::span<const double> a, std::span<const double> b) const {
    const auto& w = grid_.weights();
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) s += w[n] * a[n] * b[n];
    return s;
  }

  double wmean(std::span<const double> a) const {
    const auto& w = grid_.weights();
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) s += w[n] * a[n];
    return s / grid_.measure();
  }

  void apply(double c, std::span<const double> in, std::span<double> out) const {
    apply_laplacian(grid_, in, out);
    for (std::size_t n = 0; n < in.size(); ++n) out[n] = in[n] - c * out[n];
  }

  void conjugate_gradient(double c, std::span<const double> rhs, std::span<double> x) const {
    const std::size_t N = rhs.size();
    const double rhs_mean = wmean(rhs);
    std::vector<double> b(rhs.begin(), rhs.end());
    for (double& v : b) v -= rhs_mean;

    std::vector<double> r(N), p(N), Ap(N);
    std::copy(b.begin(), b.end(), x.begin());
    apply(c, x, Ap);
    for (std::size_t n = 0; n < N; ++n) r[n] = b[n] - Ap[n];
    p = r;
    double rr = wdot(r, r);
    const double stop = tol_ * tol_ * std::max(wdot(b, b), 1e-300);
    for (std::size_t it = 0; it < 10 * N && rr > stop; ++it) {
      apply(c, p, Ap);
      const double alpha = rr / wdot(p, Ap);
      for (std::size_t n = 0; n < N; ++n) {
        x[n] += alpha * p[n];
        r[n] -= alpha * Ap[n];
      }
      const double rr_next = wdot(r, r);
      const double beta = rr_next / rr;
      rr = rr_next;
      for (std::size_t n = 0; n < N; ++n) p[n] = r[n] + beta * p[n];
    }
    const double drift = wmean(x);
    for (std::size_t n = 0; n < N; ++n) x[n] += rhs_mean - drift;
  }

  Grid grid_;
  double tol_;
  mutable std::map<double, TridiagonalFactor> cache_;
};

// Reaction values at every node. The activation a(u) is only defined for
// u >= 0, so round-off negatives are evaluated at 0 there; the state itself
// is never modified.
void evaluate_reaction(const ModelParams& params, const Field& u, const Field& v, std::vector<double>& out) {
  out.resize(u.size());
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        for (std::size_t n = 0; n < u.size(); ++n) {
          const double un = u[n];
          const double vn = v[n];
          if constexpr (std::is_same_v<P, Model4Params>) {
            out[n] = vn * a_of_u(p, std::max(un, 0.0)) - p.delta * un;
          } else if constexpr (std::is_same_v<P, Model1Params>) {
            out[n] = h_model1(p, un) + p.k * vn;
          } else {
            out[n] = h_model2(p, un + vn) + p.alpha1 * vn;
          }
        }
      },
      params);
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "imex-be" || name == "IMEX-BE") return Scheme::imex_be;
  if (name == "imex-cn" || name == "IMEX-CN") return Scheme::imex_cn;
  throw ParameterError("scheme must be imex-be or imex-cn (got '" + name + "')");
}

std::string to_string(Scheme s) { return s == Scheme::imex_be ? "imex-be" : "imex-cn"; }

void SolverConfig::validate() const {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ParameterError("t_end must be positive");
  if (stride < 1) throw ParameterError("stride must be at least 1");
  if (retry_limit < 0 || retry_limit > 40) throw ParameterError("retry_limit must lie in [0, 40]");
  if (!(linear_tol > 0.0)) throw ParameterError("linear_tol must be positive");
}

double default_time_step(const Grid& grid, const ModelParams& p) {
  const double h = grid.min_spacing();
  const double D = diffusivity(p);
  const double tau = relaxation(p);
  return 0.25 * std::min(h * h / (2.0 * D), h * h * tau / 2.0) * 0.5;
}

struct Stepper::Impl {
  Grid grid;
  ModelParams params;
  SolverConfig cfg;
  SourceTerms sources;
  ImplicitDiffusion diffusion;
  double dt;

  // Scratch buffers reused across steps.
  mutable std::vector<double> f0, f1, lap_u, lap_v, rhs_u, rhs_v;

  Impl(const Grid& g, ModelParams p, SolverConfig c, SourceTerms s)
      : grid(g), params(std::move(p)), cfg(c), sources(std::move(s)), diffusion(g, c.linear_tol),
        dt(c.dt > 0.0 ? c.dt : default_time_step(g, params)) {}

  void add_sources(double t, double h, double tau, std::vector<double>& ru, std::vector<double>& rv,
                   double weight) const {
    if (!sources.u && !sources.v) return;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const double x = grid.x_of(n), y = grid.y_of(n);
      if (sources.u) ru[n] += weight * h * sources.u(x, y, t);
      if (sources.v) rv[n] += weight * h / tau * sources.v(x, y, t);
    }
  }

  // One step of size h without the positivity check.
  SimState advance(const SimState& s, double h) const {
    const double D = diffusivity(params);
    const double tau = relaxation(params);
    const std::size_t N = grid.size();
    SimState next{s.t + h, Field(grid), Field(grid)};

    evaluate_reaction(params, s.u, s.v, f0);
    rhs_u.assign(N, 0.0);
    rhs_v.assign(N, 0.0);

    if (cfg.scheme == Scheme::imex_be) {
      for (std::size_t n = 0; n < N; ++n) {
        rhs_u[n] = s.u[n] + h * f0[n];
        rhs_v[n] = s.v[n] - h / tau * f0[n];
      }
      add_sources(s.t, h, tau, rhs_u, rhs_v, 1.0);
      diffusion.solve(h * D, rhs_u, next.u.values());
      diffusion.solve(h / tau, rhs_v, next.v.values());
      return next;
    }

    // Crank-Nicolson diffusion with a Heun predictor-corrector for f.
    lap_u.resize(N);
    lap_v.resize(N);
    apply_laplacian(grid, s.u.values(), lap_u);
    apply_laplacian(grid, s.v.values(), lap_v);
    auto explicit_part = [&](std::vector<double>& ru, std::vector<double>& rv) {
      for (std::size_t n = 0; n < N; ++n) {
        ru[n] = s.u[n] + 0.5 * h * D * lap_u[n];
        rv[n] = s.v[n] + 0.5 * h / tau * lap_v[n];
      }
    };

    explicit_part(rhs_u, rhs_v);
    for (std::size_t n = 0; n < N; ++n) {
      rhs_u[n] += h * f0[n];
      rhs_v[n] -= h / tau * f0[n];
    }
    add_sources(s.t, h, tau, rhs_u, rhs_v, 0.5);
    add_sources(s.t + h, h, tau, rhs_u, rhs_v, 0.5);
    SimState predicted{s.t + h, Field(grid), Field(grid)};
    diffusion.solve(0.5 * h * D, rhs_u, predicted.u.values());
    diffusion.solve(0.5 * h / tau, rhs_v, predicted.v.values());

    evaluate_reaction(params, predicted.u, predicted.v, f1);
    explicit_part(rhs_u, rhs_v);
    for (std::size_t n = 0; n < N; ++n) {
      const double f = 0.5 * (f0[n] + f1[n]);
      rhs_u[n] += h * f;
      rhs_v[n] -= h / tau * f;
    }
    add_sources(s.t, h, tau, rhs_u, rhs_v, 0.5);
    add_sources(s.t + h, h, tau, rhs_u, rhs_v, 0.5);
    diffusion.solve(0.5 * h * D, rhs_u, next.u.values());
    diffusion.solve(0.5 * h / tau, rhs_v, next.v.values());
    return next;
  }

  std::optional<SimState> try_substeps(const SimState& s, double h, std::size_t count) const {
    const double scale = std::max({linf_norm(s.u), linf_norm(s.v), 1e-300});
    const double floor = -1e-9 * scale;
    SimState cur = s;
    for (std::size_t i = 0; i < count; ++i) {
      cur = advance(cur, h);
      if (!cur.u.all_finite() || !cur.v.all_finite()) return std::nullopt;
      if (cur.u.min() < floor || cur.v.min() < floor) return std::nullopt;
    }
    return cur;
  }

  SimState step(const SimState& s, double h) const {
    for (int r = 0; r <= cfg.retry_limit; ++r) {
      const std::size_t count = std::size_t{1} << r;
      if (auto out = try_substeps(s, h / static_cast<double>(count), count)) {
        out->t = s.t + h;
        return *std::move(out);
      }
    }
    std::ostringstream os;
    os << "negative or non-finite values after " << cfg.retry_limit << " step halvings at t = " << s.t;
    throw SolverError(os.str(), s);
  }
};

Stepper::Stepper(const Grid& grid, ModelParams params, SolverConfig cfg, SourceTerms sources) {
  validate(params);
  cfg.validate();
  impl_ = std::make_unique<Impl>(grid, std::move(params), cfg, std::move(sources));
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

SimState Stepper::step(const SimState& state) const { return impl_->step(state, impl_->dt); }
SimState Stepper::step(const SimState& state, double dt) const { return impl_->step(state, dt); }
double Stepper::dt() const { return impl_->dt; }
const Grid& Stepper::grid() const { return impl_->grid; }
const ModelParams& Stepper::params() const { return impl_->params; }

SimState step(const SimState& state, const ModelParams& p, const SolverConfig& cfg) {
  return Stepper(state.u.grid(), p, cfg).step(state);
}

void validate_initial_state(const SimState& state) {
  require_same_grid(state.u, state.v);
  if (!state.u.all_finite() || !state.v.all_finite()) throw ParameterError("initial values must be finite");
  if (state.u.min() < 0.0 || state.v.min() < 0.0) throw ParameterError("initial values must be nonnegative");
  if (state.u.max() == 0.0 && state.v.max() == 0.0) throw ParameterError("initial values must not both vanish");
}

SimState run(SimState initial, const ModelParams& p, const SolverConfig& cfg, const StateObserver& observer,
             const SourceTerms& sources) {
  validate_initial_state(initial);
  const Stepper stepper(initial.u.grid(), p, cfg, sources);
  const double dt = stepper.dt();
  const double t0 = initial.t;
  if (!(cfg.t_end > t0)) throw ParameterError("t_end must exceed the initial time");
  const auto steps = static_cast<std::size_t>(std::ceil((cfg.t_end - t0) / dt - 1e-9));

  SimState state = std::move(initial);
  if (observer) observer(state, 0);
  for (std::size_t n = 1; n <= steps; ++n) {
    // Interior steps use dt exactly so the 1D factorization is reused.
    const double target = n == steps ? cfg.t_end : t0 + static_cast<double>(n) * dt;
    state = stepper.step(state, n == steps ? cfg.t_end - state.t : dt);
    state.t = target;
    if (observer && (n % cfg.stride == 0 || n == steps)) observer(state, n);
  }
  return state;
}

Field transform_w(const SimState& state, const ModelParams& p) {
  require_same_grid(state.u, state.v);
  const double D = diffusivity(p);
  Field w = state.v;
  for (std::size_t n = 0; n < w.size(); ++n) w[n] += D * state.u[n];
  return w;
}

Field transform_z(const SimState& state) { return state.u + state.v; }

double mass_level(const SimState& state, double tau) { return mean(state.u) + tau * mean(state.v); }

}  // namespace polarsim

#include "polarsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "polarsim/equilibrium.hpp"

namespace polarsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Unnormalized integral of f^2.
double squared_integral(const Field& f) { return inner(f, f) * f.grid().measure(); }

// Derivative at t[k] of the quadratic through (t[i], y[i]), i = 0, 1, 2.
std::array<double, 3> lagrange_derivative_weights(const std::array<double, 3>& t, std::size_t k) {
  const double s = t[k];
  return {(2.0 * s - t[1] - t[2]) / ((t[0] - t[1]) * (t[0] - t[2])),
          (2.0 * s - t[0] - t[2]) / ((t[1] - t[0]) * (t[1] - t[2])),
          (2.0 * s - t[0] - t[1]) / ((t[2] - t[0]) * (t[2] - t[1]))};
}

Field time_derivative(const std::array<const Field*, 3>& f, const std::array<double, 3>& wts) {
  Field d(f[0]->grid());
  for (std::size_t n = 0; n < d.size(); ++n) d[n] = wts[0] * (*f[0])[n] + wts[1] * (*f[1])[n] + wts[2] * (*f[2])[n];
  return d;
}

double scalar_derivative(const std::array<double, 3>& y, const std::array<double, 3>& wts) {
  return wts[0] * y[0] + wts[1] * y[1] + wts[2] * y[2];
}

// Roots of phi on [0, lambda] by a uniform scan and bisection.
template <class Phi>
std::vector<double> mass_line_roots(Phi&& phi, double lambda, std::size_t samples = 4000) {
  std::vector<double> roots;
  double u_prev = 0.0;
  double f_prev = phi(0.0);
  if (f_prev == 0.0) roots.push_back(0.0);
  for (std::size_t i = 1; i <= samples; ++i) {
    const double u = lambda * static_cast<double>(i) / static_cast<double>(samples);
    const double fu = phi(u);
    if (fu == 0.0) {
      roots.push_back(u);
    } else if (f_prev != 0.0 && (f_prev < 0.0) != (fu < 0.0)) {
      double lo = u_prev, hi = u, flo = f_prev;
      while (hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * lambda) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = phi(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    u_prev = u;
    f_prev = fu;
  }
  return roots;
}

}  // namespace

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> names = {
      "t",          "lambda",   "u_mean",           "v_mean",
      "w_mean",     "u_dev_l2", "u_dev_linf",       "v_dev_linf",
      "w_dev_l2",   "lyapunov", "identity_residual", "equilibrium_distance",
      "lemma1_pairing", "v_l2"};
  return names;
}

std::vector<double> record_values(const DiagnosticsRecord& r) {
  return {r.t,        r.lambda,   r.u_mean,           r.v_mean,
          r.w_mean,   r.u_dev_l2, r.u_dev_linf,       r.v_dev_linf,
          r.w_dev_l2, r.lyapunov, r.identity_residual, r.equilibrium_distance,
          r.lemma1_pairing, r.v_l2};
}

NormColumn parse_norm_column(const std::string& name) {
  if (name == "u_dev_l2") return NormColumn::u_dev_l2;
  if (name == "u_dev_linf") return NormColumn::u_dev_linf;
  if (name == "v_dev_linf") return NormColumn::v_dev_linf;
  if (name == "w_dev_l2") return NormColumn::w_dev_l2;
  throw ParameterError("unknown norm column '" + name + "'");
}

double column_value(const DiagnosticsRecord& r, NormColumn c) {
  switch (c) {
    case NormColumn::u_dev_l2: return r.u_dev_l2;
    case NormColumn::u_dev_linf: return r.u_dev_linf;
    case NormColumn::v_dev_linf: return r.v_dev_linf;
    case NormColumn::w_dev_l2: return r.w_dev_l2;
  }
  return kNaN;
}

// ---------------------------------------------------------------------------

TechnicalReport check_technical(const Model4Params& p, double mu2, const std::string& mu2_source) {
  p.validate();
  if (!(mu2 > 0.0)) throw ParameterError("mu2 must be positive");
  const double xi = p.xi();
  const double rhs = p.tau * p.tau * p.tau * (mu2 * p.D + p.delta);

  TechnicalReport r;
  r.printed.name = "technical";
  r.printed.lhs = 2.0 * std::abs(xi) * p.a1();
  r.squared.name = "technical_squared";
  r.squared.lhs = 2.0 * xi * xi * p.a1();
  for (ConditionReport* c : {&r.printed, &r.squared}) {
    c->rhs = rhs;
    c->strict = true;
    c->satisfied = c->lhs < c->rhs;
    c->mu2 = mu2;
    c->mu2_source = mu2_source;
  }
  return r;
}

ConditionReport check_if(const Model4Params& p, double lambda, double mu2, double c4, const std::string& mu2_source) {
  p.validate();
  if (!(mu2 > 0.0)) throw ParameterError("mu2 must be positive");
  if (!(c4 > 0.0) || !std::isfinite(c4)) throw ParameterError("C4 must be positive");
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  const double s = alpha_sup(p) * c4 * lambda / mu2;

  ConditionReport r;
  r.name = "if";
  r.lhs = p.a1() * (1.0 + 1.0 / (2.0 * p.tau)) + (4.0 / p.D) * s * s;
  r.rhs = 0.5 * (p.D * mu2 + p.delta);
  r.satisfied = r.lhs <= r.rhs;
  r.mu2 = mu2;
  r.mu2_source = mu2_source;
  r.c4 = c4;
  r.note = "alpha_sup = sup a' used for b gamma alpha(k)";
  return r;
}

// With s = alpha_sup C4 / mu2 the homogenization condition reads
//   a1 (1 + 1/(2 tau)) + 4 s^2 lambda^2 / D <= (D mu2 + delta) / 2.
// If sigma >= 2 a1 (1 + 1/(2 tau)) and sigma >= 8 s^2, the left side is at
// most sigma (1 + lambda^2 / D) / 2, so sigma (1 + lambda^2 / D) <= D mu2 + delta
// is sufficient.
double sufficient_sigma(const Model4Params& p, double mu2, double c4) {
  p.validate();
  if (!(mu2 > 0.0)) throw ParameterError("mu2 must be positive");
  if (!(c4 > 0.0) || !std::isfinite(c4)) throw ParameterError("C4 must be positive");
  const double s = alpha_sup(p) * c4 / mu2;
  return std::max(2.0 * p.a1() * (1.0 + 1.0 / (2.0 * p.tau)), 8.0 * s * s);
}

ConditionReport check_sigma_condition(const Model4Params& p, double lambda, double mu2, double sigma,
                                      const std::string& sigma_source, const std::string& mu2_source) {
  p.validate();
  if (!(mu2 > 0.0)) throw ParameterError("mu2 must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be nonnegative");
  ConditionReport r;
  r.name = "sigma";
  r.lhs = sigma * (1.0 + lambda * lambda / p.D);
  r.rhs = p.D * mu2 + p.delta;
  r.satisfied = r.lhs <= r.rhs;
  r.mu2 = mu2;
  r.mu2_source = mu2_source;
  r.sigma = sigma;
  r.sigma_source = sigma_source;
  return r;
}

// ---------------------------------------------------------------------------

double lyapunov_model1(const Field& u, const Field& w, const Model1Params& p) {
  require_same_grid(u, w);
  const auto& wt = u.grid().weights();
  double q = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) q += wt[n] * primitive_Q(p, u[n]);
  return p.xi() * (0.5 * p.D * gradient_energy(u) - q) + 0.5 * p.tau * p.k * squared_integral(w);
}

double lyapunov_model2(const Field& z, const Field& w, const Model2Params& p) {
  require_same_grid(z, w);
  const auto& wt = z.grid().weights();
  double g = 0.0;
  for (std::size_t n = 0; n < z.size(); ++n) g += wt[n] * primitive_G2(p, z[n]);
  const double k = p.coupling();
  return 0.5 * (p.alpha() + p.D) * gradient_energy(w) + 0.5 * k * squared_integral(w) +
         0.5 * p.xi() * p.D * gradient_energy(z) - p.xi() * g;
}

double lemma1_energy(const SimState& s, double tau, double lambda) {
  Field psi = s.u;
  for (std::size_t n = 0; n < psi.size(); ++n) psi[n] += tau * s.v[n] - lambda;
  const Field phi = inverse_neumann_laplacian(psi);
  return 0.5 * inner(phi, psi);
}

double lemma1_pairing(const SimState& s, double D, double tau, double lambda) {
  Field w = s.v;
  Field psi = s.u;
  for (std::size_t n = 0; n < w.size(); ++n) {
    w[n] += D * s.u[n];
    psi[n] += tau * s.v[n] - lambda;
  }
  return inner(deviation(w), psi);
}

double lyapunov_value(const SimState& s, const ModelParams& p, double lambda) {
  return std::visit(
      [&](const auto& q) -> double {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Model1Params>) {
          return lyapunov_model1(s.u, transform_w(s, p), q);
        } else if constexpr (std::is_same_v<T, Model2Params>) {
          return lyapunov_model2(transform_z(s), transform_w(s, p), q);
        } else {
          return lemma1_energy(s, q.tau, lambda);
        }
      },
      p);
}

double identity_residual_at(std::span<const SimState> win, std::size_t k, const ModelParams& p, double lambda) {
  if (win.size() != 3 || k > 2) throw ParameterError("identity residual needs exactly three snapshots");
  const std::array<double, 3> t{win[0].t, win[1].t, win[2].t};
  if (!(t[0] < t[1] && t[1] < t[2])) throw ParameterError("snapshots must be strictly increasing in time");
  const auto wts = lagrange_derivative_weights(t, k);
  const std::array<double, 3> L{lyapunov_value(win[0], p, lambda), lyapunov_value(win[1], p, lambda),
                                lyapunov_value(win[2], p, lambda)};
  const double dL = scalar_derivative(L, wts);
  const SimState& s = win[k];

  return std::visit(
      [&](const auto& q) -> double {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Model1Params>) {
          const Field ut = time_derivative({&win[0].u, &win[1].u, &win[2].u}, wts);
          const Field w = transform_w(s, p);
          return std::abs(dL + q.xi() * squared_integral(ut) + q.k * gradient_energy(w));
        } else if constexpr (std::is_same_v<T, Model2Params>) {
          std::array<Field, 3> z{transform_z(win[0]), transform_z(win[1]), transform_z(win[2])};
          std::array<Field, 3> w{transform_w(win[0], p), transform_w(win[1], p), transform_w(win[2], p)};
          const Field zt = time_derivative({&z[0], &z[1], &z[2]}, wts);
          const Field wt = time_derivative({&w[0], &w[1], &w[2]}, wts);
          const Field lap_w = apply_laplacian(w[k].grid(), w[k]);
          const double a = q.alpha();
          return std::abs(dL + q.xi() * squared_integral(zt) + squared_integral(wt) +
                          a * q.D * squared_integral(lap_w) + a * q.coupling() * gradient_energy(w[k]));
        } else {
          return std::abs(dL + lemma1_pairing(s, q.D, q.tau, lambda));
        }
      },
      p);
}

namespace {

double max_interior_residual(std::span<const SimState> window, const ModelParams& p) {
  if (window.size() < 3) throw ParameterError("identity residual needs at least 3 snapshots");
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < window.size(); ++k)
    worst = std::max(worst, identity_residual_at(window.subspan(k - 1, 3), 1, p, 0.0));
  return worst;
}

}  // namespace

double lyapunov1_identity_residual(std::span<const SimState> window, const Model1Params& p) {
  return max_interior_residual(window, ModelParams{p});
}

double lyapunov2_identity_residual(std::span<const SimState> window, const Model2Params& p) {
  return max_interior_residual(window, ModelParams{p});
}

// ---------------------------------------------------------------------------

double j_lambda_model1(const Field& v, const Model1Params& p, double lambda) {
  const auto& wt = v.grid().weights();
  double body = 0.5 * p.D * gradient_energy(v);
  double total = 0.0;
  for (std::size_t n = 0; n < v.size(); ++n) {
    body -= wt[n] * (primitive_Q(p, v[n]) + p.k / p.tau * lambda * v[n]);
    total += wt[n] * v[n];
  }
  // Sign chosen so that the first variation is the stationary equation.
  return body + p.k * p.xi() / (2.0 * p.tau * v.grid().measure()) * total * total;
}

double j_lambda_model2(const Field& z, const Model2Params& p, double lambda) {
  const auto& wt = z.grid().weights();
  const double k = p.coupling();
  double body = 0.5 * p.D * gradient_energy(z);
  double total = 0.0;
  for (std::size_t n = 0; n < z.size(); ++n) {
    body -= wt[n] * (primitive_G2(p, z[n]) + k * lambda * z[n]);
    total += wt[n] * z[n];
  }
  return body + k * p.xi() / (2.0 * z.grid().measure()) * total * total;
}

Field stationary_residual_model1(const Field& u, const Model1Params& p, double lambda) {
  Field r = apply_laplacian(u.grid(), u);
  const double nonlocal = p.k / p.tau * (lambda - p.xi() * mean(u));
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = -p.D * r[n] - q_model1(p, u[n]) - nonlocal;
  return r;
}

Field stationary_residual_model2(const Field& z, const Model2Params& p, double lambda) {
  Field r = apply_laplacian(z.grid(), z);
  const double nonlocal = p.coupling() * (lambda - p.xi() * mean(z));
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = -p.D * r[n] - g_model2(p, z[n]) - nonlocal;
  return r;
}

// ---------------------------------------------------------------------------

DecayFit estimate_decay_rate(std::span<const DiagnosticsRecord> records, NormColumn column, double fraction,
                             double floor) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("decay window fraction must lie in (0, 1]");
  DecayFit fit;
  std::size_t cut = 0;
  while (cut < records.size() && column_value(records[cut], column) > floor) ++cut;
  fit.converged = cut < records.size();

  const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(cut)));
  if (take < 10) {
    fit.rate = std::numeric_limits<double>::infinity();
    fit.converged = true;
    return fit;
  }
  const std::size_t first = cut - take;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t i = first; i < cut; ++i) {
    const double t = records[i].t;
    const double y = std::log(column_value(records[i], column));
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double n = static_cast<double>(take);
  const double denom = n * stt - st * st;
  fit.rate = denom > 0.0 ? -(n * sty - st * sy) / denom : kNaN;
  fit.points = take;
  fit.t_begin = records[first].t;
  fit.t_end = records[cut - 1].t;
  return fit;
}

std::vector<HomogeneousPoint> homogeneous_states(const ModelParams& p, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  return std::visit(
      [&](const auto& q) -> std::vector<HomogeneousPoint> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Model4Params>) {
          try {
            const auto eq = solve_equilibrium(q, lambda);
            return {{eq.u_star, eq.v_star}};
          } catch (const EquilibriumError&) {
            return {};
          }
        } else {
          auto phi = [&](double u) { return reaction(ModelParams{q}, u, (lambda - u) / q.tau); };
          std::vector<HomogeneousPoint> out;
          for (double u : mass_line_roots(phi, lambda)) out.push_back({u, (lambda - u) / q.tau});
          return out;
        }
      },
      p);
}

OmegaLimitReport omega_limit_check(const SimState& s, const ModelParams& p, double lambda, double tol,
                                   double mass_tol) {
  const double tau = relaxation(p);
  OmegaLimitReport r;
  r.lambda = lambda;
  const double ub = mean(s.u);
  const double vb = mean(s.v);
  r.mass_defect = std::abs(ub + tau * vb - lambda) / lambda;
  r.in_f_lambda = r.mass_defect <= mass_tol;

  const auto states = homogeneous_states(p, lambda);
  if (states.empty()) return r;
  const auto nearest = std::min_element(states.begin(), states.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.u - ub) < std::abs(b.u - ub);
  });
  r.has_equilibrium = true;
  r.u_star = nearest->u;
  r.v_star = nearest->v;
  r.u_distance = std::abs(ub - r.u_star);
  r.v_distance = std::abs(vb - r.v_star);
  r.near_equilibrium = r.u_distance <= tol && r.v_distance <= tol;
  return r;
}

Lemma1Monitor lemma1_estimate_monitor(std::span<const DiagnosticsRecord> records) {
  Lemma1Monitor m;
  m.running.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0)
      m.cumulative += 0.5 * (records[i].t - records[i - 1].t) *
                      (records[i].lemma1_pairing + records[i - 1].lemma1_pairing);
    m.running.push_back(m.cumulative);
    m.supremum = i == 0 ? m.cumulative : std::max(m.supremum, m.cumulative);
  }
  return m;
}

double lemma2_constant(std::span<const DiagnosticsRecord> records, double t_min) {
  double c = kNaN;
  for (const auto& r : records) {
    if (r.t < t_min) continue;
    const double ratio = r.v_l2 / r.lambda;
    c = std::isnan(c) ? ratio : std::max(c, ratio);
  }
  return c;
}

// ---------------------------------------------------------------------------

DiagnosticsRecorder::DiagnosticsRecorder(ModelParams p, double lambda0) : params_(std::move(p)), lambda0_(lambda0) {
  const auto states = homogeneous_states(params_, lambda0_);
  if (states.size() == 1) reference_ = states.front();
  if (states.size() > 1) reference_states_ = states;
}

DiagnosticsRecord DiagnosticsRecorder::make_record(const SimState& s) const {
  const double tau = relaxation(params_);
  const double D = diffusivity(params_);
  const Field w = transform_w(s, params_);
  DiagnosticsRecord r;
  r.t = s.t;
  r.u_mean = mean(s.u);
  r.v_mean = mean(s.v);
  r.w_mean = mean(w);
  r.lambda = r.u_mean + tau * r.v_mean;
  r.u_dev_l2 = l2_norm(deviation(s.u));
  r.u_dev_linf = linf_norm(deviation(s.u));
  r.v_dev_linf = linf_norm(deviation(s.v));
  r.w_dev_l2 = l2_norm(deviation(w));
  r.lyapunov = lyapunov_value(s, params_, lambda0_);
  r.identity_residual = kNaN;
  r.equilibrium_distance = kNaN;
  auto distance = [&](const HomogeneousPoint& h) {
    return std::max(std::abs(r.u_mean - h.u), std::abs(r.v_mean - h.v));
  };
  if (reference_) r.equilibrium_distance = distance(*reference_);
  for (const auto& h : reference_states_)
    r.equilibrium_distance = std::isnan(r.equilibrium_distance) ? distance(h)
                                                                : std::min(r.equilibrium_distance, distance(h));
  r.lemma1_pairing = lemma1_pairing(s, D, tau, lambda0_);
  r.v_l2 = l2_norm(s.v);
  return r;
}

void DiagnosticsRecorder::observe(const SimState& s) {
  if (finished_) throw ParameterError("recorder already finished");
  if (!window_.empty() && !(s.t > window_.back().t)) return;  // repeated observation of one state
  records_.push_back(make_record(s));
  window_.push_back(s);
  if (window_.size() > 3) window_.erase(window_.begin());
  if (window_.size() < 3) return;
  const std::size_t n = records_.size();
  if (n == 3) records_[0].identity_residual = identity_residual_at(window_, 0, params_, lambda0_);
  records_[n - 2].identity_residual = identity_residual_at(window_, 1, params_, lambda0_);
}

std::vector<DiagnosticsRecord> DiagnosticsRecorder::finish() {
  if (!finished_ && window_.size() == 3)
    records_.back().identity_residual = identity_residual_at(window_, 2, params_, lambda0_);
  finished_ = true;
  return records_;
}

SimulationResult simulate(SimState initial, const ModelParams& p, const SolverConfig& cfg,
                          const StateObserver& extra) {
  const double lambda0 = mass_level(initial, relaxation(p));
  DiagnosticsRecorder recorder(p, lambda0);
  auto observer = [&](const SimState& s, std::size_t step) {
    recorder.observe(s);
    if (extra) extra(s, step);
  };
  SimState final_state = run(std::move(initial), p, cfg, observer);
  return {std::move(final_state), recorder.finish()};
}

}  // namespace polarsim

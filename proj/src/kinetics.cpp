#include "polarsim/kinetics.hpp"

#include <cmath>
#include <sstream>

namespace polarsim {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }
bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

void require_nonnegative_state(double u, const char* name) {
  if (!(u >= 0.0)) throw ParameterError(std::string(name) + " must be nonnegative");
}

// u^m / (k^m + u^m), written to avoid overflow for large u.
double hill(double u, double k, double m) {
  if (u == 0.0) return 0.0;
  if (m == 2.0) {
    const double u2 = u * u;
    return u2 / (k * k + u2);
  }
  const double r = std::pow(k / u, m);
  return 1.0 / (1.0 + r);
}

double simpson_step(const std::function<double(double)>& fn, double a, double b, double fa, double fm,
                    double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = fn(lm);
  const double frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  if (depth <= 0) throw QuadratureError("adaptive Simpson quadrature did not converge");
  return simpson_step(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

void Model4Params::validate() const {
  require(finite_positive(D), "D must be positive");
  require(finite_positive(tau), "tau must be positive");
  require(finite_positive(k), "k must be positive");
  require(finite_nonnegative(b), "b must be nonnegative");
  require(finite_nonnegative(gamma), "gamma must be nonnegative");
  require(finite_nonnegative(k0), "k0 must be nonnegative");
  require(finite_nonnegative(delta), "delta must be nonnegative");
  require(std::isfinite(m) && m >= 2.0, "m must be at least 2");
}

void Model1Params::validate() const {
  require(finite_positive(D), "D must be positive");
  require(finite_positive(tau), "tau must be positive");
  require(finite_positive(a), "a must be positive");
  require(finite_positive(b), "b must be positive");
  require(finite_positive(k), "k must be positive");
}

void Model2Params::validate() const {
  require(finite_positive(D), "D must be positive");
  require(finite_positive(tau), "tau must be positive");
  require(tau != 1.0, "tau must differ from 1");
  require(finite_positive(alpha1), "alpha1 must be positive");
  require(finite_positive(alpha2), "alpha2 must be positive");
}

double diffusivity(const ModelParams& p) {
  return std::visit([](const auto& m) { return m.D; }, p);
}

double relaxation(const ModelParams& p) {
  return std::visit([](const auto& m) { return m.tau; }, p);
}

void validate(const ModelParams& p) {
  std::visit([](const auto& m) { m.validate(); }, p);
}

std::string model_name(const ModelParams& p) {
  struct Visitor {
    std::string operator()(const Model1Params&) const { return "model1"; }
    std::string operator()(const Model2Params&) const { return "model2"; }
    std::string operator()(const Model4Params& m) const { return m.m == 2.0 ? "model4" : "model4-general-m"; }
  };
  return std::visit(Visitor{}, p);
}

std::string describe(const ModelParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "model=" << model_name(p);
  if (const auto* m = std::get_if<Model1Params>(&p)) {
    os << " D=" << m->D << " tau=" << m->tau << " a=" << m->a << " b=" << m->b << " k=" << m->k;
  } else if (const auto* m = std::get_if<Model2Params>(&p)) {
    os << " D=" << m->D << " tau=" << m->tau << " alpha1=" << m->alpha1 << " alpha2=" << m->alpha2;
  } else if (const auto* m = std::get_if<Model4Params>(&p)) {
    os << " D=" << m->D << " tau=" << m->tau << " b=" << m->b << " gamma=" << m->gamma << " k=" << m->k
       << " k0=" << m->k0 << " delta=" << m->delta << " m=" << m->m;
  }
  return os.str();
}

double a_of_u(const Model4Params& p, double u) {
  require_nonnegative_state(u, "u");
  return p.b * (p.gamma * hill(u, p.k, p.m) + p.k0);
}

double a_prime(const Model4Params& p, double u) {
  require_nonnegative_state(u, "u");
  if (u == 0.0) return 0.0;
  if (p.m == 2.0) {
    const double k2 = p.k * p.k;
    const double s = k2 + u * u;
    return 2.0 * p.b * p.gamma * k2 * u / (s * s);
  }
  // d/du [u^m / (k^m + u^m)] = m k^m u^(m-1) / (k^m + u^m)^2
  //                          = (m / u) * s / (1 + s)^2, s = (u/k)^m.
  const double s = std::pow(u / p.k, p.m);
  if (!std::isfinite(s)) return 0.0;
  return p.b * p.gamma * p.m / u * s / ((1.0 + s) * (1.0 + s));
}

double alpha_sup_location(const Model4Params& p) {
  return p.k * std::pow((p.m - 1.0) / (p.m + 1.0), 1.0 / p.m);
}

double alpha_sup(const Model4Params& p) {
  if (p.m == 2.0) return 3.0 * std::sqrt(3.0) * p.b * p.gamma / (8.0 * p.k);
  return a_prime(p, alpha_sup_location(p));
}

double f_model4(const Model4Params& p, double u, double v) {
  require_nonnegative_state(v, "v");
  return v * a_of_u(p, u) - p.delta * u;
}

double h_model1(const Model1Params& p, double u) { return -p.a * u / (u * u + p.b); }

double q_model1(const Model1Params& p, double u) { return h_model1(p, u) - p.k * p.D * u; }

double f_model1(const Model1Params& p, double u, double v) {
  require_nonnegative_state(u, "u");
  require_nonnegative_state(v, "v");
  return h_model1(p, u) + p.k * v;
}

double h_model2(const Model2Params& p, double z) {
  const double s = p.alpha2 * z + 1.0;
  return -p.alpha1 * z / (s * s);
}

double g_model2(const Model2Params& p, double z) { return (1.0 - p.D) * h_model2(p, z) - p.alpha1 * p.D * z; }

double f_model2(const Model2Params& p, double u, double v) {
  require_nonnegative_state(u, "u");
  require_nonnegative_state(v, "v");
  return h_model2(p, u + v) + p.alpha1 * v;
}

double reaction(const ModelParams& p, double u, double v) {
  struct Visitor {
    double u, v;
    double operator()(const Model1Params& m) const { return f_model1(m, u, v); }
    double operator()(const Model2Params& m) const { return f_model2(m, u, v); }
    double operator()(const Model4Params& m) const { return f_model4(m, u, v); }
  };
  return std::visit(Visitor{u, v}, p);
}

double primitive_Q(const Model1Params& p, double u) {
  return -0.5 * p.a * std::log1p(u * u / p.b) - 0.5 * p.k * p.D * u * u;
}

double primitive_G2(const Model2Params& p, double z) {
  // integral_0^z h = -(alpha1/alpha2^2) (log(1 + x) - x / (1 + x)), x = alpha2 z
  const double x = p.alpha2 * z;
  const double H = -p.alpha1 / (p.alpha2 * p.alpha2) * (std::log1p(x) - x / (1.0 + x));
  return (1.0 - p.D) * H - 0.5 * p.alpha1 * p.D * z * z;
}

double primitive_G4_derivative(const Model4Params& p, double lambda, double U) {
  return -p.delta * U + a_of_u(p, U) * (lambda - U) / p.tau;
}

double primitive_G4(const Model4Params& p, double lambda, double U) {
  require_nonnegative_state(U, "U");
  if (!std::isfinite(U)) throw ParameterError("U must be finite");
  if (p.m == 2.0) {
    const double k = p.k;
    const double U2 = U * U;
    const double hill0 = lambda * U - 0.5 * U2;  // from the constant k0 term
    // integral_0^U s^2/(k^2+s^2) (lambda - s) ds
    const double hill1 = lambda * (U - k * std::atan(U / k)) - (0.5 * U2 - 0.5 * k * k * std::log1p(U2 / (k * k)));
    return -0.5 * p.delta * U2 + p.b / p.tau * (p.k0 * hill0 + p.gamma * hill1);
  }
  return adaptive_simpson([&](double s) { return primitive_G4_derivative(p, lambda, s); }, 0.0, U, 1e-12);
}

double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double abs_tol,
                        int max_depth) {
  if (a == b) return 0.0;
  const double fa = fn(a);
  const double fb = fn(b);
  const double fm = fn(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(fn, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace polarsim

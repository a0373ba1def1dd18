#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>

namespace polarsim {

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fourth model: f(u, v) = v a(u) - delta u with the Hill-type activation
/// a(u) = b (gamma u^m / (k^m + u^m) + k0).
///
/// D, tau and k must be positive; b, gamma, k0 and delta may be zero so that
/// the constant-activation (gamma = 0) and pure-diffusion (b = delta = 0)
/// limits are expressible. m >= 2.
struct Model4Params {
  double D = 4.0;
  double tau = 1.0;
  double b = 1.0;
  double gamma = 1.0;
  double k = 1.0;
  double k0 = 0.1;
  double delta = 1.0;
  double m = 2.0;

  void validate() const;
  double xi() const { return 1.0 - tau * D; }
  double a0() const { return b * k0; }
  double a1() const { return b * (gamma + k0); }
};

/// First model: f(u, v) = h(u) + k v, h(u) = -a u / (u^2 + b).
struct Model1Params {
  double D = 1.0;
  double tau = 0.5;
  double a = 1.0;
  double b = 1.0;
  double k = 1.0;

  void validate() const;
  double xi() const { return 1.0 - tau * D; }
};

/// Second model: f(u, v) = h(u + v) + alpha1 v, h(z) = -alpha1 z / (alpha2 z + 1)^2.
struct Model2Params {
  double D = 0.25;
  double tau = 2.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;

  void validate() const;
  double xi() const { return (1.0 - tau * D) / (tau - 1.0); }
  double alpha() const { return (1.0 - D) / (tau - 1.0); }
  /// Coupling constant of the model-2 Lyapunov functional. It is never
  /// defined separately; the transformed system forces it to equal alpha1.
  double coupling() const { return alpha1; }
};

using ModelParams = std::variant<Model1Params, Model2Params, Model4Params>;

double diffusivity(const ModelParams& p);
double relaxation(const ModelParams& p);  // tau
void validate(const ModelParams& p);
std::string model_name(const ModelParams& p);
/// Canonical "key=value" listing at full precision (hashing and headers).
std::string describe(const ModelParams& p);

// Fourth model.
double a_of_u(const Model4Params& p, double u);
double a_prime(const Model4Params& p, double u);
/// Location of the maximum of a'(u) on u > 0: k ((m-1)/(m+1))^(1/m).
double alpha_sup_location(const Model4Params& p);
/// sup_{u>0} a'(u); 3 sqrt(3) b gamma / (8 k) for m = 2.
double alpha_sup(const Model4Params& p);
double f_model4(const Model4Params& p, double u, double v);

// First model.
double h_model1(const Model1Params& p, double u);
double q_model1(const Model1Params& p, double u);
double f_model1(const Model1Params& p, double u, double v);

// Second model.
double h_model2(const Model2Params& p, double z);
double g_model2(const Model2Params& p, double z);
double f_model2(const Model2Params& p, double u, double v);

double reaction(const ModelParams& p, double u, double v);

/// Q with Q' = q and Q(0) = 0 (closed form).
double primitive_Q(const Model1Params& p, double u);
/// G with G' = g and G(0) = 0 (closed form).
double primitive_G2(const Model2Params& p, double z);
/// G with G'(U) = -delta U + a(U) (lambda - U) / tau and G(0) = 0. Closed
/// form for m = 2, adaptive Simpson quadrature otherwise.
double primitive_G4(const Model4Params& p, double lambda, double U);
double primitive_G4_derivative(const Model4Params& p, double lambda, double U);

/// Adaptive composite Simpson rule for the integral of fn over [a, b] to the
/// given absolute tolerance. Throws QuadratureError if the recursion depth
/// is exhausted before the tolerance is met.
double adaptive_simpson(const std::function<double(double)>& fn, double a, double b,
                        double abs_tol = 1e-10, int max_depth = 50);

}  // namespace polarsim

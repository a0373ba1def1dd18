#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "polarsim/grid.hpp"
#include "polarsim/kinetics.hpp"

namespace polarsim {

struct SimState {
  double t = 0.0;
  Field u;
  Field v;
};

enum class Scheme {
  imex_be,  // backward Euler diffusion, forward Euler reaction
  imex_cn,  // Crank-Nicolson diffusion, Heun (explicit trapezoid) reaction
};

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

struct SolverConfig {
  double dt = 0.0;  // 0 selects default_time_step()
  double t_end = 1.0;
  Scheme scheme = Scheme::imex_be;
  std::size_t stride = 1;  // observer is called every `stride` steps
  int retry_limit = 10;    // positivity retries, each halving the step
  double linear_tol = 1e-13;

  void validate() const;
};

/// 0.25 * min(h^2 / (2 D), h^2 tau / 2) * 0.5 with h the smallest spacing.
double default_time_step(const Grid& grid, const ModelParams& p);

/// Extra forcing added to the right-hand sides of u_t = ... and tau v_t = ...
/// Used for manufactured-solution checks; breaks mass conservation.
struct SourceTerms {
  std::function<double(double x, double y, double t)> u;
  std::function<double(double x, double y, double t)> v;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SimState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const SimState& last_good() const { return last_good_; }

 private:
  SimState last_good_;
};

/// IMEX integrator for u_t = D Lap u + f(u, v), tau v_t = Lap v - f(u, v)
/// with Neumann conditions. The reaction is evaluated once per stage and
/// enters both equations with opposite sign, so the discrete mass
/// mean(u + tau v) is conserved up to round-off. The implicit solves carry
/// the mean of their right-hand side over exactly.
class Stepper {
 public:
  Stepper(const Grid& grid, ModelParams params, SolverConfig cfg, SourceTerms sources = {});
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  /// Advances by cfg.dt (or `dt` when given). If a node drops below
  /// -1e-9 * scale the step is redone as 2, 4, ... substeps, up to
  /// cfg.retry_limit halvings; SolverError after that.
  SimState step(const SimState& state) const;
  SimState step(const SimState& state, double dt) const;

  double dt() const;
  const Grid& grid() const;
  const ModelParams& params() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper: one step with a fresh Stepper.
SimState step(const SimState& state, const ModelParams& p, const SolverConfig& cfg);

/// Called with the current state and step index at step 0, every
/// cfg.stride steps, and at the final step.
using StateObserver = std::function<void(const SimState&, std::size_t step)>;

/// Checks nonnegativity, finiteness, shared grid and nontriviality of an
/// initial condition; throws ParameterError.
void validate_initial_state(const SimState& state);

/// Integrates from state.t to cfg.t_end. On failure throws SolverError
/// carrying the last good state.
SimState run(SimState initial, const ModelParams& p, const SolverConfig& cfg, const StateObserver& observer = {},
             const SourceTerms& sources = {});

/// w = D u + v.
Field transform_w(const SimState& state, const ModelParams& p);
/// z = u + v.
Field transform_z(const SimState& state);
/// lambda(t) = mean(u + tau v).
double mass_level(const SimState& state, double tau);

}  // namespace polarsim

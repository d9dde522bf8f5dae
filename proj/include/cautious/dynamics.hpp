#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cautious/masks.hpp"
#include "cautious/problems.hpp"
#include "cautious/vec.hpp"

namespace cautious {

// Kinetic energy of the flow state. Quadratic and L1 are plain K(s) used by
// the generic system; AdamCoupled and LionLookahead are the special-cased
// coupled systems with their own state layout and Hamiltonians.
enum class KineticKind { Quadratic, L1, AdamCoupled, LionLookahead };

struct KineticEnergy {
  KineticKind kind = KineticKind::Quadratic;

  // AdamCoupled: dm = a (grad L - m), dv = b (grad L^2 - v),
  // dw = -m/(sqrt(v)+e). Hamiltonian decrease needs a >= b/4.
  double adam_a = 1.0;
  double adam_b = 1.0;
  double adam_e = 1e-8;

  // LionLookahead: dm = alpha grad L - gamma m, dw = -sign(m_tilde) with
  // m_tilde = m - lookahead (alpha grad L + gamma m).
  double lion_alpha = 1.0;
  double lion_gamma = 1.0;
  double lion_lookahead = 0.0;

  static KineticEnergy quadratic();
  static KineticEnergy l1();
  static KineticEnergy adam_coupled(double a, double b, double e);
  static KineticEnergy lion_lookahead_k(double alpha, double gamma, double lookahead);

  // value/grad of K(s); defined for Quadratic and L1 only
  double value(ConstView s) const;
  Vec grad(ConstView s) const;
};

enum class DescentMapKind { Zero, Linear };

// Elementwise monotone map x -> c x used for the dissipation terms.
struct DescentMap {
  DescentMapKind kind = DescentMapKind::Zero;
  double c = 0.0;

  static DescentMap zero() { return {}; }
  static DescentMap linear(double c);

  Vec apply(ConstView x) const;
  // <x, map(x)>
  double quad_form(ConstView x) const;
};

struct ContinuousSystem {
  Objective objective;
  KineticEnergy kinetic;
  DescentMap phi_map;  // dissipation on the w equation
  DescentMap psi_map;  // dissipation on the s equation
  std::optional<MaskRule> mask;  // absent = original flow

  void validate() const;
};

// Flow state. v is used by the AdamCoupled system only (s holds m there).
struct SystemState {
  Vec w;
  Vec s;
  Vec v;
};

struct Rates {
  double dH = 0.0;
  double dL = 0.0;
};

struct FlowTrace {
  std::vector<double> times;
  std::vector<SystemState> states;
  std::vector<double> loss_samples;
  std::vector<double> hamiltonian_samples;
  std::vector<double> numeric_dH;  // per interval, size n-1
  std::vector<double> numeric_dL;
  std::string integrator;  // "rk4" or "euler"
  double dt_used = 0.0;
  std::optional<double> aborted_at;  // time of blow-up, if any
};

// Exact right-hand side of the flow at (w, s).
SystemState system_rhs(const ContinuousSystem& system, const SystemState& state);

double hamiltonian_value(const ContinuousSystem& system, const SystemState& state);

// Exact instantaneous d/dt of H and L along the flow (chain rule on the
// right-hand side; valid away from the sign/mask switching sets).
Rates analytic_rates(const ContinuousSystem& system, const SystemState& state);

// Fixed-step classical RK4. Sign-based kinetics (L1, LionLookahead) are
// non-smooth, so those systems substitute forward Euler with dt <= 1e-4 and
// flag it in the trace metadata.
FlowTrace integrate(const ContinuousSystem& system, SystemState init, double dt,
                    double t_end);

}  // namespace cautious

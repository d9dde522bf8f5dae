#include "cautious/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace cautious {

KineticEnergy KineticEnergy::quadratic() { return KineticEnergy{}; }

KineticEnergy KineticEnergy::l1() {
  KineticEnergy k;
  k.kind = KineticKind::L1;
  return k;
}

KineticEnergy KineticEnergy::adam_coupled(double a, double b, double e) {
  if (!(a > 0.0) || !(b >= 0.0) || !(e >= 0.0)) {
    throw std::invalid_argument("KineticEnergy: adam coupling needs a > 0, b >= 0, e >= 0");
  }
  KineticEnergy k;
  k.kind = KineticKind::AdamCoupled;
  k.adam_a = a;
  k.adam_b = b;
  k.adam_e = e;
  return k;
}

KineticEnergy KineticEnergy::lion_lookahead_k(double alpha, double gamma,
                                              double lookahead) {
  if (!(alpha >= 0.0) || !(gamma >= 0.0) || lookahead < 0.0 ||
      lookahead * gamma >= 1.0) {
    throw std::invalid_argument(
        "KineticEnergy: lion system needs alpha, gamma >= 0 and lookahead*gamma < 1");
  }
  KineticEnergy k;
  k.kind = KineticKind::LionLookahead;
  k.lion_alpha = alpha;
  k.lion_gamma = gamma;
  k.lion_lookahead = lookahead;
  return k;
}

double KineticEnergy::value(ConstView s) const {
  switch (kind) {
    case KineticKind::Quadratic:
      return 0.5 * norm2_sq(s);
    case KineticKind::L1:
      return norm1(s);
    default:
      throw std::invalid_argument("KineticEnergy::value: coupled systems have no plain K(s)");
  }
}

Vec KineticEnergy::grad(ConstView s) const {
  switch (kind) {
    case KineticKind::Quadratic:
      return Vec(s.begin(), s.end());
    case KineticKind::L1:
      // subgradient 0 at the kink keeps stationary states fixed
      return sign_vec(s);
    default:
      throw std::invalid_argument("KineticEnergy::grad: coupled systems have no plain K(s)");
  }
}

DescentMap DescentMap::linear(double c) {
  if (c < 0.0) throw std::invalid_argument("DescentMap: c must be >= 0");
  DescentMap m;
  m.kind = DescentMapKind::Linear;
  m.c = c;
  return m;
}

Vec DescentMap::apply(ConstView x) const {
  if (kind == DescentMapKind::Zero) return zeros(x.size());
  return scaled(x, c);
}

double DescentMap::quad_form(ConstView x) const {
  if (kind == DescentMapKind::Zero) return 0.0;
  return c * norm2_sq(x);
}

void ContinuousSystem::validate() const {
  if (kinetic.kind == KineticKind::AdamCoupled &&
      kinetic.adam_a < kinetic.adam_b / 4.0) {
    throw std::invalid_argument(
        "ContinuousSystem: adam coupling needs a >= b/4 for Hamiltonian decrease");
  }
}

namespace {

Vec adam_direction(const KineticEnergy& k, const SystemState& st) {
  Vec dir(st.s.size());
  for (std::size_t i = 0; i < st.s.size(); ++i) {
    dir[i] = st.s[i] / (std::sqrt(std::max(st.v[i], 0.0)) + k.adam_e);
  }
  return dir;
}

Vec lion_tilde(const KineticEnergy& k, ConstView m, ConstView g) {
  Vec mt(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    mt[i] = m[i] - k.lion_lookahead * (k.lion_alpha * g[i] + k.lion_gamma * m[i]);
  }
  return mt;
}

// mask weights for a coupled system's update direction; the mask decision is
// taken on the raw momentum as in the coupled listings
Vec coupled_mask_weights(const std::optional<MaskRule>& rule, ConstView momentum,
                         ConstView g) {
  if (!rule) return ones(momentum.size());
  return apply_mask(*rule, momentum, g).weights;
}

}  // namespace

SystemState system_rhs(const ContinuousSystem& system, const SystemState& state) {
  const Vec g = system.objective.grad(state.w);
  if (!all_finite(g)) {
    throw std::invalid_argument("system_rhs: non-finite gradient");
  }
  SystemState d;
  switch (system.kinetic.kind) {
    case KineticKind::Quadratic:
    case KineticKind::L1: {
      const Vec dk = system.kinetic.grad(state.s);
      Vec dw;
      if (system.mask) {
        const Vec x = hadamard(g, dk);
        const Vec phi = mask_weights_from_product(*system.mask, x);
        dw = hadamard(phi, dk);
      } else {
        dw = dk;
      }
      for (auto& v : dw) v = -v;
      axpy(-1.0, system.phi_map.apply(g), dw);
      Vec ds = g;
      axpy(-1.0, system.psi_map.apply(dk), ds);
      d.w = std::move(dw);
      d.s = std::move(ds);
      break;
    }
    case KineticKind::AdamCoupled: {
      const auto& k = system.kinetic;
      const Vec dir = adam_direction(k, state);
      const Vec weights = coupled_mask_weights(system.mask, state.s, g);
      d.w.resize(state.w.size());
      d.s.resize(state.s.size());
      d.v.resize(state.v.size());
      for (std::size_t i = 0; i < state.w.size(); ++i) {
        d.w[i] = -weights[i] * dir[i];
        d.s[i] = k.adam_a * (g[i] - state.s[i]);
        d.v[i] = k.adam_b * (g[i] * g[i] - state.v[i]);
      }
      break;
    }
    case KineticKind::LionLookahead: {
      const auto& k = system.kinetic;
      const Vec mt = lion_tilde(k, state.s, g);
      const Vec sgn = sign_vec(mt);
      const Vec weights = coupled_mask_weights(system.mask, mt, g);
      d.w.resize(state.w.size());
      d.s.resize(state.s.size());
      for (std::size_t i = 0; i < state.w.size(); ++i) {
        d.w[i] = -weights[i] * sgn[i];
        d.s[i] = k.lion_alpha * g[i] - k.lion_gamma * state.s[i];
      }
      break;
    }
  }
  return d;
}

double hamiltonian_value(const ContinuousSystem& system, const SystemState& state) {
  const double loss = system.objective.loss(state.w);
  switch (system.kinetic.kind) {
    case KineticKind::Quadratic:
    case KineticKind::L1:
      return loss + system.kinetic.value(state.s);
    case KineticKind::AdamCoupled: {
      const auto& k = system.kinetic;
      double kinetic = 0.0;
      for (std::size_t i = 0; i < state.s.size(); ++i) {
        kinetic += state.s[i] * state.s[i] /
                   (std::sqrt(std::max(state.v[i], 0.0)) + k.adam_e);
      }
      return loss + kinetic / (2.0 * k.adam_a);
    }
    case KineticKind::LionLookahead: {
      const auto& k = system.kinetic;
      return k.lion_alpha * loss +
             (1.0 - k.lion_lookahead * k.lion_gamma) * norm1(state.s);
    }
  }
  return loss;
}

Rates analytic_rates(const ContinuousSystem& system, const SystemState& state) {
  const Vec g = system.objective.grad(state.w);
  Rates r;
  switch (system.kinetic.kind) {
    case KineticKind::Quadratic:
    case KineticKind::L1: {
      const Vec dk = system.kinetic.grad(state.s);
      const double phi_norm = system.phi_map.quad_form(g);
      const double psi_norm = system.psi_map.quad_form(dk);
      const double delta_h = phi_norm + psi_norm;
      const Vec x = hadamard(g, dk);
      if (system.mask) {
        const Vec phi = mask_weights_from_product(*system.mask, x);
        double x_one_minus_phi = 0.0;
        double x_phi = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          x_one_minus_phi += x[i] * (1.0 - phi[i]);
          x_phi += x[i] * phi[i];
        }
        r.dH = x_one_minus_phi - delta_h;
        r.dL = -x_phi - phi_norm;
      } else {
        double x_sum = 0.0;
        for (double v : x) x_sum += v;
        r.dH = -delta_h;
        r.dL = -x_sum - phi_norm;
      }
      break;
    }
    case KineticKind::AdamCoupled: {
      const auto& k = system.kinetic;
      const Vec dir = adam_direction(k, state);
      const Vec weights = coupled_mask_weights(system.mask, state.s, g);
      double dH = 0.0;
      double dL = 0.0;
      for (std::size_t i = 0; i < state.s.size(); ++i) {
        const double m = state.s[i];
        const double v = std::max(state.v[i], 0.0);
        const double root = std::sqrt(v);
        const double denom = root + k.adam_e;
        const double dwi = -weights[i] * dir[i];
        dL += g[i] * dwi;
        // dH = grad L . dw + dH/dm . dm + dH/dv . dv
        dH += g[i] * dwi;
        dH += (m / (k.adam_a * denom)) * (k.adam_a * (g[i] - m));
        // dH/dv has a 1/sqrt(v) factor; at v = 0 the energy is one-sided and
        // the term is taken as 0
        if (root > 0.0) {
          dH += -(m * m / (4.0 * k.adam_a * root * denom * denom)) *
                (k.adam_b * (g[i] * g[i] - v));
        }
      }
      r.dH = dH;
      r.dL = dL;
      break;
    }
    case KineticKind::LionLookahead: {
      const auto& k = system.kinetic;
      const Vec mt = lion_tilde(k, state.s, g);
      const Vec sgn = sign_vec(mt);
      const Vec weights = coupled_mask_weights(system.mask, mt, g);
      double dH = 0.0;
      double dL = 0.0;
      const double kin_coef = 1.0 - k.lion_lookahead * k.lion_gamma;
      for (std::size_t i = 0; i < state.s.size(); ++i) {
        const double dwi = -weights[i] * sgn[i];
        const double dmi = k.lion_alpha * g[i] - k.lion_gamma * state.s[i];
        dL += g[i] * dwi;
        dH += k.lion_alpha * g[i] * dwi + kin_coef * sign(state.s[i]) * dmi;
      }
      r.dH = dH;
      r.dL = dL;
      break;
    }
  }
  return r;
}

namespace {

bool state_finite(const SystemState& st) {
  return all_finite(st.w) && all_finite(st.s) && all_finite(st.v);
}

SystemState combine(const SystemState& base, double c, const SystemState& delta) {
  SystemState out = base;
  axpy(c, delta.w, out.w);
  axpy(c, delta.s, out.s);
  if (!out.v.empty()) axpy(c, delta.v, out.v);
  return out;
}

SystemState rk4_step(const ContinuousSystem& system, const SystemState& st, double dt) {
  const SystemState k1 = system_rhs(system, st);
  const SystemState k2 = system_rhs(system, combine(st, 0.5 * dt, k1));
  const SystemState k3 = system_rhs(system, combine(st, 0.5 * dt, k2));
  const SystemState k4 = system_rhs(system, combine(st, dt, k3));
  SystemState out = st;
  const double w6 = dt / 6.0;
  for (std::size_t i = 0; i < st.w.size(); ++i) {
    out.w[i] += w6 * (k1.w[i] + 2.0 * (k2.w[i] + k3.w[i]) + k4.w[i]);
  }
  for (std::size_t i = 0; i < st.s.size(); ++i) {
    out.s[i] += w6 * (k1.s[i] + 2.0 * (k2.s[i] + k3.s[i]) + k4.s[i]);
  }
  for (std::size_t i = 0; i < st.v.size(); ++i) {
    out.v[i] += w6 * (k1.v[i] + 2.0 * (k2.v[i] + k3.v[i]) + k4.v[i]);
  }
  return out;
}

SystemState euler_step(const ContinuousSystem& system, const SystemState& st, double dt) {
  return combine(st, dt, system_rhs(system, st));
}

}  // namespace

FlowTrace integrate(const ContinuousSystem& system, SystemState init, double dt,
                    double t_end) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  if (!(t_end >= dt)) throw std::invalid_argument("integrate: t_end must be >= dt");
  system.validate();

  const bool sign_based = system.kinetic.kind == KineticKind::L1 ||
                          system.kinetic.kind == KineticKind::LionLookahead;
  FlowTrace trace;
  trace.integrator = sign_based ? "euler" : "rk4";
  trace.dt_used = sign_based ? std::min(dt, 1e-4) : dt;

  const auto n_steps = static_cast<std::size_t>(std::llround(t_end / trace.dt_used));
  trace.times.reserve(n_steps + 1);
  trace.states.reserve(n_steps + 1);

  SystemState st = std::move(init);
  if (system.kinetic.kind == KineticKind::AdamCoupled && st.v.empty()) {
    st.v = zeros(st.s.size());
  }
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * trace.dt_used;
    if (!state_finite(st)) {
      trace.aborted_at = t;
      break;
    }
    const double loss = system.objective.loss(st.w);
    const double energy = hamiltonian_value(system, st);
    if (!std::isfinite(loss) || !std::isfinite(energy)) {
      trace.aborted_at = t;
      break;
    }
    trace.times.push_back(t);
    trace.states.push_back(st);
    trace.loss_samples.push_back(loss);
    trace.hamiltonian_samples.push_back(energy);
    if (k < n_steps) {
      st = sign_based ? euler_step(system, st, trace.dt_used)
                      : rk4_step(system, st, trace.dt_used);
    }
  }
  for (std::size_t k = 0; k + 1 < trace.times.size(); ++k) {
    const double span = trace.times[k + 1] - trace.times[k];
    trace.numeric_dH.push_back(
        (trace.hamiltonian_samples[k + 1] - trace.hamiltonian_samples[k]) / span);
    trace.numeric_dL.push_back(
        (trace.loss_samples[k + 1] - trace.loss_samples[k]) / span);
  }
  return trace;
}

}  // namespace cautious

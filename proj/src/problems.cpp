#include "cautious/problems.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "cautious/rng.hpp"

namespace cautious {

namespace {

// dense row-major d x d matrix-vector product
Vec matvec(const Vec& m, std::size_t d, ConstView x) {
  Vec out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    const double* row = m.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

// A = Q^T diag(eigs) Q with Q from modified Gram-Schmidt on a Gaussian matrix
Vec random_spd_matrix(std::size_t d, const Vec& eigs, Rng& rng) {
  Vec q(d * d);
  for (auto& x : q) x = rng.normal();
  for (std::size_t i = 0; i < d; ++i) {
    double* qi = q.data() + i * d;
    for (std::size_t k = 0; k < i; ++k) {
      const double* qk = q.data() + k * d;
      double proj = 0.0;
      for (std::size_t j = 0; j < d; ++j) proj += qi[j] * qk[j];
      for (std::size_t j = 0; j < d; ++j) qi[j] -= proj * qk[j];
    }
    double nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) nrm += qi[j] * qi[j];
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) {
      // rank-deficient draw; replace the row with a canonical direction
      for (std::size_t j = 0; j < d; ++j) qi[j] = (j == i) ? 1.0 : 0.0;
      nrm = 1.0;
    }
    for (std::size_t j = 0; j < d; ++j) qi[j] /= nrm;
  }
  Vec a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += q[k * d + i] * eigs[k] * q[k * d + j];
      a[i * d + j] = acc;
    }
  }
  return a;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)), overflow-safe
double softplus(double z) {
  if (z > 35.0) return z;
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

struct LogisticData {
  std::size_t n, d;
  Vec x;       // n x d, row-major
  Vec y;       // labels in {-1, +1}
  double l2 = 1e-4;
};

double logistic_loss(const LogisticData& data, ConstView w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    double z = 0.0;
    const double* row = data.x.data() + i * data.d;
    for (std::size_t j = 0; j < data.d; ++j) z += row[j] * w[j];
    acc += softplus(-data.y[i] * z);
  }
  acc /= static_cast<double>(data.n);
  for (std::size_t j = 0; j < data.d; ++j) acc += data.l2 * w[j] * w[j];
  return acc;
}

Vec logistic_grad(const LogisticData& data, ConstView w) {
  Vec g(data.d, 0.0);
  for (std::size_t i = 0; i < data.n; ++i) {
    double z = 0.0;
    const double* row = data.x.data() + i * data.d;
    for (std::size_t j = 0; j < data.d; ++j) z += row[j] * w[j];
    const double coef = -data.y[i] * sigmoid(-data.y[i] * z);
    for (std::size_t j = 0; j < data.d; ++j) g[j] += coef * row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(data.n);
  for (std::size_t j = 0; j < data.d; ++j) {
    g[j] = g[j] * inv_n + 2.0 * data.l2 * w[j];
  }
  return g;
}

// largest eigenvalue of (1/n) X^T X by power iteration
double gram_lambda_max(const LogisticData& data) {
  Rng rng(0x9d2c5680u);
  Vec v = rng.normal_vec(data.d);
  double lambda = 0.0;
  for (int it = 0; it < 300; ++it) {
    // u = X v; v' = X^T u / n
    Vec next(data.d, 0.0);
    for (std::size_t i = 0; i < data.n; ++i) {
      const double* row = data.x.data() + i * data.d;
      double u = 0.0;
      for (std::size_t j = 0; j < data.d; ++j) u += row[j] * v[j];
      for (std::size_t j = 0; j < data.d; ++j) next[j] += u * row[j];
    }
    for (auto& x : next) x /= static_cast<double>(data.n);
    lambda = norm2(next);
    if (lambda == 0.0) return 0.0;
    for (auto& x : next) x /= lambda;
    v = std::move(next);
  }
  return lambda;
}

// Nesterov accelerated descent with function-value restarts; used to pin the
// optimum of the strongly convex logistic instances at construction time.
double minimize_convex(const std::function<double(ConstView)>& loss,
                       const std::function<Vec(ConstView)>& grad,
                       std::size_t dim, double lipschitz) {
  Vec w(dim, 0.0), y = w;
  const double step = 1.0 / lipschitz;
  double f_best = loss(w);
  double theta = 1.0;
  int stall = 0;
  for (int it = 0; it < 50000; ++it) {
    const Vec g = grad(y);
    if (norm_inf(g) <= 1e-12) return std::min(f_best, loss(y));
    Vec w_next = y;
    axpy(-step, g, w_next);
    const double f_next = loss(w_next);
    if (f_next > f_best) {  // restart momentum
      y = w;
      theta = 1.0;
      if (++stall > 100) break;
      continue;
    }
    stall = f_best - f_next < 1e-16 * (1.0 + std::fabs(f_best)) ? stall + 1 : 0;
    if (stall > 200) {
      f_best = std::min(f_best, f_next);
      break;
    }
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = w_next;
    axpy((theta - 1.0) / theta_next, sub(w_next, w), y);
    theta = theta_next;
    w = w_next;
    f_best = std::min(f_best, f_next);
  }
  return f_best;
}

}  // namespace

ProblemSpec ProblemSpec::toy_quadratic(double kappa) {
  ProblemSpec s;
  s.kind = ProblemKind::ToyQuadratic;
  s.kappa = kappa;
  s.dim = 2;
  return s;
}

ProblemSpec ProblemSpec::separable_quadratic(Vec a) {
  ProblemSpec s;
  s.kind = ProblemKind::SeparableQuadratic;
  s.dim = a.size();
  s.a = std::move(a);
  return s;
}

ProblemSpec ProblemSpec::random_smooth_quadratic(std::size_t dim, double mu,
                                                 std::uint64_t seed) {
  ProblemSpec s;
  s.kind = ProblemKind::RandomSmoothQuadratic;
  s.dim = dim;
  s.mu = mu;
  s.seed = seed;
  return s;
}

ProblemSpec ProblemSpec::rosenbrock(std::size_t dim) {
  ProblemSpec s;
  s.kind = ProblemKind::Rosenbrock;
  s.dim = dim;
  return s;
}

ProblemSpec ProblemSpec::logistic(std::size_t n_samples, std::size_t dim,
                                  std::uint64_t seed) {
  ProblemSpec s;
  s.kind = ProblemKind::Logistic;
  s.n_samples = n_samples;
  s.dim = dim;
  s.seed = seed;
  return s;
}

std::string ProblemSpec::describe() const {
  switch (kind) {
    case ProblemKind::ToyQuadratic:
      return "toy_quadratic(kappa=" + std::to_string(kappa) + ")";
    case ProblemKind::SeparableQuadratic:
      return "separable_quadratic(dim=" + std::to_string(a.size()) + ")";
    case ProblemKind::RandomSmoothQuadratic:
      return "random_smooth_quadratic(dim=" + std::to_string(dim) +
             ",mu=" + std::to_string(mu) + ",seed=" + std::to_string(seed) + ")";
    case ProblemKind::Rosenbrock:
      return "rosenbrock(dim=" + std::to_string(dim) + ")";
    case ProblemKind::Logistic:
      return "logistic(n=" + std::to_string(n_samples) +
             ",dim=" + std::to_string(dim) + ",seed=" + std::to_string(seed) + ")";
  }
  return "unknown";
}

Objective make_problem(const ProblemSpec& spec) {
  Objective obj;
  switch (spec.kind) {
    case ProblemKind::ToyQuadratic: {
      if (spec.kappa <= 0.0) {
        throw std::invalid_argument("make_problem: kappa must be > 0");
      }
      const double kappa = spec.kappa;
      obj.dim = 2;
      obj.loss = [kappa](ConstView w) {
        return kappa * w[0] * w[0] + w[1] * w[1];
      };
      obj.grad = [kappa](ConstView w) {
        return Vec{2.0 * kappa * w[0], 2.0 * w[1]};
      };
      obj.mu = 2.0 * std::max(kappa, 1.0);
      obj.convex = true;
      obj.optimum_value = 0.0;
      break;
    }
    case ProblemKind::SeparableQuadratic: {
      if (spec.a.empty()) {
        throw std::invalid_argument("make_problem: coefficient vector is empty");
      }
      bool any_nonzero = false;
      for (double c : spec.a) any_nonzero = any_nonzero || c != 0.0;
      if (!any_nonzero) {
        throw std::invalid_argument("make_problem: coefficient vector is zero");
      }
      auto a = std::make_shared<Vec>(spec.a);
      obj.dim = a->size();
      obj.loss = [a](ConstView w) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a->size(); ++i) {
          const double aw = (*a)[i] * w[i];
          acc += aw * aw;
        }
        return 0.5 * acc;
      };
      obj.grad = [a](ConstView w) {
        Vec g(a->size());
        for (std::size_t i = 0; i < a->size(); ++i) g[i] = (*a)[i] * (*a)[i] * w[i];
        return g;
      };
      double mu = 0.0;
      for (double c : spec.a) mu = std::max(mu, c * c);
      obj.mu = mu;
      obj.convex = true;
      obj.optimum_value = 0.0;
      break;
    }
    case ProblemKind::RandomSmoothQuadratic: {
      if (spec.dim < 1) throw std::invalid_argument("make_problem: dim must be >= 1");
      if (spec.mu <= 0.0) throw std::invalid_argument("make_problem: mu must be > 0");
      const std::size_t d = spec.dim;
      Rng rng(spec.seed * 0x2545f4914f6cdd1dULL + 0x8f3ad1b4c0ffee11ULL);
      Vec eigs(d);
      eigs[0] = spec.mu;  // top eigenvalue pinned
      for (std::size_t i = 1; i < d; ++i) eigs[i] = rng.uniform(0.1 * spec.mu, spec.mu);
      auto a = std::make_shared<Vec>(random_spd_matrix(d, eigs, rng));
      auto w_star = std::make_shared<Vec>(rng.uniform_vec(d, -1.0, 1.0));
      obj.dim = d;
      obj.loss = [a, w_star, d](ConstView w) {
        Vec delta(d);
        for (std::size_t i = 0; i < d; ++i) delta[i] = w[i] - (*w_star)[i];
        return 0.5 * dot(delta, matvec(*a, d, delta));
      };
      obj.grad = [a, w_star, d](ConstView w) {
        Vec delta(d);
        for (std::size_t i = 0; i < d; ++i) delta[i] = w[i] - (*w_star)[i];
        return matvec(*a, d, delta);
      };
      obj.mu = spec.mu;
      obj.convex = true;
      obj.optimum_value = 0.0;
      break;
    }
    case ProblemKind::Rosenbrock: {
      if (spec.dim < 2) {
        throw std::invalid_argument("make_problem: rosenbrock needs dim >= 2");
      }
      const std::size_t d = spec.dim;
      obj.dim = d;
      obj.loss = [d](ConstView w) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < d; ++i) {
          const double t1 = w[i + 1] - w[i] * w[i];
          const double t2 = 1.0 - w[i];
          acc += 100.0 * t1 * t1 + t2 * t2;
        }
        return acc;
      };
      obj.grad = [d](ConstView w) {
        Vec g(d, 0.0);
        for (std::size_t i = 0; i + 1 < d; ++i) {
          const double t1 = w[i + 1] - w[i] * w[i];
          g[i] += -400.0 * w[i] * t1 - 2.0 * (1.0 - w[i]);
          g[i + 1] += 200.0 * t1;
        }
        return g;
      };
      obj.convex = false;
      obj.optimum_value = 0.0;
      // smoothness only serves the continuous-dynamics demos; an inflated
      // sampled estimate over standard-normal points is enough there
      Objective probe = obj;
      obj.mu = 1.25 * sample_smoothness(probe, 4096, 0xb0c4u);
      break;
    }
    case ProblemKind::Logistic: {
      if (spec.dim < 1 || spec.n_samples < 1) {
        throw std::invalid_argument("make_problem: logistic needs dim >= 1, n >= 1");
      }
      auto data = std::make_shared<LogisticData>();
      data->n = spec.n_samples;
      data->d = spec.dim;
      Rng rng(spec.seed * 0x5851f42d4c957f2dULL + 0x14057b7ef767814fULL);
      data->x.resize(data->n * data->d);
      for (auto& x : data->x) x = rng.normal();
      Vec w_true = rng.normal_vec(data->d);
      data->y.resize(data->n);
      for (std::size_t i = 0; i < data->n; ++i) {
        double z = 0.0;
        const double* row = data->x.data() + i * data->d;
        for (std::size_t j = 0; j < data->d; ++j) z += row[j] * w_true[j];
        data->y[i] = rng.uniform01() < sigmoid(z) ? 1.0 : -1.0;
      }
      obj.dim = data->d;
      obj.loss = [data](ConstView w) { return logistic_loss(*data, w); };
      obj.grad = [data](ConstView w) { return logistic_grad(*data, w); };
      // sigmoid' <= 1/4 gives the certified curvature bound
      // lambda_max(X^T X)/(4n) + 2*l2, inflated for the power iteration
      // residual so the stored value stays an upper bound
      obj.mu = (gram_lambda_max(*data) / 4.0) * 1.001 + 2.0 * data->l2;
      obj.convex = true;
      obj.optimum_value = minimize_convex(obj.loss, obj.grad, obj.dim, *obj.mu);
      break;
    }
  }
  obj.name = spec.describe();
  return obj;
}

Vec finite_diff_gradient(const Objective& obj, ConstView w, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be > 0");
  Vec probe(w.begin(), w.end());
  Vec g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double wi = probe[i];
    probe[i] = wi + h;
    const double up = obj.loss(probe);
    probe[i] = wi - h;
    const double down = obj.loss(probe);
    probe[i] = wi;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double sample_smoothness(const Objective& obj, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw std::invalid_argument("sample_smoothness: n_pairs must be >= 1");
  Rng rng(seed);
  double best = 0.0;
  for (int k = 0; k < n_pairs; ++k) {
    Vec w = rng.normal_vec(obj.dim);
    Vec w2 = rng.normal_vec(obj.dim);
    const double dist = norm2(sub(w, w2));
    if (dist == 0.0) continue;
    const double gdist = norm2(sub(obj.grad(w), obj.grad(w2)));
    best = std::max(best, gdist / dist);
  }
  return best;
}

}  // namespace cautious

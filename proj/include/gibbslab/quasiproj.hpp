#pragma once

// Quasi-projection operators
//   [Q_{n,t} f](x) = sum_k <f, 2^n phi~(2^n . - k + t)> phi(2^n x - k + t)
// for a pair (phi, phi~) of compactly supported real vector functions.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "gibbslab/funcmodel.hpp"

namespace gibbslab {

/// Scalar input signal: sgn(. - x0), the monomial x^j, or a generic
/// function with known discontinuities and support.
struct Signal {
  enum class Kind { Sign, Monomial, Generic };
  Kind kind = Kind::Sign;
  double x0 = 0.0;
  int degree = 0;
  std::function<double(double)> fn;
  std::vector<double> breaks;
  double lo = -kInf, hi = kInf;

  static Signal sign(double at = 0.0) {
    Signal s;
    s.x0 = at;
    return s;
  }
  static Signal monomial(int j) {
    if (j < 0 || j > 6) throw InputError("Signal::monomial: degree must lie in [0, 6]");
    Signal s;
    s.kind = Kind::Monomial;
    s.degree = j;
    return s;
  }
  static Signal constant() { return monomial(0); }
  /// fn vanishes outside [lo, hi]; breaks lists its jump points.
  static Signal generic(std::function<double(double)> fn, std::vector<double> breaks = {}, double lo = -kInf,
                        double hi = kInf) {
    Signal s;
    s.kind = Kind::Generic;
    s.fn = [fn = std::move(fn), lo, hi](double x) { return (x < lo || x > hi) ? 0.0 : fn(x); };
    if (std::isfinite(lo)) breaks.push_back(lo);
    if (std::isfinite(hi)) breaks.push_back(hi);
    s.breaks = std::move(breaks);
    s.lo = lo;
    s.hi = hi;
    return s;
  }
  /// One component of a function, as a generic signal.
  static Signal from_function(const FunctionHandle& f, int comp = 0) {
    const auto [lo, hi] = support(f);
    std::vector<double> br;
    if (is_exact(f)) br = std::get<PiecewisePoly>(f).breakpoints();
    return generic([f, comp](double x) { return eval(f, comp, x); }, std::move(br), lo, hi);
  }

  double operator()(double x) const {
    switch (kind) {
      case Kind::Sign: return x > x0 ? 1.0 : (x < x0 ? -1.0 : 0.0);
      case Kind::Monomial: return detail::ipow(x, degree);
      default: return fn(x);
    }
  }
};

/// Points {m 2^-level - shift} inside [lo, hi].
struct Grid {
  int level = 12;
  double lo = -4.0, hi = 4.0;
  double shift = 0.0;

  double step() const { return std::ldexp(1.0, -level); }
  std::vector<double> points() const {
    if (level < 0 || level > kMaxLevel) throw InputError("Grid: level must lie in [0, 16]");
    const double h = step();
    const long m0 = static_cast<long>(std::ceil((lo + shift) / h - 1e-9));
    const long m1 = static_cast<long>(std::floor((hi + shift) / h + 1e-9));
    std::vector<double> xs;
    for (long m = m0; m <= m1; ++m) xs.push_back(static_cast<double>(m) * h - shift);
    return xs;
  }
};

class QuasiProjectionPair {
 public:
  static constexpr int kMaxMoment = 6;

  QuasiProjectionPair(FunctionHandle phi, FunctionHandle phi_tilde)
      : phi_(std::move(phi)), phi_tilde_(std::move(phi_tilde)) {
    if (gibbslab::components(phi_) != gibbslab::components(phi_tilde_))
      throw DimensionError("QuasiProjectionPair: phi and phi~ have different component counts");
    for (int j = 0; j <= kMaxMoment; ++j) {
      mu_.push_back(moment(phi_, j));
      mu_tilde_.push_back(moment(phi_tilde_, j));
    }
    const auto [a, b] = gibbslab::support(phi_);
    const auto [c, d] = gibbslab::support(phi_tilde_);
    N_ = static_cast<int>(std::ceil(std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}) - 1e-12));
  }

  const FunctionHandle& phi() const noexcept { return phi_; }
  const FunctionHandle& phi_tilde() const noexcept { return phi_tilde_; }
  int components() const { return gibbslab::components(phi_); }
  /// Both functions are supported in [-N, N].
  int support_bound() const noexcept { return N_; }
  const Eigen::VectorXd& mu(int j) const { return mu_.at(static_cast<std::size_t>(j)); }
  const Eigen::VectorXd& mu_tilde(int j) const { return mu_tilde_.at(static_cast<std::size_t>(j)); }
  Eigen::VectorXcd phi_hat(int j) const { return mu(j).cast<cplx>() * detail::minus_i_pow(j); }
  Eigen::VectorXcd phi_tilde_hat(int j) const { return mu_tilde(j).cast<cplx>() * detail::minus_i_pow(j); }

  QuasiProjectionPair swapped() const { return QuasiProjectionPair(phi_tilde_, phi_); }
  QuasiProjectionPair shifted(double c) const { return QuasiProjectionPair(shift(phi_, c), shift(phi_tilde_, c)); }

  /// Default evaluation window half-width 2N + 3.
  double default_window() const { return 2.0 * N_ + 3.0; }

 private:
  FunctionHandle phi_, phi_tilde_;
  std::vector<Eigen::VectorXd> mu_, mu_tilde_;
  int N_ = 0;
};

namespace detail {

/// <f, 2^n phi~(2^n . - k + t)> = integral f(2^-n (y + k - t)) phi~(y) dy.
inline Eigen::VectorXd signal_coefficient(const QuasiProjectionPair& pair, const FunctionHandle& phit,
                                          const Signal& f, int n, double t, long k) {
  const double scale = std::ldexp(1.0, -n);
  const double shift = static_cast<double>(k) - t;
  switch (f.kind) {
    case Signal::Kind::Sign: {
      const double s = std::ldexp(f.x0, n) - shift;
      return partial_moment(phit, s, kInf, 0) - partial_moment(phit, -kInf, s, 0);
    }
    case Signal::Kind::Monomial: {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(pair.components());
      for (int i = 0; i <= f.degree; ++i)
        acc += binomial(f.degree, i) * ipow(shift, f.degree - i) * pair.mu_tilde(i);
      return acc * ipow(scale, f.degree);
    }
    default: {
      std::vector<double> br;
      for (double b : f.breaks) br.push_back(std::ldexp(b, n) - shift);
      return integrate_against(phit, [&](double y) { return f.fn(scale * (y + shift)); }, br);
    }
  }
}

}  // namespace detail

/// Values of sum_k <f, 2^n g~(2^n . - k + t)> g(2^n x - k + t) at the points xs,
/// for any function/dual pair (g, g~) with matching components. Generic
/// signals skip translates whose dual support misses the signal support.
inline std::vector<double> project_values(const QuasiProjectionPair& pair, const Signal& f, int n, double t,
                                          const std::vector<double>& xs) {
  if (n < 0 || n > 20) throw InputError("quasi-projection level must lie in [0, 20]");
  std::vector<double> out(xs.size(), 0.0);
  if (xs.empty()) return out;
  const auto [plo, phi_hi] = support(pair.phi());
  const auto [tlo, thi] = support(pair.phi_tilde());
  const double scale = std::ldexp(1.0, n);
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  long kmin = static_cast<long>(std::ceil(scale * *xmin + t - phi_hi - 1e-9));
  long kmax = static_cast<long>(std::floor(scale * *xmax + t - plo + 1e-9));
  if (f.kind == Signal::Kind::Generic) {
    if (std::isfinite(f.lo)) kmin = std::max(kmin, static_cast<long>(std::floor(scale * f.lo + t - thi)) - 1);
    if (std::isfinite(f.hi)) kmax = std::min(kmax, static_cast<long>(std::ceil(scale * f.hi + t - tlo)) + 1);
  }
  if (kmin > kmax) return out;
  std::vector<Eigen::VectorXd> coef(static_cast<std::size_t>(kmax - kmin + 1));
  detail::parallel_for(coef.size(), [&](std::size_t i) {
    coef[i] = detail::signal_coefficient(pair, pair.phi_tilde(), f, n, t, kmin + static_cast<long>(i));
  });
  detail::parallel_for(xs.size(), [&](std::size_t i) {
    const double u = scale * xs[i] + t;
    const long k0 = std::max(kmin, static_cast<long>(std::ceil(u - phi_hi - 1e-9)));
    const long k1 = std::min(kmax, static_cast<long>(std::floor(u - plo + 1e-9)));
    double acc = 0.0;
    for (long k = k0; k <= k1; ++k) acc += coef[static_cast<std::size_t>(k - kmin)].dot(eval(pair.phi(), u - k));
    out[i] = acc;
  });
  return out;
}

/// Samples of Q_{n,t} f on the grid.
inline SampledFunction apply(const QuasiProjectionPair& pair, const Signal& f, int n, double t, const Grid& grid) {
  const auto xs = grid.points();
  if (xs.size() < 2) throw InputError("apply: grid holds fewer than two points");
  return SampledFunction(grid.level, xs.front(), {project_values(pair, f, n, t, xs)});
}

/// [Q_{0,t} f](x) at a single point.
inline double apply_at(const QuasiProjectionPair& pair, const Signal& f, int n, double t, double x) {
  return project_values(pair, f, n, t, {x}).front();
}

struct QP1Check {
  bool ok = false;
  double normalization_residual = 0.0;  // |conj(phi~^(0))^T phi^(0) - 1|
  double sup_residual = 0.0;            // sup |Q1 - 1| over one period
};

/// Q1 = 1: normalization from moments plus constancy of
/// sum_k conj(phi~^(0))^T phi(x - k) sampled over [0, 1].
inline QP1Check check_qp1(const QuasiProjectionPair& pair, int level = 10, double tol = 1e-9) {
  QP1Check r;
  r.normalization_residual = std::abs(pair.mu_tilde(0).dot(pair.mu(0)) - 1.0);
  const auto xs = Grid{std::min(level, grid_level(pair.phi()).value_or(level)), 0.0, 1.0}.points();
  const auto v = project_values(pair, Signal::constant(), 0, 0.0, xs);
  for (double y : v) r.sup_residual = std::max(r.sup_residual, std::abs(y - 1.0));
  r.ok = r.normalization_residual < tol && r.sup_residual < tol;
  return r;
}

/// K(x, y) = sum_k conj(phi~(y - k))^T phi(x - k).
inline double kernel_K(const QuasiProjectionPair& pair, double x, double y) {
  const auto [lo, hi] = support(pair.phi());
  double acc = 0.0;
  for (long k = static_cast<long>(std::ceil(x - hi - 1e-9)); k <= static_cast<long>(std::floor(x - lo + 1e-9)); ++k)
    acc += eval(pair.phi_tilde(), y - k).dot(eval(pair.phi(), x - k));
  return acc;
}

struct KernelCriterion {
  bool ok = false;
  double right_sup = 0.0, right_x = 0.0;  // sup of int_0^inf K(x, y) dy over x > 0
  double left_inf = 0.0, left_x = 0.0;    // inf over x < 0
  double worst_x = 0.0, worst_value = 0.0;
};

/// int_0^inf K(x, y) dy <= 1 for x > 0 and >= 0 for x < 0 on the grid of
/// [-window, window]; the y-integrals are exact half-line integrals of phi~.
inline KernelCriterion kernel_criterion(const QuasiProjectionPair& pair, double window = 0.0, int level = 12,
                                        double tol = 1e-9) {
  if (window <= 0.0) window = pair.default_window();
  const auto [lo, hi] = support(pair.phi());
  const auto [tlo, thi] = support(pair.phi_tilde());
  const long kmin = static_cast<long>(std::floor(-window - hi)) - 1;
  const long kmax = static_cast<long>(std::ceil(window - lo)) + 1;
  std::vector<Eigen::VectorXd> right(static_cast<std::size_t>(kmax - kmin + 1));
  for (long k = kmin; k <= kmax; ++k)
    right[static_cast<std::size_t>(k - kmin)] = halfline_integral(pair.phi_tilde(), static_cast<double>(-k), Side::Right);
  const auto xs = Grid{level, -window, window}.points();
  std::vector<double> v(xs.size(), 0.0);
  detail::parallel_for(xs.size(), [&](std::size_t i) {
    const double x = xs[i];
    double acc = 0.0;
    for (long k = static_cast<long>(std::ceil(x - hi - 1e-9)); k <= static_cast<long>(std::floor(x - lo + 1e-9)); ++k)
      acc += right[static_cast<std::size_t>(k - kmin)].dot(eval(pair.phi(), x - k));
    v[i] = acc;
  });
  KernelCriterion r;
  r.right_sup = -kInf;
  r.left_inf = kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0.0 && v[i] > r.right_sup) {
      r.right_sup = v[i];
      r.right_x = xs[i];
    } else if (xs[i] < 0.0 && v[i] < r.left_inf) {
      r.left_inf = v[i];
      r.left_x = xs[i];
    }
  }
  const double over = r.right_sup - 1.0, under = -r.left_inf;
  if (over >= under) {
    r.worst_x = r.right_x;
    r.worst_value = r.right_sup;
  } else {
    r.worst_x = r.left_x;
    r.worst_value = r.left_inf;
  }
  r.ok = over <= tol && under <= tol;
  return r;
}

/// sup |Q x^j - x^j| over the grid of [-window, window], j = 0..m-1.
inline std::vector<double> poly_reproduction(const QuasiProjectionPair& pair, int m, int level = 8,
                                             double window = 1.0) {
  if (m < 1 || m > QuasiProjectionPair::kMaxMoment) throw InputError("poly_reproduction: m must lie in [1, 6]");
  const int lvl = std::min(level, grid_level(pair.phi()).value_or(level));
  const auto xs = Grid{lvl, -window, window}.points();
  std::vector<double> res;
  for (int j = 0; j < m; ++j) {
    const auto v = project_values(pair, Signal::monomial(j), 0, 0.0, xs);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(v[i] - detail::ipow(xs[i], j)));
    res.push_back(worst);
  }
  return res;
}

/// Largest m <= m_max with Q p = p for every polynomial of degree < m.
inline int accuracy_order(const QuasiProjectionPair& pair, int m_max = 6, double tol = 1e-8) {
  const auto res = poly_reproduction(pair, m_max);
  int m = 0;
  while (m < m_max && res[static_cast<std::size_t>(m)] < tol) ++m;
  return m;
}

struct RateFit {
  double slope = 0.0;  // negative fitted slope of log2 error against n
  std::vector<int> levels;
  std::vector<double> errors;
};

/// L2 error of Q_n f on [-window, window] for each n, and the least-squares
/// decay rate of log2(error) in n.
inline RateFit approximation_rate(const QuasiProjectionPair& pair, const Signal& f, int n_lo, int n_hi,
                                  double window = 4.0, int oversample = 4) {
  if (n_lo < 0 || n_hi <= n_lo) throw InputError("approximation_rate: need 0 <= n_lo < n_hi");
  RateFit fit;
  for (int n = n_lo; n <= n_hi; ++n) {
    int level = n + oversample;
    if (auto gl = grid_level(pair.phi())) level = std::min(level, n + *gl);
    const Grid g{level, -window, window};
    const auto xs = g.points();
    const auto v = project_values(pair, f, n, 0.0, xs);
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double w = (i == 0 || i + 1 == xs.size()) ? 0.5 : 1.0;
      const double e = v[i] - f(xs[i]);
      s += w * e * e;
    }
    fit.levels.push_back(n);
    fit.errors.push_back(std::sqrt(s * g.step()));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(fit.levels.size());
  for (std::size_t i = 0; i < fit.levels.size(); ++i) {
    const double x = fit.levels[i], y = std::log2(fit.errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return fit;
}

}  // namespace gibbslab

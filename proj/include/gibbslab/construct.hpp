#pragma once

// Piecewise-constant dual functions of prescribed accuracy order for a
// nonnegative scalar phi:
//   phi~ = eta - eta(. + 1) + chi_(N-1, N],  eta = sum_k c_k chi_[x_{k-1}, x_k)
// with knots N = x_0 < ... < x_{m-1} = N + 1 chosen so that
// int x^j phi~ = d_j, d_j = i^j [1 / conj(phi^)]^(j)(0), j < m.

#include <cmath>
#include <optional>
#include <vector>

#include "gibbslab/gibbs.hpp"

namespace gibbslab {

/// d_0..d_{m-1} from the power-series reciprocal of conj(phi^)(xi).
inline std::vector<double> reciprocal_moments(const FunctionHandle& phi, int m) {
  if (m < 1 || m > 7) throw InputError("reciprocal_moments: m must lie in [1, 7]");
  if (components(phi) != 1) throw DimensionError("reciprocal_moments: scalar phi expected");
  // s_j = conj(phi^^(j)(0)) / j! = i^j mu_j / j!
  std::vector<cplx> s, r;
  for (int j = 0; j < m; ++j) s.push_back(std::conj(fhat_deriv0(phi, j)(0)) / detail::factorial(j));
  if (std::abs(s[0]) < 1e-12) throw PreconditionError("reciprocal_moments: phi^(0) = 0");
  r.push_back(1.0 / s[0]);
  for (int j = 1; j < m; ++j) {
    cplx acc = 0.0;
    for (int i = 1; i <= j; ++i) acc += s[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(j - i)];
    r.push_back(-acc / s[0]);
  }
  std::vector<double> d;
  for (int j = 0; j < m; ++j) {
    const cplx v = std::conj(detail::minus_i_pow(j)) * detail::factorial(j) * r[static_cast<std::size_t>(j)];
    if (std::abs(v.imag()) > 1e-10)
      throw ConsistencyError("reciprocal_moments: d_" + std::to_string(j) + " has imaginary part " +
                             std::to_string(v.imag()));
    d.push_back(v.real());
  }
  return d;
}

struct DualConstruction {
  int m = 1;
  std::vector<double> d;  // d_0..d_{m-1}
  int N = 1;
  std::vector<double> knots;  // x_0..x_{m-1}
  std::vector<double> c;      // c_1..c_{m-1}
  PiecewisePoly phi_tilde = PiecewisePoly::piecewise_constant({0.0, 1.0}, {1.0});
  double moment_residual = 0.0;    // max_j |int x^j phi~ - d_j|
  double partition_residual = 0.0;  // sup |sum_k phi~(x - k) - 1| on a grid
  double system_residual = 0.0;
};

namespace detail {

inline std::vector<double> solve_dense(const std::vector<std::vector<double>>& A, const std::vector<double>& b) {
  const auto n = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw PreconditionError("build_dual: singular moment system");
  const Eigen::VectorXd x = lu.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
  return {x.data(), x.data() + n};
}

/// [(x^{j+1} - (x - 1)^{j+1}) / (j + 1)] between a and b.
inline double telescoped_moment(int j, double a, double b) {
  auto F = [j](double x) { return (ipow(x, j + 1) - ipow(x - 1.0, j + 1)) / (j + 1); };
  return F(b) - F(a);
}

}  // namespace detail

/// Coefficient matrix and right-hand side of the moment system for given knots.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> moment_system(const std::vector<double>& d,
                                                                                    const std::vector<double>& knots,
                                                                                    int N) {
  const std::size_t n = knots.size() - 1;
  std::vector<std::vector<double>> M(n, std::vector<double>(n));
  std::vector<double> rhs(n);
  for (std::size_t j = 1; j <= n; ++j) {
    for (std::size_t k = 1; k <= n; ++k)
      M[j - 1][k - 1] = detail::telescoped_moment(static_cast<int>(j), knots[k - 1], knots[k]);
    rhs[j - 1] = d[j] - (detail::ipow(N, static_cast<int>(j) + 1) - detail::ipow(N - 1.0, static_cast<int>(j) + 1)) /
                                static_cast<double>(j + 1);
  }
  return {M, rhs};
}

/// Builds phi~ for a nonnegative scalar phi with phi^(0) = 1. Knots default
/// to equally spaced points of [N, N + 1].
inline DualConstruction build_dual(const FunctionHandle& phi, int m, std::optional<std::vector<double>> knots = {}) {
  if (m < 1 || m > 7) throw InputError("build_dual: order must lie in [1, 7]");
  if (components(phi) != 1) throw DimensionError("build_dual: scalar phi expected");
  if (min_value(phi) < -1e-10) throw PreconditionError("build_dual: phi takes negative values");
  if (std::abs(moment(phi, 0)(0) - 1.0) > 1e-9) throw PreconditionError("build_dual: phi^(0) != 1");
  DualConstruction out;
  out.m = m;
  const auto dfull = reciprocal_moments(phi, std::max(m, 2));
  out.d.assign(dfull.begin(), dfull.begin() + m);
  out.N = static_cast<int>(std::floor(dfull[1] + 0.5 + 1e-12));
  const double N = out.N;
  if (knots) {
    if (static_cast<int>(knots->size()) != m) throw InputError("build_dual: need exactly m knots");
    for (std::size_t i = 0; i + 1 < knots->size(); ++i)
      if (!((*knots)[i] < (*knots)[i + 1])) throw InputError("build_dual: knots must increase strictly");
    if (m > 1 && (std::abs(knots->front() - N) > 1e-12 || std::abs(knots->back() - (N + 1)) > 1e-12))
      throw InputError("build_dual: knots must start at N = " + std::to_string(out.N) + " and end at N + 1");
    out.knots = *knots;
  } else {
    for (int k = 0; k < m; ++k) out.knots.push_back(m == 1 ? N : N + static_cast<double>(k) / (m - 1));
  }

  std::vector<double> breaks{N - 1.0};
  std::vector<double> values;
  if (m == 1) {
    breaks.push_back(N);
    values.push_back(1.0);
  } else {
    auto [M, rhs] = moment_system(out.d, out.knots, out.N);
    out.c = detail::solve_dense(M, rhs);
    for (std::size_t j = 0; j < M.size(); ++j) {
      double s = -rhs[j];
      for (std::size_t k = 0; k < M.size(); ++k) s += M[j][k] * out.c[k];
      out.system_residual = std::max(out.system_residual, std::abs(s));
    }
    for (int k = 1; k < m; ++k) {
      breaks.push_back(out.knots[static_cast<std::size_t>(k)] - 1.0);
      values.push_back(1.0 - out.c[static_cast<std::size_t>(k - 1)]);
    }
    for (int k = 1; k < m; ++k) {
      breaks.push_back(out.knots[static_cast<std::size_t>(k)]);
      values.push_back(out.c[static_cast<std::size_t>(k - 1)]);
    }
  }
  out.phi_tilde = PiecewisePoly::piecewise_constant(breaks, values);
  for (int j = 0; j < m; ++j)
    out.moment_residual = std::max(out.moment_residual,
                                   std::abs(out.phi_tilde.partial_moment(-kInf, kInf, j)(0) - out.d[static_cast<std::size_t>(j)]));
  for (int i = 0; i <= 256; ++i) {
    const double x = i / 256.0;
    double s = 0.0;
    for (int k = -2; k <= 2; ++k) s += out.phi_tilde.eval(0, x + N + k);
    out.partition_residual = std::max(out.partition_residual, std::abs(s - 1.0));
  }
  return out;
}

struct GibbsFreeReport {
  double integral_right = 0.0;  // int_N^{N+1} phi~ = d_1 - N + 1/2
  double integral_left = 0.0;   // int_{N-1}^N phi~
  bool integrals_in_range = false;
  bool item_i = false;
  double R0 = 1.0, L0 = -1.0;
  bool gibbs_free_at_origin = false;
  // Optional sweep of t over [0, 1); not covered by the construction's guarantee.
  std::optional<double> sweep_R, sweep_L;
};

inline GibbsFreeReport verify_gibbs_free(const DualConstruction& dc, const FunctionHandle& phi, int level = 12,
                                         int sweep_density = 0, double tol = 1e-9) {
  GibbsFreeReport r;
  const double N = dc.N;
  r.integral_right = dc.phi_tilde.partial_moment(N, N + 1.0, 0)(0);
  r.integral_left = dc.phi_tilde.partial_moment(N - 1.0, N, 0)(0);
  r.integrals_in_range = r.integral_right >= -tol && r.integral_right <= 1.0 + tol && r.integral_left >= -tol &&
                         r.integral_left <= 1.0 + tol;
  const QuasiProjectionPair pair(phi, dc.phi_tilde);
  r.item_i = nonneg_sufficient(pair).item_i;
  const auto o = overshoot(pair, 0.0, level);
  r.R0 = o.R;
  r.L0 = o.L;
  r.gibbs_free_at_origin = r.R0 <= 1.0 + tol && r.L0 >= -1.0 - tol;
  if (sweep_density > 0) {
    double R = 1.0, L = -1.0;
    for (int i = 0; i < sweep_density; ++i) {
      const auto s = overshoot(pair, static_cast<double>(i) / sweep_density, level);
      R = std::max(R, s.R);
      L = std::min(L, s.L);
    }
    r.sweep_R = R;
    r.sweep_L = L;
  }
  return r;
}

struct OptimalityWitness {
  bool applicable = false;  // only orders m >= 3 are addressed
  bool violated = false;    // some [phi~^]'(2 pi k) != 0, k != 0
  int worst_k = 0;
  double worst_value = 0.0;
};

/// |[phi~^]'(2 pi k)| for 0 < |k| <= k_max, from exact piecewise transforms.
inline OptimalityWitness optimality_witness(const PiecewisePoly& phi_tilde, int m, int k_max = 5, double tol = 1e-8) {
  OptimalityWitness w;
  if (m < 3) return w;
  w.applicable = true;
  for (int k = -k_max; k <= k_max; ++k) {
    if (k == 0) continue;
    const double v = phi_tilde.fourier(2.0 * kPi * k, 1).cwiseAbs().maxCoeff();
    if (v > w.worst_value) {
      w.worst_value = v;
      w.worst_k = k;
    }
  }
  w.violated = w.worst_value > tol;
  return w;
}

inline OptimalityWitness optimality_witness(const DualConstruction& dc, int k_max = 5) {
  return optimality_witness(dc.phi_tilde, dc.m, k_max);
}

}  // namespace gibbslab

#pragma once

// Overshoot of Q_{n,t} sgn, the lattice moments kappa_j, the identity
//   int x (sgn(x) - [Q sgn](x)) dx = 1/6 - conj(phi^(0))^T (kappa_1 - kappa_2) - ...
// and Gibbs verdicts at rational or irrational points.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gibbslab/quasiproj.hpp"

namespace gibbslab {

/// Exact rational p/q with q > 0 and gcd(p, q) = 1.
struct Rational {
  std::int64_t p = 0, q = 1;

  Rational() = default;
  Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw InputError("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    p = num / (g == 0 ? 1 : g);
    q = den / (g == 0 ? 1 : g);
  }

  /// Parses "p/q" or an integer "p".
  static Rational parse(const std::string& s) {
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw InputError("");
        return Rational(v, 1);
      }
      const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
      const long long num = std::stoll(a, &used);
      if (used != a.size()) throw InputError("");
      const long long den = std::stoll(b, &used);
      if (used != b.size()) throw InputError("");
      return Rational(num, den);
    } catch (const std::exception&) {
      throw InputError("malformed rational '" + s + "' (expected p/q)");
    }
  }

  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
  bool operator==(const Rational& o) const { return p == o.p && q == o.q; }
  std::string str() const { return std::to_string(p) + "/" + std::to_string(q); }
};

namespace detail {

inline std::int64_t mulmod(std::int64_t a, std::int64_t b, std::int64_t m) {
  return static_cast<std::int64_t>((static_cast<__int128>(a) * b) % m);
}

inline std::int64_t powmod(std::int64_t base, std::uint64_t e, std::int64_t m) {
  std::int64_t r = 1 % m, b = base % m;
  while (e) {
    if (e & 1u) r = mulmod(r, b, m);
    b = mulmod(b, b, m);
    e >>= 1u;
  }
  return r;
}

/// q = 2^k q' with q' odd: returns {k, q'}.
inline std::pair<int, std::int64_t> split_two_power(std::int64_t q) {
  int k = 0;
  while (q % 2 == 0) {
    q /= 2;
    ++k;
  }
  return {k, q};
}

inline std::int64_t pos_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace detail

/// Fractional part of 2^n x0, exactly.
inline Rational orbit_point(const Rational& x0, std::uint64_t n) {
  const auto [k, odd] = detail::split_two_power(x0.q);
  if (n < static_cast<std::uint64_t>(k)) {
    const std::int64_t den = x0.q >> n;
    return Rational(detail::pos_mod(x0.p, den), den);
  }
  return Rational(detail::mulmod(detail::pos_mod(x0.p, odd), detail::powmod(2, n - static_cast<std::uint64_t>(k), odd), odd),
                  odd);
}

/// Cluster points of the fractional parts of 2^n x0, in orbit order.
/// {0} for dyadic x0; otherwise the cycle of 2^m p mod q' over q'.
inline std::vector<Rational> cluster_set(const Rational& x0) {
  const auto [k, odd] = detail::split_two_power(x0.q);
  (void)k;
  if (odd == 1) return {Rational(0, 1)};
  std::vector<Rational> out;
  const std::int64_t start = detail::pos_mod(x0.p, odd);
  std::int64_t v = start;
  do {
    out.emplace_back(v, odd);
    v = detail::mulmod(v, 2, odd);
  } while (v != start);
  return out;
}

/// kappa_j = sum_n n^j int_{-n}^{1-n} phi~ (j = 0, 1, 2).
inline Eigen::VectorXd kappa(const FunctionHandle& phi_tilde, int j) {
  if (j < 0 || j > 2) throw InputError("kappa: j must be 0, 1 or 2");
  const auto [lo, hi] = support(phi_tilde);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(components(phi_tilde));
  for (long n = static_cast<long>(std::floor(-hi)); n <= static_cast<long>(std::ceil(1.0 - lo)); ++n)
    acc += detail::ipow(static_cast<double>(n), j) * partial_moment(phi_tilde, -n, 1.0 - n, 0);
  return acc;
}

/// Closed-form side of the identity, assembled from moments and kappa_j.
inline cplx identity_rhs(const QuasiProjectionPair& pair) {
  const auto qp1 = check_qp1(pair);
  if (!qp1.ok)
    throw PreconditionError("identity_rhs: Q1 != 1 (normalization residual " +
                            std::to_string(qp1.normalization_residual) + ", sup residual " +
                            std::to_string(qp1.sup_residual) + ")");
  const Eigen::VectorXcd k1 = kappa(pair.phi_tilde(), 1).cast<cplx>();
  const Eigen::VectorXcd k2 = kappa(pair.phi_tilde(), 2).cast<cplx>();
  const Eigen::VectorXcd p0 = pair.phi_hat(0), p1 = pair.phi_hat(1), p2 = pair.phi_hat(2);
  const Eigen::VectorXcd t0 = pair.phi_tilde_hat(0);
  const cplx I(0.0, 1.0);
  // adjoint(): conj(v)^T
  return 1.0 / 6.0 - (p0.adjoint() * (k1 - k2))(0) - (p2.adjoint() * t0)(0) + I * (p1.adjoint() * t0)(0) -
         2.0 * I * (p1.adjoint() * k1)(0);
}

/// int x (sgn(x) - [Q_{0,c} sgn](x)) dx. With Q1 = 1 the integrand is
/// sum_k 2 A_k^T phi(x - k + c) for x > 0 and -sum_k 2 B_k^T phi(x - k + c)
/// for x < 0, A_k, B_k the half-line integrals of phi~ cut at c - k, so each
/// term reduces to partial first moments of phi.
inline double identity_lhs(const QuasiProjectionPair& pair, double c = 0.0) {
  const auto [lo, hi] = support(pair.phi());
  const auto [tlo, thi] = support(pair.phi_tilde());
  const long kmin = static_cast<long>(std::floor(c - std::max(hi, thi))) - 1;
  const long kmax = static_cast<long>(std::ceil(c - std::min(lo, tlo))) + 1;
  double acc = 0.0;
  for (long k = kmin; k <= kmax; ++k) {
    const double cut = c - static_cast<double>(k);
    const double off = static_cast<double>(k) - c;
    const Eigen::VectorXd A = partial_moment(pair.phi_tilde(), -kInf, cut, 0);
    const Eigen::VectorXd B = partial_moment(pair.phi_tilde(), cut, kInf, 0);
    const Eigen::VectorXd right = partial_moment(pair.phi(), cut, kInf, 1) + off * partial_moment(pair.phi(), cut, kInf, 0);
    const Eigen::VectorXd left = partial_moment(pair.phi(), -kInf, cut, 1) + off * partial_moment(pair.phi(), -kInf, cut, 0);
    acc += 2.0 * A.dot(right) - 2.0 * B.dot(left);
  }
  return acc;
}

struct Bracket {
  cplx value;
  bool hypotheses_met = false;  // Q~ reproduces polynomials of degree < 2
};

/// [conj(phi^)^T phi~^]''(0) from moments.
inline Bracket bracket_second_deriv(const QuasiProjectionPair& pair, double tol = 1e-8) {
  Bracket b;
  b.value = (pair.phi_hat(2).adjoint() * pair.phi_tilde_hat(0))(0) +
            2.0 * (pair.phi_hat(1).adjoint() * pair.phi_tilde_hat(1))(0) +
            (pair.phi_hat(0).adjoint() * pair.phi_tilde_hat(2))(0);
  const auto res = poly_reproduction(pair.swapped(), 2);
  b.hypotheses_met = res[0] < tol && res[1] < tol;
  return b;
}

struct Overshoot {
  double R = 1.0, L = -1.0;    // sup over x > 0, inf over x < 0
  double R_x = 0.0, L_x = 0.0;  // where they are attained (inf when the far-field value wins)
  double sgn_deviation = 0.0;   // sup |Q sgn - sgn| over grid points x != 0
};

/// R(t) and L(t) of Q_{0,t} sgn on the grid 2^-level Z - t inside
/// [-window, window]; beyond the window Q_{0,t} sgn = sgn exactly.
inline Overshoot overshoot(const QuasiProjectionPair& pair, double t, int level = 12, double window = 0.0) {
  const double zone = 2.0 * pair.support_bound() + 1.0;
  if (window <= 0.0) window = pair.default_window();
  if (window < zone)
    throw InputError("overshoot: window " + std::to_string(window) + " is smaller than the interaction zone; need >= " +
                     std::to_string(zone));
  const auto xs = Grid{level, -window, window, t}.points();
  const auto v = project_values(pair, Signal::sign(), 0, t, xs);
  Overshoot o;
  o.R_x = kInf;
  o.L_x = -kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    if (x > 0.0) {
      if (v[i] > o.R) {
        o.R = v[i];
        o.R_x = x;
      }
      o.sgn_deviation = std::max(o.sgn_deviation, std::abs(v[i] - 1.0));
    } else if (x < 0.0) {
      if (v[i] < o.L) {
        o.L = v[i];
        o.L_x = x;
      }
      o.sgn_deviation = std::max(o.sgn_deviation, std::abs(v[i] + 1.0));
    }
  }
  return o;
}

inline double overshoot(const QuasiProjectionPair& pair, double t, Side side, int level = 12, double window = 0.0) {
  const auto o = overshoot(pair, t, level, window);
  return side == Side::Right ? o.R : o.L;
}

enum class Verdict { Gibbs, NoGibbs, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Gibbs: return "gibbs";
    case Verdict::NoGibbs: return "no-gibbs";
    default: return "inconclusive";
  }
}

struct GibbsReport {
  std::string point;              // "p/q" or "irrational"
  double R = 1.0, L = -1.0;       // R_{x0}, L_{x0}
  std::vector<Rational> cluster;  // empty with full_interval set for irrational points
  bool full_interval = false;
  Verdict verdict = Verdict::Inconclusive;
  double tau = 1e-3;
  bool sgn_cond_confirmed = true;  // Q sgn != sgn somewhere on the grid
  double overshoot_right() const { return R - 1.0; }
  double overshoot_left() const { return -L - 1.0; }
};

struct GibbsOptions {
  double tau = 1e-3;
  int level = 12;
  double window = 0.0;
  int density = 256;  // c-grid size for irrational points
  double continuity_tol = 0.05;
};

namespace detail {
inline GibbsReport finish_report(GibbsReport r, const std::vector<Overshoot>& runs) {
  double dev = 0.0;
  for (const auto& o : runs) {
    r.R = std::max(r.R, o.R);
    r.L = std::min(r.L, o.L);
    dev = std::max(dev, o.sgn_deviation);
  }
  r.sgn_cond_confirmed = dev >= 1e-9;
  const bool over = r.R > 1.0 + r.tau || r.L < -1.0 - r.tau;
  if (over)
    r.verdict = Verdict::Gibbs;
  else
    r.verdict = r.full_interval ? Verdict::Inconclusive : Verdict::NoGibbs;
  return r;
}

inline void require_gibbs_hypotheses(const QuasiProjectionPair& pair, bool need_continuity, double tol) {
  const auto qp1 = check_qp1(pair);
  if (!qp1.ok) throw PreconditionError("Q1 != 1 (sup residual " + std::to_string(qp1.sup_residual) + ")");
  if (need_continuity && !is_continuous(pair.phi(), tol))
    throw PreconditionError("phi is not continuous; cluster-point analysis needs a continuous phi");
}
}  // namespace detail

/// R_{x0}, L_{x0} via the cluster set of x0.
inline GibbsReport gibbs_at_point(const QuasiProjectionPair& pair, const Rational& x0, const GibbsOptions& opt = {}) {
  GibbsReport r;
  r.point = x0.str();
  r.tau = opt.tau;
  r.cluster = cluster_set(x0);
  const bool dyadic = r.cluster.size() == 1 && r.cluster.front().p == 0;
  detail::require_gibbs_hypotheses(pair, !dyadic, opt.continuity_tol);
  std::vector<Overshoot> runs;
  for (const auto& c : r.cluster) runs.push_back(overshoot(pair, c.value(), opt.level, opt.window));
  return detail::finish_report(std::move(r), runs);
}

/// Irrational x0: S_{x0} = [0, 1], swept on a uniform c-grid. A finite sweep
/// can certify overshoot but never its absence.
inline GibbsReport gibbs_at_irrational(const QuasiProjectionPair& pair, const GibbsOptions& opt = {}) {
  if (opt.density < 1) throw InputError("gibbs_at_irrational: density must be positive");
  GibbsReport r;
  r.point = "irrational";
  r.tau = opt.tau;
  r.full_interval = true;
  detail::require_gibbs_hypotheses(pair, true, opt.continuity_tol);
  std::vector<Overshoot> runs(static_cast<std::size_t>(opt.density));
  for (int i = 0; i < opt.density; ++i)
    runs[static_cast<std::size_t>(i)] = overshoot(pair, static_cast<double>(i) / opt.density, opt.level, opt.window);
  return detail::finish_report(std::move(r), runs);
}

struct NonnegCheck {
  bool item_i = false;   // phi >= 0 and every half-line integral of phi~ at integers >= 0
  bool item_ii = false;  // phi >= 0 and phi~ >= 0
};

inline NonnegCheck nonneg_sufficient(const QuasiProjectionPair& pair, double tol = 1e-10) {
  NonnegCheck r;
  const bool phi_ok = min_value(pair.phi()) >= -tol;
  bool tails = true;
  const auto [lo, hi] = support(pair.phi_tilde());
  for (long k = static_cast<long>(std::floor(lo)); k <= static_cast<long>(std::ceil(hi)); ++k) {
    if (halfline_integral(pair.phi_tilde(), static_cast<double>(k), Side::Left).minCoeff() < -tol ||
        halfline_integral(pair.phi_tilde(), static_cast<double>(k), Side::Right).minCoeff() < -tol)
      tails = false;
  }
  r.item_i = phi_ok && tails;
  r.item_ii = phi_ok && min_value(pair.phi_tilde()) >= -tol;
  return r;
}

}  // namespace gibbslab

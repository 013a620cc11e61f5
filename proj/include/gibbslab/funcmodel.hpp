#pragma once

// Compactly supported vector functions in two representations: exact
// piecewise polynomials and dyadic samples (optionally produced by the
// cascade iteration of a refinement mask).

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

#include "gibbslab/core.hpp"
#include "gibbslab/sequences.hpp"

namespace gibbslab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr int kMaxPieceDegree = 8;
inline constexpr int kMaxLevel = 16;

namespace poly {

using Poly = std::vector<double>;

inline double eval(const Poly& p, double u) {
  double r = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * u + *it;
  return r;
}

inline Poly multiply(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

/// Coefficients of p(u + delta).
inline Poly taylor_shift(const Poly& p, double delta) {
  Poly r(p.size(), 0.0);
  for (std::size_t m = 0; m < p.size(); ++m) {
    double dpow = 1.0;
    for (std::size_t i = m; i + 1 > 0; --i) {
      r[i] += p[m] * detail::binomial(static_cast<int>(m), static_cast<int>(i)) * dpow;
      dpow *= delta;
      if (i == 0) break;
    }
  }
  return r;
}

/// Coefficients of (x0 + u)^j in u.
inline Poly shifted_monomial(double x0, int j) {
  Poly r(static_cast<std::size_t>(j + 1), 0.0);
  for (int m = 0; m <= j; ++m) r[static_cast<std::size_t>(m)] = detail::binomial(j, m) * detail::ipow(x0, j - m);
  return r;
}

/// Integral of p over [lo, hi].
inline double integrate(const Poly& p, double lo, double hi) {
  double a = 0.0, b = 0.0;
  for (std::size_t m = p.size(); m-- > 0;) {
    a = a * lo + p[m] / static_cast<double>(m + 1);
    b = b * hi + p[m] / static_cast<double>(m + 1);
  }
  return b * hi - a * lo;
}

inline Poly derivative(const Poly& p) {
  if (p.size() <= 1) return {};
  Poly r(p.size() - 1);
  for (std::size_t m = 1; m < p.size(); ++m) r[m - 1] = p[m] * static_cast<double>(m);
  return r;
}

/// Integral of p(u) e^{s u} over [0, w] for s != 0, by repeated parts.
inline cplx integrate_exp(const Poly& p, cplx s, double w) {
  cplx at_w = 0.0, at_0 = 0.0;
  Poly d = p;
  cplx spow = s;
  double sign = 1.0;
  while (!d.empty()) {
    at_w += sign * eval(d, w) / spow;
    at_0 += sign * eval(d, 0.0) / spow;
    d = derivative(d);
    spow *= s;
    sign = -sign;
  }
  return std::exp(s * w) * at_w - at_0;
}

}  // namespace poly

namespace detail {

/// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes, weights;
};

inline const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    using G = boost::math::quadrature::gauss<double, 20>;
    GaussRule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.nodes.push_back(a[i]);
      r.weights.push_back(w[i]);
      if (a[i] != 0.0) {
        r.nodes.push_back(-a[i]);
        r.weights.push_back(w[i]);
      }
    }
    return r;
  }();
  return rule;
}

}  // namespace detail

enum class Side { Left, Right };

/// Real vector function, piecewise polynomial on [x_i, x_{i+1}).
///
/// Each piece stores one polynomial per component in the local variable
/// u = x - x_i. The function vanishes outside [x_0, x_P].
class PiecewisePoly {
 public:
  using Poly = poly::Poly;

  PiecewisePoly(std::vector<double> breakpoints, std::vector<std::vector<Poly>> coeffs)
      : breaks_(std::move(breakpoints)), coeffs_(std::move(coeffs)) {
    if (breaks_.size() < 2) throw InputError("PiecewisePoly needs at least two breakpoints");
    if (coeffs_.size() != breaks_.size() - 1) throw InputError("PiecewisePoly: one coefficient row set per interval");
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
      if (!(breaks_[i] < breaks_[i + 1])) throw InputError("PiecewisePoly: breakpoints must increase strictly");
    r_ = static_cast<int>(coeffs_.front().size());
    if (r_ < 1) throw InputError("PiecewisePoly: at least one component");
    for (auto& piece : coeffs_) {
      if (static_cast<int>(piece.size()) != r_) throw DimensionError("PiecewisePoly: component count differs by piece");
      for (auto& p : piece) {
        if (p.empty()) p.push_back(0.0);
        if (static_cast<int>(p.size()) > kMaxPieceDegree + 1)
          throw InputError("PiecewisePoly: piece degree exceeds 8");
      }
    }
  }

  /// Scalar piecewise constant function with the given values on the intervals.
  static PiecewisePoly piecewise_constant(std::vector<double> breakpoints, const std::vector<double>& values) {
    std::vector<std::vector<Poly>> c;
    for (double v : values) c.push_back({Poly{v}});
    return PiecewisePoly(std::move(breakpoints), std::move(c));
  }

  int components() const noexcept { return r_; }
  const std::vector<double>& breakpoints() const noexcept { return breaks_; }
  const std::vector<std::vector<Poly>>& coeffs() const noexcept { return coeffs_; }
  std::size_t pieces() const noexcept { return coeffs_.size(); }
  double lo() const noexcept { return breaks_.front(); }
  double hi() const noexcept { return breaks_.back(); }

  int degree() const {
    int d = 0;
    for (const auto& piece : coeffs_)
      for (const auto& p : piece) d = std::max(d, static_cast<int>(p.size()) - 1);
    return d;
  }

  /// Index of the piece containing x, or -1 outside [x_0, x_P).
  long piece_of(double x) const {
    if (x < breaks_.front() || x >= breaks_.back()) return -1;
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    return static_cast<long>(it - breaks_.begin()) - 1;
  }

  double eval(int comp, double x) const {
    const long i = piece_of(x);
    if (i < 0) return 0.0;
    return poly::eval(coeffs_[static_cast<std::size_t>(i)][static_cast<std::size_t>(comp)],
                      x - breaks_[static_cast<std::size_t>(i)]);
  }

  Eigen::VectorXd eval(double x) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(r_);
    const long i = piece_of(x);
    if (i < 0) return v;
    const double u = x - breaks_[static_cast<std::size_t>(i)];
    for (int c = 0; c < r_; ++c) v(c) = poly::eval(coeffs_[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)], u);
    return v;
  }

  /// Limit from the left at breakpoint index b (0 for b == 0).
  Eigen::VectorXd left_limit(std::size_t b) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(r_);
    if (b == 0) return v;
    const double w = breaks_[b] - breaks_[b - 1];
    for (int c = 0; c < r_; ++c) v(c) = poly::eval(coeffs_[b - 1][static_cast<std::size_t>(c)], w);
    return v;
  }

  /// Value at breakpoint index b (0 for the last breakpoint).
  Eigen::VectorXd right_value(std::size_t b) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(r_);
    if (b + 1 >= breaks_.size()) return v;
    for (int c = 0; c < r_; ++c) v(c) = coeffs_[b][static_cast<std::size_t>(c)][0];
    return v;
  }

  /// Integral of x^j f(x) over [a, b] (infinite bounds allowed).
  Eigen::VectorXd partial_moment(double a, double b, int j) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(r_);
    if (!(a < b)) return acc;
    for (std::size_t i = 0; i < pieces(); ++i) {
      const double lo = std::max(a, breaks_[i]);
      const double hi = std::min(b, breaks_[i + 1]);
      if (!(lo < hi)) continue;
      const Poly weight = poly::shifted_monomial(breaks_[i], j);
      for (int c = 0; c < r_; ++c) {
        const Poly g = poly::multiply(weight, coeffs_[i][static_cast<std::size_t>(c)]);
        acc(c) += poly::integrate(g, lo - breaks_[i], hi - breaks_[i]);
      }
    }
    return acc;
  }

  /// x -> f(x + c).
  PiecewisePoly shifted(double c) const {
    auto b = breaks_;
    for (auto& x : b) x -= c;
    return PiecewisePoly(std::move(b), coeffs_);
  }

  /// x -> f(s x), s > 0.
  PiecewisePoly dilated(double s) const {
    if (!(s > 0.0)) throw InputError("PiecewisePoly::dilated needs a positive factor");
    auto b = breaks_;
    for (auto& x : b) x /= s;
    auto c = coeffs_;
    for (auto& piece : c)
      for (auto& p : piece) {
        double f = 1.0;
        for (auto& coef : p) {
          coef *= f;
          f *= s;
        }
      }
    return PiecewisePoly(std::move(b), std::move(c));
  }

  /// Same function expressed on a superset of breakpoints covering [lo, hi]
  /// (pieces outside the support become zero).
  std::vector<std::vector<Poly>> coefficients_on(const std::vector<double>& grid) const {
    std::vector<std::vector<Poly>> out;
    for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
      const double mid = 0.5 * (grid[g] + grid[g + 1]);
      const long i = piece_of(mid);
      std::vector<Poly> row;
      for (int c = 0; c < r_; ++c) {
        if (i < 0) {
          row.push_back(Poly{0.0});
        } else {
          row.push_back(poly::taylor_shift(coeffs_[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)],
                                           grid[g] - breaks_[static_cast<std::size_t>(i)]));
        }
      }
      out.push_back(std::move(row));
    }
    return out;
  }

  /// Fourier transform derivative: integral of (-ix)^j f(x) e^{-i xi x}.
  Eigen::VectorXcd fourier(double xi, int j) const {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(r_);
    if (xi == 0.0) {
      return partial_moment(-kInf, kInf, j).cast<cplx>() * detail::minus_i_pow(j);
    }
    const cplx s(0.0, -xi);
    for (std::size_t i = 0; i < pieces(); ++i) {
      const Poly weight = poly::shifted_monomial(breaks_[i], j);
      const cplx phase = std::exp(s * breaks_[i]);
      for (int c = 0; c < r_; ++c) {
        const Poly g = poly::multiply(weight, coeffs_[i][static_cast<std::size_t>(c)]);
        acc(c) += phase * poly::integrate_exp(g, s, breaks_[i + 1] - breaks_[i]);
      }
    }
    return acc * detail::minus_i_pow(j);
  }

  /// Largest jump over all breakpoints, including the support ends.
  double max_jump() const {
    double m = 0.0;
    for (std::size_t b = 0; b < breaks_.size(); ++b)
      m = std::max(m, (right_value(b) - left_limit(b)).cwiseAbs().maxCoeff());
    return m;
  }

  /// Minimum over components, sampled densely on each piece.
  double min_value(int samples_per_piece = 64) const {
    double m = 0.0;
    for (std::size_t i = 0; i < pieces(); ++i) {
      const double w = breaks_[i + 1] - breaks_[i];
      for (int c = 0; c < r_; ++c)
        for (int s = 0; s <= samples_per_piece; ++s)
          m = std::min(m, poly::eval(coeffs_[i][static_cast<std::size_t>(c)], w * s / samples_per_piece));
    }
    return m;
  }

 private:
  std::vector<double> breaks_;
  std::vector<std::vector<Poly>> coeffs_;
  int r_ = 1;
};

/// sum_i M_i f_i for matrices M_i (s x r_i); breakpoints are merged.
inline PiecewisePoly linear_combination(const std::vector<std::pair<Eigen::MatrixXd, PiecewisePoly>>& terms) {
  if (terms.empty()) throw InputError("linear_combination: no terms");
  const long s = terms.front().first.rows();
  std::vector<double> grid;
  for (const auto& [m, f] : terms) {
    if (m.rows() != s || m.cols() != f.components())
      throw DimensionError("linear_combination: coefficient matrix shape does not match its function");
    grid.insert(grid.end(), f.breakpoints().begin(), f.breakpoints().end());
  }
  std::sort(grid.begin(), grid.end());
  std::vector<double> merged;
  for (double x : grid)
    if (merged.empty() || x - merged.back() > 1e-13 * std::max(1.0, std::abs(x))) merged.push_back(x);
  std::vector<std::vector<PiecewisePoly::Poly>> out(merged.size() - 1,
                                                    std::vector<PiecewisePoly::Poly>(static_cast<std::size_t>(s)));
  for (const auto& [m, f] : terms) {
    const auto local = f.coefficients_on(merged);
    for (std::size_t g = 0; g < local.size(); ++g)
      for (long row = 0; row < s; ++row)
        for (int c = 0; c < f.components(); ++c) {
          const double w = m(row, c);
          if (w == 0.0) continue;
          auto& dst = out[g][static_cast<std::size_t>(row)];
          const auto& src = local[g][static_cast<std::size_t>(c)];
          if (dst.size() < src.size()) dst.resize(src.size(), 0.0);
          for (std::size_t q = 0; q < src.size(); ++q) dst[q] += w * src[q];
        }
  }
  return PiecewisePoly(std::move(merged), std::move(out));
}

/// B-spline of order m on [0, m]: B_1 = chi_(0,1], B_m = B_{m-1} * B_1.
inline PiecewisePoly bspline(int m) {
  if (m < 1 || m > 9) throw InputError("bspline: order must lie in [1, 9]");
  std::vector<PiecewisePoly::Poly> pieces{{1.0}};  // B_1 on [0, 1)
  for (int order = 2; order <= m; ++order) {
    // F = antiderivative of B_{order-1}; F(j + u) = C_j + int_0^u p_j.
    const int prev = order - 1;
    std::vector<PiecewisePoly::Poly> anti(static_cast<std::size_t>(prev));
    std::vector<double> base(static_cast<std::size_t>(prev + 1), 0.0);
    for (int j = 0; j < prev; ++j) {
      const auto& p = pieces[static_cast<std::size_t>(j)];
      PiecewisePoly::Poly a(p.size() + 1, 0.0);
      for (std::size_t q = 0; q < p.size(); ++q) a[q + 1] = p[q] / static_cast<double>(q + 1);
      a[0] = base[static_cast<std::size_t>(j)];
      base[static_cast<std::size_t>(j + 1)] = poly::eval(a, 1.0);
      anti[static_cast<std::size_t>(j)] = std::move(a);
    }
    auto F = [&](int j) -> PiecewisePoly::Poly {
      if (j < 0) return {0.0};
      if (j >= prev) return {1.0};
      return anti[static_cast<std::size_t>(j)];
    };
    std::vector<PiecewisePoly::Poly> next;
    for (int j = 0; j < order; ++j) {
      auto hi = F(j);
      const auto lo = F(j - 1);
      if (hi.size() < lo.size()) hi.resize(lo.size(), 0.0);
      for (std::size_t q = 0; q < lo.size(); ++q) hi[q] -= lo[q];
      next.push_back(std::move(hi));
    }
    pieces = std::move(next);
  }
  std::vector<double> breaks;
  std::vector<std::vector<PiecewisePoly::Poly>> coeffs;
  for (int j = 0; j <= m; ++j) breaks.push_back(j);
  for (auto& p : pieces) coeffs.push_back({p});
  return PiecewisePoly(std::move(breaks), std::move(coeffs));
}

/// Samples of a real vector function at origin + i 2^{-level}, i = 0..n-1.
/// The function vanishes outside [origin, origin + (n-1) 2^{-level}] and is
/// linearly interpolated between samples.
class SampledFunction {
 public:
  SampledFunction(int level, double origin, std::vector<std::vector<double>> values)
      : level_(level), origin_(origin), values_(std::move(values)), cache_(std::make_shared<Cache>()) {
    if (level_ < 0 || level_ > kMaxLevel) throw InputError("SampledFunction: level must lie in [0, 16]");
    if (values_.empty() || values_.front().size() < 2) throw InputError("SampledFunction: need samples");
    for (const auto& v : values_)
      if (v.size() != values_.front().size()) throw DimensionError("SampledFunction: components differ in length");
    step_ = std::ldexp(1.0, -level_);
  }

  int components() const noexcept { return static_cast<int>(values_.size()); }
  int level() const noexcept { return level_; }
  double step() const noexcept { return step_; }
  double origin() const noexcept { return origin_; }
  std::size_t size() const noexcept { return values_.front().size(); }
  double x(std::size_t i) const noexcept { return origin_ + static_cast<double>(i) * step_; }
  double lo() const noexcept { return origin_; }
  double hi() const noexcept { return x(size() - 1); }
  const std::vector<double>& values(int comp) const { return values_[static_cast<std::size_t>(comp)]; }
  const std::vector<std::vector<double>>& all_values() const noexcept { return values_; }

  /// Grid coordinate of x, snapped to an integer within 1e-9.
  double position(double x) const {
    const double pos = (x - origin_) / step_;
    const double r = std::round(pos);
    return std::abs(pos - r) < 1e-9 ? r : pos;
  }

  double eval(int comp, double x) const {
    const double pos = position(x);
    const double last = static_cast<double>(size() - 1);
    if (pos < 0.0 || pos > last) return 0.0;
    const auto& v = values_[static_cast<std::size_t>(comp)];
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double t = pos - static_cast<double>(i);
    if (t == 0.0 || i + 1 >= size()) return v[i];
    return v[i] + t * (v[i + 1] - v[i]);
  }

  Eigen::VectorXd eval(double x) const {
    Eigen::VectorXd out(components());
    for (int c = 0; c < components(); ++c) out(c) = eval(c, x);
    return out;
  }

  /// Integral of x^j f over [a, b]: trapezoid rule on the grid, extended to
  /// partial cells by integrating the linear interpolant of x^j f.
  Eigen::VectorXd partial_moment(double a, double b, int j) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(components());
    const double last = static_cast<double>(size() - 1);
    const double pa = std::max(0.0, a == -kInf ? 0.0 : position(a));
    const double pb = std::min(last, b == kInf ? last : position(b));
    if (!(pa < pb)) return acc;
    if (j == 0) {
      for (int c = 0; c < components(); ++c) acc(c) = cumulative(c, pb) - cumulative(c, pa);
      return acc;
    }
    for (int c = 0; c < components(); ++c) {
      const auto& v = values_[static_cast<std::size_t>(c)];
      auto g = [&](std::size_t i) { return detail::ipow(x(i), j) * v[i]; };
      auto cell_part = [&](std::size_t i, double t0, double t1) {
        // integral over [x_i + t0 h, x_i + t1 h] of the linear interpolant of g
        const double g0 = g(i), g1 = g(i + 1);
        const double q0 = g0 + t0 * (g1 - g0), q1 = g0 + t1 * (g1 - g0);
        return 0.5 * (q0 + q1) * (t1 - t0) * step_;
      };
      const auto ia = static_cast<std::size_t>(std::floor(pa));
      const auto ib = static_cast<std::size_t>(std::floor(pb));
      double s = 0.0;
      if (ia == ib) {
        s = cell_part(ia, pa - ia, pb - ia);
      } else {
        s += cell_part(ia, pa - ia, 1.0);
        for (std::size_t i = ia + 1; i < ib; ++i) s += 0.5 * (g(i) + g(i + 1)) * step_;
        if (pb > static_cast<double>(ib)) s += cell_part(ib, 0.0, pb - ib);
      }
      acc(c) = s;
    }
    return acc;
  }

  /// x -> f(x + c).
  SampledFunction shifted(double c) const {
    SampledFunction out = *this;
    out.origin_ = origin_ - c;
    return out;
  }

  double max_jump() const {
    double m = 0.0;
    for (const auto& v : values_) {
      m = std::max({m, std::abs(v.front()), std::abs(v.back())});
      for (std::size_t i = 0; i + 1 < v.size(); ++i) m = std::max(m, std::abs(v[i + 1] - v[i]));
    }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values_)
      for (double y : v) m = std::max(m, std::abs(y));
    return m;
  }

  double min_value() const {
    double m = 0.0;
    for (const auto& v : values_)
      for (double y : v) m = std::min(m, y);
    return m;
  }

 private:
  struct Cache {
    std::once_flag once;
    std::vector<std::vector<double>> cum;  // trapezoid integral from origin to x_i
  };

  double cumulative(int comp, double pos) const {
    std::call_once(cache_->once, [this] {
      cache_->cum.resize(values_.size());
      for (std::size_t c = 0; c < values_.size(); ++c) {
        const auto& v = values_[c];
        auto& out = cache_->cum[c];
        out.assign(v.size(), 0.0);
        for (std::size_t i = 1; i < v.size(); ++i) out[i] = out[i - 1] + 0.5 * (v[i - 1] + v[i]) * step_;
      }
    });
    const auto& v = values_[static_cast<std::size_t>(comp)];
    const auto& cum = cache_->cum[static_cast<std::size_t>(comp)];
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double t = pos - static_cast<double>(i);
    if (t == 0.0 || i + 1 >= v.size()) return cum[std::min(i, v.size() - 1)];
    const double q1 = v[i] + t * (v[i + 1] - v[i]);
    return cum[i] + 0.5 * (v[i] + q1) * t * step_;
  }

  int level_;
  double origin_;
  double step_;
  std::vector<std::vector<double>> values_;
  std::shared_ptr<Cache> cache_;
};

struct CascadeOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
};

/// Fixed-point samples of phi = 2 sum_k a(k) phi(2 . - k) on the dyadic grid
/// of the given level over [first, last] index of the mask, scaled so that
/// the grid integral of phi matches `normalization` (= phi^(0)).
inline SampledFunction cascade(const MatrixSeq& mask, const Eigen::VectorXd& normalization, int level,
                               const CascadeOptions& opts = {}) {
  if (level < 0 || level > kMaxLevel) throw InputError("cascade: level must lie in [0, 16]");
  if (mask.is_zero()) throw PreconditionError("cascade: zero mask");
  if (mask.rows() != mask.cols()) throw DimensionError("cascade: mask entries must be square");
  const long r = mask.rows();
  if (normalization.size() != r) throw DimensionError("cascade: normalization length differs from mask size");
  if (mask.max_imag() > 1e-12) throw PreconditionError("cascade: complex masks are not supported");
  const Eigen::VectorXcd nc = normalization.cast<cplx>();
  const double eig_res = (mask.symbol(0.0) * nc - nc).cwiseAbs().maxCoeff();
  if (eig_res > 1e-10) {
    std::ostringstream os;
    os << "cascade: normalization is not a 1-eigenvector of a^(0) (residual " << eig_res << ")";
    throw PreconditionError(os.str());
  }
  const long lo = mask.offset();
  const long hi = std::max(mask.last(), lo + 1);
  const long scale = 1L << level;
  const auto n = static_cast<std::size_t>((hi - lo) * scale + 1);
  const double h = std::ldexp(1.0, -level);

  std::vector<Eigen::MatrixXd> taps;
  for (long k = mask.offset(); k <= mask.last(); ++k) taps.push_back(2.0 * mask.at(k).real());

  // Start from the box chi_[lo, lo+1) times the normalization vector.
  std::vector<std::vector<double>> v(static_cast<std::size_t>(r), std::vector<double>(n, 0.0));
  for (long c = 0; c < r; ++c)
    for (std::size_t i = 0; i < static_cast<std::size_t>(scale); ++i) v[static_cast<std::size_t>(c)][i] = normalization(c);

  double diff = kInf;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(r), std::vector<double>(n, 0.0));
    for (std::size_t t = 0; t < taps.size(); ++t) {
      const long k = mask.offset() + static_cast<long>(t);
      const long shift = (lo - k) * scale;
      for (std::size_t i = 0; i < n; ++i) {
        const long src = 2 * static_cast<long>(i) + shift;
        if (src < 0 || src >= static_cast<long>(n)) continue;
        for (long c = 0; c < r; ++c)
          for (long d = 0; d < r; ++d)
            w[static_cast<std::size_t>(c)][i] += taps[t](c, d) * v[static_cast<std::size_t>(d)][static_cast<std::size_t>(src)];
      }
    }
    diff = 0.0;
    for (long c = 0; c < r; ++c)
      for (std::size_t i = 0; i < n; ++i)
        diff = std::max(diff, std::abs(w[static_cast<std::size_t>(c)][i] - v[static_cast<std::size_t>(c)][i]));
    v = std::move(w);
    if (diff < opts.tolerance) break;
  }
  if (!(diff < opts.tolerance)) {
    std::ostringstream os;
    os << "cascade: no convergence after " << opts.max_iterations << " iterations (last sup-difference " << diff
       << ")";
    throw ConvergenceError(os.str(), diff);
  }
  Eigen::VectorXd integral(r);
  for (long c = 0; c < r; ++c) {
    double s = 0.0;
    for (double y : v[static_cast<std::size_t>(c)]) s += y;
    integral(c) = s * h;
  }
  const double denom = integral.squaredNorm();
  if (denom == 0.0) throw ConvergenceError("cascade: iteration collapsed to zero", diff);
  const double scale_factor = integral.dot(normalization) / denom;
  for (auto& comp : v)
    for (auto& y : comp) y *= scale_factor;
  return SampledFunction(level, static_cast<double>(lo), std::move(v));
}

/// Refinable vector function given by its mask; samples are computed on
/// first use and shared between copies.
class RefinableFunction {
 public:
  RefinableFunction(MatrixSeq mask, Eigen::VectorXd normalization, int level, CascadeOptions opts = {})
      : mask_(std::move(mask)), normalization_(std::move(normalization)), level_(level), opts_(opts),
        cache_(std::make_shared<Cache>()) {
    if (level_ < 0 || level_ > kMaxLevel) throw InputError("RefinableFunction: level must lie in [0, 16]");
    if (mask_.rows() != mask_.cols()) throw DimensionError("RefinableFunction: mask must be square");
    if (normalization_.size() != mask_.rows())
      throw DimensionError("RefinableFunction: normalization length differs from mask size");
  }

  /// Scalar refinable function with phi^(0) = 1.
  static RefinableFunction scalar(const MatrixSeq& mask, int level) {
    return RefinableFunction(mask, Eigen::VectorXd::Ones(1), level);
  }

  const MatrixSeq& mask() const noexcept { return mask_; }
  const Eigen::VectorXd& normalization() const noexcept { return normalization_; }
  int level() const noexcept { return level_; }
  int components() const noexcept { return static_cast<int>(mask_.rows()); }

  const SampledFunction& samples() const {
    std::call_once(cache_->once, [this] { cache_->samples.emplace(cascade(mask_, normalization_, level_, opts_)); });
    return *cache_->samples;
  }

  /// sup over the grid of |phi(x) - 2 sum_k a(k) phi(2x - k)|.
  double refinement_residual() const {
    const auto& s = samples();
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = s.x(i);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(components());
      for (long k = mask_.offset(); k <= mask_.last(); ++k) rhs += 2.0 * mask_.at(k).real() * s.eval(2.0 * x - k);
      worst = std::max(worst, (s.eval(x) - rhs).cwiseAbs().maxCoeff());
    }
    return worst;
  }

 private:
  struct Cache {
    std::once_flag once;
    std::optional<SampledFunction> samples;
  };
  MatrixSeq mask_;
  Eigen::VectorXd normalization_;
  int level_;
  CascadeOptions opts_;
  std::shared_ptr<Cache> cache_;
};

using FunctionHandle = std::variant<PiecewisePoly, RefinableFunction, SampledFunction>;

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// PiecewisePoly or the sampled view of a function.
template <class F>
decltype(auto) visit_concrete(const FunctionHandle& f, F&& fn) {
  return std::visit(overloaded{[&](const PiecewisePoly& p) -> decltype(auto) { return fn(p); },
                               [&](const RefinableFunction& r) -> decltype(auto) { return fn(r.samples()); },
                               [&](const SampledFunction& s) -> decltype(auto) { return fn(s); }},
                    f);
}
}  // namespace detail

inline int components(const FunctionHandle& f) {
  return std::visit([](const auto& g) { return g.components(); }, f);
}

inline bool is_exact(const FunctionHandle& f) { return std::holds_alternative<PiecewisePoly>(f); }

/// Grid level of a sampled function, nullopt for piecewise polynomials.
inline std::optional<int> grid_level(const FunctionHandle& f) {
  return std::visit(detail::overloaded{[](const PiecewisePoly&) -> std::optional<int> { return std::nullopt; },
                                       [](const RefinableFunction& r) -> std::optional<int> { return r.level(); },
                                       [](const SampledFunction& s) -> std::optional<int> { return s.level(); }},
                    f);
}

/// Closed support interval [lo, hi].
inline std::pair<double, double> support(const FunctionHandle& f) {
  return std::visit(detail::overloaded{
                        [](const PiecewisePoly& p) { return std::pair{p.lo(), p.hi()}; },
                        [](const RefinableFunction& r) {
                          return std::pair{static_cast<double>(r.mask().offset()),
                                           static_cast<double>(std::max(r.mask().last(), r.mask().offset() + 1))};
                        },
                        [](const SampledFunction& s) { return std::pair{s.lo(), s.hi()}; }},
                    f);
}

inline Eigen::VectorXd eval(const FunctionHandle& f, double x) {
  return detail::visit_concrete(f, [x](const auto& g) { return g.eval(x); });
}

inline double eval(const FunctionHandle& f, int comp, double x) {
  return detail::visit_concrete(f, [comp, x](const auto& g) { return g.eval(comp, x); });
}

inline Eigen::VectorXd partial_moment(const FunctionHandle& f, double a, double b, int j) {
  return detail::visit_concrete(f, [=](const auto& g) { return g.partial_moment(a, b, j); });
}

/// integral x^j f(x) dx. Exact for piecewise polynomials; trapezoid on the
/// dyadic grid otherwise (O(4^-L) for smooth pieces, exact for refinable
/// functions up to the order of their sum rules).
inline Eigen::VectorXd moment(const FunctionHandle& f, int j) {
  if (j < 0 || j > 6) throw InputError("moment: order must lie in [0, 6]");
  return partial_moment(f, -kInf, kInf, j);
}

/// j-th derivative of f^ at the origin: (-i)^j moment(f, j).
inline Eigen::VectorXcd fhat_deriv0(const FunctionHandle& f, int j) {
  return moment(f, j).cast<cplx>() * detail::minus_i_pow(j);
}

/// integral of f over (-inf, k] (Left) or [k, inf) (Right).
inline Eigen::VectorXd halfline_integral(const FunctionHandle& f, double k, Side side) {
  return side == Side::Left ? partial_moment(f, -kInf, k, 0) : partial_moment(f, k, kInf, 0);
}

/// x -> f(x + c). Refinable functions become their shifted samples.
inline FunctionHandle shift(const FunctionHandle& f, double c) {
  return std::visit(detail::overloaded{[c](const PiecewisePoly& p) -> FunctionHandle { return p.shifted(c); },
                                       [c](const RefinableFunction& r) -> FunctionHandle {
                                         return r.samples().shifted(c);
                                       },
                                       [c](const SampledFunction& s) -> FunctionHandle { return s.shifted(c); }},
                    f);
}

/// True when f has no jump larger than `tol` (relative to max |f| for
/// sampled functions, absolute for piecewise polynomials).
inline bool is_continuous(const FunctionHandle& f, double tol = 0.05) {
  return std::visit(detail::overloaded{[](const PiecewisePoly& p) { return p.max_jump() < 1e-10; },
                                       [tol](const RefinableFunction& r) {
                                         const auto& s = r.samples();
                                         return s.max_jump() < tol * s.max_abs();
                                       },
                                       [tol](const SampledFunction& s) { return s.max_jump() < tol * s.max_abs(); }},
                    f);
}

inline double min_value(const FunctionHandle& f) {
  return detail::visit_concrete(f, [](const auto& g) { return g.min_value(); });
}

/// integral g(y) f(y) dy for a scalar weight g with known discontinuities.
/// Piecewise polynomials use 20-point Gauss-Legendre on every piece split at
/// the breaks of g; sampled functions use the trapezoid rule on their grid.
inline Eigen::VectorXd integrate_against(const FunctionHandle& f, const std::function<double(double)>& g,
                                         const std::vector<double>& g_breaks = {}) {
  return std::visit(
      detail::overloaded{
          [&](const PiecewisePoly& p) {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.components());
            const auto& rule = detail::gauss_rule();
            for (std::size_t i = 0; i < p.pieces(); ++i) {
              std::vector<double> cuts{p.breakpoints()[i], p.breakpoints()[i + 1]};
              for (double b : g_breaks)
                if (b > cuts.front() && b < cuts.back()) cuts.push_back(b);
              std::sort(cuts.begin(), cuts.end());
              for (std::size_t q = 0; q + 1 < cuts.size(); ++q) {
                const double a = cuts[q], b = cuts[q + 1];
                if (!(b > a)) continue;
                const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
                for (std::size_t node = 0; node < rule.nodes.size(); ++node) {
                  const double y = mid + half * rule.nodes[node];
                  // evaluate inside the piece explicitly to avoid boundary lookup
                  const double gy = g(y);
                  if (gy == 0.0) continue;
                  const double u = y - p.breakpoints()[i];
                  for (int c = 0; c < p.components(); ++c)
                    acc(c) += half * rule.weights[node] * gy * poly::eval(p.coeffs()[i][static_cast<std::size_t>(c)], u);
                }
              }
            }
            return acc;
          },
          [&](const RefinableFunction& r) { return integrate_against(FunctionHandle(r.samples()), g, g_breaks); },
          [&](const SampledFunction& s) {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.components());
            for (std::size_t i = 0; i < s.size(); ++i) {
              const double gy = g(s.x(i));
              if (gy == 0.0) continue;
              const double w = (i == 0 || i + 1 == s.size()) ? 0.5 : 1.0;
              for (int c = 0; c < s.components(); ++c) acc(c) += w * gy * s.values(c)[i];
            }
            return Eigen::VectorXd(acc * s.step());
          }},
      f);
}

/// <f, g(. - shift)> = integral f(x) g(x - shift)^T dx, an r_f x r_g matrix.
/// Exact when both are piecewise polynomials; otherwise trapezoid quadrature
/// on the finer of the two grids.
inline Eigen::MatrixXd inner_product(const FunctionHandle& f, const FunctionHandle& g, double shift = 0.0) {
  const int rf = components(f), rg = components(g);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rf, rg);
  if (is_exact(f) && is_exact(g)) {
    const auto& pf = std::get<PiecewisePoly>(f);
    const auto gs = std::get<PiecewisePoly>(g).shifted(-shift);
    std::vector<double> grid = pf.breakpoints();
    grid.insert(grid.end(), gs.breakpoints().begin(), gs.breakpoints().end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto cf = pf.coefficients_on(grid);
    const auto cg = gs.coefficients_on(grid);
    for (std::size_t q = 0; q + 1 < grid.size(); ++q)
      for (int a = 0; a < rf; ++a)
        for (int b = 0; b < rg; ++b)
          out(a, b) += poly::integrate(poly::multiply(cf[q][static_cast<std::size_t>(a)], cg[q][static_cast<std::size_t>(b)]),
                                       0.0, grid[q + 1] - grid[q]);
    return out;
  }
  const int level = std::max(grid_level(f).value_or(0), grid_level(g).value_or(0));
  const auto [flo, fhi] = support(f);
  const auto [glo, ghi] = support(g);
  const double lo = std::max(flo, glo + shift), hi = std::min(fhi, ghi + shift);
  if (!(lo < hi)) return out;
  const double h = std::ldexp(1.0, -level);
  const double start = std::floor(lo / h) * h;
  const auto n = static_cast<std::size_t>(std::ceil((hi - start) / h)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = start + static_cast<double>(i) * h;
    const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    out += w * eval(f, x) * eval(g, x - shift).transpose();
  }
  return out;
}

/// g(x) = sum_i M_i f(s x - k_i): new function in the same representation
/// (piecewise polynomial, or samples at the level of f).
inline FunctionHandle dilate_combine(const FunctionHandle& f, double s,
                                     const std::vector<std::pair<Eigen::MatrixXd, double>>& terms) {
  if (terms.empty()) throw InputError("dilate_combine: no terms");
  if (is_exact(f)) {
    const auto& p = std::get<PiecewisePoly>(f);
    std::vector<std::pair<Eigen::MatrixXd, PiecewisePoly>> parts;
    for (const auto& [m, k] : terms) parts.emplace_back(m, p.dilated(s).shifted(-k / s));
    return linear_combination(parts);
  }
  const int level = *grid_level(f);
  const double h = std::ldexp(1.0, -level);
  const auto [flo, fhi] = support(f);
  double lo = kInf, hi = -kInf;
  for (const auto& [m, k] : terms) {
    lo = std::min(lo, (flo + k) / s);
    hi = std::max(hi, (fhi + k) / s);
  }
  const double start = std::floor(lo / h + 1e-9) * h;
  const auto n = static_cast<std::size_t>(std::ceil((hi - start) / h - 1e-9)) + 1;
  const long rows = terms.front().first.rows();
  std::vector<std::vector<double>> vals(static_cast<std::size_t>(rows), std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = start + static_cast<double>(i) * h;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(rows);
    for (const auto& [m, k] : terms) acc += m * eval(f, s * x - k);
    for (long c = 0; c < rows; ++c) vals[static_cast<std::size_t>(c)][i] = acc(c);
  }
  return SampledFunction(level, start, std::move(vals));
}

}  // namespace gibbslab

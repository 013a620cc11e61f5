#pragma once

// OEP filter banks, the wavelets they define, vanishing moments and the
// truncated framelet expansions A_n f.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gibbslab/gibbs.hpp"
#include "gibbslab/masks.hpp"

namespace gibbslab {

/// a, a~ are r x r; b, b~ are s x r; theta, theta~ are r x r.
struct FilterBank {
  MatrixSeq a, a_tilde, b, b_tilde, theta, theta_tilde;

  FilterBank(MatrixSeq a_, MatrixSeq a_tilde_, MatrixSeq b_, MatrixSeq b_tilde_, std::optional<MatrixSeq> th = {},
             std::optional<MatrixSeq> th_tilde = {})
      : a(std::move(a_)), a_tilde(std::move(a_tilde_)), b(std::move(b_)), b_tilde(std::move(b_tilde_)),
        theta(th ? *th : MatrixSeq::dirac(a.rows())), theta_tilde(th_tilde ? *th_tilde : MatrixSeq::dirac(a.rows())) {
    const long r = a.rows();
    auto need = [](bool ok, const std::string& what) {
      if (!ok) throw DimensionError("FilterBank: " + what);
    };
    need(a.cols() == r && a_tilde.rows() == r && a_tilde.cols() == r, "a and a~ must be r x r with the same r");
    need(b.cols() == r && b_tilde.cols() == r, "b and b~ must have r columns");
    need(b.rows() == b_tilde.rows(), "b and b~ must have the same number of rows");
    need(theta.rows() == r && theta.cols() == r && theta_tilde.rows() == r && theta_tilde.cols() == r,
         "theta and theta~ must be r x r");
  }

  /// Tight bank: a~ = a, b~ = b.
  static FilterBank tight(MatrixSeq a, MatrixSeq b) { return FilterBank(a, a, b, b); }

  long r() const { return a.rows(); }
  long s() const { return b.rows(); }

  /// Theta^(xi) = theta~^(xi)^T conj(theta^(xi)).
  MatrixSeq Theta() const { return convolve(transpose(theta_tilde), conj_reflect(theta)); }
};

inline FilterBank haar_bank() {
  return FilterBank::tight(haar_mask(), MatrixSeq::scalar(0, std::vector<double>{0.5, -0.5}));
}

/// Tight framelet for B_2: b1^ = (1 - e^{-i xi})^2 / 4, b2^ = (sqrt2/4)(1 - e^{-2 i xi}).
inline FilterBank bspline2_tight_bank() {
  const double q = std::sqrt(2.0) / 4.0;
  MatrixSeq b(0, {CMatrix{{cplx(0.25)}, {cplx(q)}}, CMatrix{{cplx(-0.5)}, {cplx(0.0)}}, CMatrix{{cplx(0.25)}, {cplx(-q)}}});
  return FilterBank::tight(bspline_mask(2), b);
}

inline FilterBank daubechies_bank(int k) {
  const auto a = daubechies_mask(k);
  return FilterBank::tight(a, orthonormal_highpass(a));
}

struct OepCheck {
  double residual0 = 0.0, residual_pi = 0.0;
  bool ok = false;
};

/// Both OEP identities as coefficient sequences:
///   a~^T Theta(2.) conj(a) + b~^T conj(b) - Theta = 0
///   a~^T Theta(2.) conj(a(. + pi)) + b~^T conj(b(. + pi)) = 0
inline OepCheck oep_check(const FilterBank& fb, double tol = 1e-12) {
  const MatrixSeq Th = fb.Theta();
  const MatrixSeq left = convolve(transpose(fb.a_tilde), upsample(Th));
  const MatrixSeq id0 = convolve(left, conj_reflect(fb.a)) + convolve(transpose(fb.b_tilde), conj_reflect(fb.b)) - Th;
  const MatrixSeq idpi =
      convolve(left, conj_reflect(modulate(fb.a))) + convolve(transpose(fb.b_tilde), conj_reflect(modulate(fb.b)));
  OepCheck r;
  r.residual0 = id0.max_abs();
  r.residual_pi = idpi.max_abs();
  r.ok = r.residual0 < tol && r.residual_pi < tol;
  return r;
}

namespace detail {
/// g = 2 sum_k u(k) f(2 . - k) (dilation 2) or sum_k u(k) f(. - k) (dilation 1).
inline FunctionHandle filter_apply(const FunctionHandle& f, const MatrixSeq& u, double dilation) {
  if (u.max_imag() > 1e-12) throw PreconditionError("complex filters are not supported for real functions");
  std::vector<std::pair<Eigen::MatrixXd, double>> terms;
  for (long k = u.offset(); k <= u.last(); ++k) terms.emplace_back(dilation * u.at(k).real(), static_cast<double>(k));
  if (terms.empty()) terms.emplace_back(Eigen::MatrixXd::Zero(u.rows(), u.cols()), 0.0);
  return dilate_combine(f, dilation, terms);
}

/// Moments of psi = 2 sum_k b(k) phi(2 . - k) from moments of phi:
/// int x^j psi = 2^-j sum_k b(k) sum_i C(j, i) k^{j-i} int x^i phi.
inline Eigen::VectorXd filter_moment(const MatrixSeq& b, const std::vector<Eigen::VectorXd>& mu_phi, int j) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(b.rows());
  for (long k = b.offset(); k <= b.last(); ++k)
    for (int i = 0; i <= j; ++i)
      acc += binomial(j, i) * ipow(static_cast<double>(k), j - i) * (b.at(k).real() * mu_phi[static_cast<std::size_t>(i)]);
  return acc * std::ldexp(1.0, -j);
}
}  // namespace detail

struct DualFramelet {
  FunctionHandle phi, phi_tilde, psi, psi_tilde, eta, eta_tilde;
  FilterBank bank;
  std::vector<Eigen::VectorXd> psi_moments, psi_tilde_moments;  // j = 0..6

  QuasiProjectionPair pair() const { return QuasiProjectionPair(phi, phi_tilde); }
  /// (eta, eta~): the pair whose Q_n equals A_n.
  QuasiProjectionPair mathring_pair() const { return QuasiProjectionPair(eta, eta_tilde); }
  QuasiProjectionPair wavelet_pair() const { return QuasiProjectionPair(psi, psi_tilde); }
};

/// psi = 2 sum b(k) phi(2 . - k), psi~ likewise, eta = sum theta(k) phi(. - k),
/// eta~ = sum theta~(k) phi~(. - k). Wavelet moments come from filter sums
/// when phi is sampled and from exact integration otherwise.
inline DualFramelet derive_wavelets(const FilterBank& bank, const FunctionHandle& phi, const FunctionHandle& phi_tilde) {
  if (components(phi) != bank.r() || components(phi_tilde) != bank.r())
    throw DimensionError("derive_wavelets: function components differ from the filter size r");
  DualFramelet df{phi,
                  phi_tilde,
                  detail::filter_apply(phi, bank.b, 2.0),
                  detail::filter_apply(phi_tilde, bank.b_tilde, 2.0),
                  detail::filter_apply(phi, bank.theta, 1.0),
                  detail::filter_apply(phi_tilde, bank.theta_tilde, 1.0),
                  bank,
                  {},
                  {}};
  std::vector<Eigen::VectorXd> mu, mut;
  for (int j = 0; j <= 6; ++j) {
    mu.push_back(moment(phi, j));
    mut.push_back(moment(phi_tilde, j));
  }
  for (int j = 0; j <= 6; ++j) {
    df.psi_moments.push_back(is_exact(df.psi) ? moment(df.psi, j) : detail::filter_moment(bank.b, mu, j));
    df.psi_tilde_moments.push_back(is_exact(df.psi_tilde) ? moment(df.psi_tilde, j)
                                                          : detail::filter_moment(bank.b_tilde, mut, j));
  }
  return df;
}

/// Smallest j with some |moment_j| > tol, taken per component and minimized.
inline int vanishing_moments(const std::vector<Eigen::VectorXd>& moments, double tol = 1e-8) {
  const int comps = static_cast<int>(moments.front().size());
  int vmo = static_cast<int>(moments.size());
  for (int c = 0; c < comps; ++c) {
    int j = 0;
    while (j < static_cast<int>(moments.size()) && std::abs(moments[static_cast<std::size_t>(j)](c)) <= tol) ++j;
    vmo = std::min(vmo, j);
  }
  return vmo;
}

inline int vanishing_moments(const FunctionHandle& psi, int j_max = 6, double tol = 1e-8) {
  std::vector<Eigen::VectorXd> m;
  for (int j = 0; j <= j_max; ++j) m.push_back(moment(psi, j));
  return vanishing_moments(m, tol);
}

/// A_n f = sum_k <f, eta~(. - k)> eta(. - k) + sum_{j<n} sum_k <f, psi~_{j;k}> psi_{j;k}
/// summed directly at the grid points.
inline SampledFunction truncated_expansion(const DualFramelet& df, const Signal& f, int n, const Grid& grid) {
  if (n < 0) throw InputError("truncated_expansion: n must be nonnegative");
  const auto xs = grid.points();
  auto total = project_values(df.mathring_pair(), f, 0, 0.0, xs);
  const auto wp = df.wavelet_pair();
  for (int j = 0; j < n; ++j) {
    const auto w = project_values(wp, f, j, 0.0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) total[i] += w[i];
  }
  return SampledFunction(grid.level, xs.front(), {std::move(total)});
}

namespace detail {
/// sum_k <f, g~_{n;k}> <g_{n;k}, h> for a function pair (g, g~) and signals f, h.
inline double level_bilinear(const QuasiProjectionPair& pair, const Signal& f, const Signal& h, int n) {
  if (f.kind != Signal::Kind::Generic || h.kind != Signal::Kind::Generic || !std::isfinite(f.lo) ||
      !std::isfinite(f.hi) || !std::isfinite(h.lo) || !std::isfinite(h.hi))
    throw InputError("cascade_identity_check: compactly supported generic signals required");
  const double scale = std::ldexp(1.0, n);
  const auto [plo, phi_hi] = support(pair.phi());
  const auto [tlo, thi] = support(pair.phi_tilde());
  const long kmin = static_cast<long>(std::floor(std::max(scale * f.lo - thi, scale * h.lo - phi_hi))) - 1;
  const long kmax = static_cast<long>(std::ceil(std::min(scale * f.hi - tlo, scale * h.hi - plo))) + 1;
  // Swapping roles gives <g_{n;k}, h> as the coefficient of h against g.
  const QuasiProjectionPair rev = pair.swapped();
  double acc = 0.0;
  for (long k = kmin; k <= kmax; ++k) {
    const Eigen::VectorXd cf = signal_coefficient(pair, pair.phi_tilde(), f, n, 0.0, k);
    const Eigen::VectorXd ch = signal_coefficient(rev, rev.phi_tilde(), h, n, 0.0, k);
    acc += cf.dot(ch) / scale;
  }
  return acc;
}
}  // namespace detail

/// Level n-1 scaling + wavelet sums minus the level n scaling sum.
inline double cascade_identity_check(const DualFramelet& df, const Signal& f, const Signal& g, int n) {
  if (n < 1) throw InputError("cascade_identity_check: n must be at least 1");
  const auto mp = df.mathring_pair();
  return std::abs(detail::level_bilinear(mp, f, g, n - 1) + detail::level_bilinear(df.wavelet_pair(), f, g, n - 1) -
                  detail::level_bilinear(mp, f, g, n));
}

enum class FrameletBranch { GibbsEverywhere, NoGibbsAtOrigin, Inconclusive };

inline const char* to_string(FrameletBranch b) {
  switch (b) {
    case FrameletBranch::GibbsEverywhere: return "gibbs-everywhere";
    case FrameletBranch::NoGibbsAtOrigin: return "no-gibbs-at-origin";
    default: return "inconclusive";
  }
}

struct FrameletVerdict {
  int vmo_psi = 0, vmo_psi_tilde = 0;
  FrameletBranch branch = FrameletBranch::Inconclusive;
  cplx bracket;
  bool consequence_ok = true;  // bracket = 0 (gibbs branch) or vmo both 1 (nonnegative branch)
  double R0 = 1.0, L0 = -1.0;
};

inline FrameletVerdict framelet_gibbs_verdict(const DualFramelet& df, int level = 12) {
  FrameletVerdict v;
  v.vmo_psi = vanishing_moments(df.psi_moments);
  v.vmo_psi_tilde = vanishing_moments(df.psi_tilde_moments);
  const auto pair = df.pair();
  v.bracket = bracket_second_deriv(pair).value;
  const auto o = overshoot(pair, 0.0, level);
  v.R0 = o.R;
  v.L0 = o.L;
  if (v.vmo_psi >= 2 && v.vmo_psi_tilde >= 1 && is_continuous(df.phi)) {
    v.branch = FrameletBranch::GibbsEverywhere;
    v.consequence_ok = std::abs(v.bracket) < 1e-6;
  } else if (min_value(df.phi) >= -1e-10 && min_value(df.phi_tilde) >= -1e-10) {
    v.branch = FrameletBranch::NoGibbsAtOrigin;
    v.consequence_ok = v.vmo_psi == 1 && v.vmo_psi_tilde == 1;
  }
  return v;
}

}  // namespace gibbslab

#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace gibbslab;
using Catch::Matchers::WithinAbs;

namespace {

DualFramelet haar_framelet() { return derive_wavelets(haar_bank(), bspline(1), bspline(1)); }
DualFramelet b2_framelet() { return derive_wavelets(bspline2_tight_bank(), bspline(2), bspline(2)); }

const FunctionHandle& d3() {
  static const FunctionHandle f = RefinableFunction::scalar(daubechies_mask(3), 12);
  return f;
}

Signal clipped_sgn() {
  return Signal::generic([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }, {0.0}, -3.0, 3.0);
}

Signal bump() {
  return Signal::generic([](double x) { return std::exp(-2.0 * x * x); }, {}, -4.0, 4.0);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// phi^ as the infinite product of the mask symbol, truncated.
cplx product_fourier(const MatrixSeq& a, double xi) {
  cplx p = 1.0;
  for (int j = 1; j <= 40; ++j) p *= a.symbol(std::ldexp(xi, -j))(0, 0);
  return p;
}

}  // namespace

TEST_CASE("Haar bank passes the OEP check at rounding level") {
  const auto r = oep_check(haar_bank());
  CHECK(r.ok);
  CHECK(r.residual0 < 1e-15);
  CHECK(r.residual_pi < 1e-15);
}

TEST_CASE("other known banks pass") {
  CHECK(oep_check(bspline2_tight_bank()).ok);
  for (int k = 2; k <= 5; ++k) {
    const auto r = oep_check(daubechies_bank(k));
    CHECK(r.residual0 < 1e-13);
    CHECK(r.residual_pi < 1e-13);
  }
}

TEST_CASE("scaled high-pass is detected") {
  auto fb = haar_bank();
  fb.b = fb.b * cplx(1.1);
  fb.b_tilde = fb.b_tilde * cplx(1.1);
  const auto r = oep_check(fb);
  CHECK_FALSE(r.ok);
  // (1.21 - 1) |b^|^2, whose largest coefficient is 0.21 * 1/2
  CHECK_THAT(r.residual0, WithinAbs(0.21 * 0.5, 1e-12));
}

TEST_CASE("delta filters fail the shifted identity") {
  const FilterBank fb(MatrixSeq::dirac(), MatrixSeq::dirac(), MatrixSeq(1, 1), MatrixSeq(1, 1));
  const auto r = oep_check(fb);
  CHECK_FALSE(r.ok);
  CHECK(r.residual_pi > 0.5);
}

TEST_CASE("OEP check against sampled symbols") {
  // independent route: evaluate both identities on a xi grid from the symbols
  for (const auto& fb : {haar_bank(), bspline2_tight_bank(), daubechies_bank(3)}) {
    double worst = 0;
    for (int i = 0; i < 64; ++i) {
      const double xi = 2 * kPi * i / 64.0;
      const CMatrix A = fb.a.symbol(xi), At = fb.a_tilde.symbol(xi), Ap = fb.a.symbol(xi + kPi);
      const CMatrix B = fb.b.symbol(xi), Bt = fb.b_tilde.symbol(xi), Bp = fb.b.symbol(xi + kPi);
      const CMatrix e0 = At.transpose() * A.conjugate() + Bt.transpose() * B.conjugate() - CMatrix::Identity(1, 1);
      const CMatrix ep = At.transpose() * Ap.conjugate() + Bt.transpose() * Bp.conjugate();
      worst = std::max({worst, e0.cwiseAbs().maxCoeff(), ep.cwiseAbs().maxCoeff()});
    }
    CHECK(worst < 1e-13);
  }
}

TEST_CASE("filter bank dimension checks") {
  CHECK_THROWS_AS(FilterBank(MatrixSeq::dirac(2), MatrixSeq::dirac(2), MatrixSeq(1, 1), MatrixSeq(1, 1)),
                  DimensionError);
  const auto fb = bspline2_tight_bank();
  CHECK(fb.r() == 1);
  CHECK(fb.s() == 2);
}

TEST_CASE("Haar wavelet") {
  const auto df = haar_framelet();
  for (double x : {0.1, 0.4, 0.6, 0.9}) CHECK_THAT(eval(df.psi, 0, x), WithinAbs(x < 0.5 ? 1.0 : -1.0, 1e-15));
  CHECK_THAT(eval(df.psi, 0, 1.2), WithinAbs(0.0, 1e-15));
  CHECK(vanishing_moments(df.psi) == 1);
  CHECK_THAT(moment(df.psi, 1)(0), WithinAbs(-0.25, 1e-15));
}

TEST_CASE("B2 tight framelets") {
  const auto df = b2_framelet();
  CHECK(components(df.psi) == 2);
  const auto [lo, hi] = support(df.psi);
  CHECK(lo >= 0.0);
  CHECK(hi <= 2.0);
  // psi_1 = 2 sum_k b1(k) B2(2x - k), checked against the Cox-de Boor oracle
  const double q = std::sqrt(2.0) / 4.0;
  for (double x : {0.2, 0.5, 0.9, 1.3, 1.8}) {
    const double p1 = 2 * (0.25 * oracle::bspline_value(2, 2 * x) - 0.5 * oracle::bspline_value(2, 2 * x - 1) +
                           0.25 * oracle::bspline_value(2, 2 * x - 2));
    const double p2 = 2 * q * (oracle::bspline_value(2, 2 * x) - oracle::bspline_value(2, 2 * x - 2));
    CHECK_THAT(eval(df.psi, 0, x), WithinAbs(p1, 1e-14));
    CHECK_THAT(eval(df.psi, 1, x), WithinAbs(p2, 1e-14));
  }
  // the (1 - e^{-i xi})^2 generator on its own
  const FunctionHandle psi1 = detail::filter_apply(bspline(2), MatrixSeq::scalar(0, std::vector<double>{0.25, -0.5, 0.25}), 2.0);
  CHECK(vanishing_moments(psi1) == 2);
  CHECK(vanishing_moments(df.psi) == 1);
}

TEST_CASE("theta = delta gives eta = phi") {
  const auto df = b2_framelet();
  for (double x : {0.3, 1.0, 1.6}) CHECK(eval(df.eta, 0, x) == eval(df.phi, 0, x));
}

TEST_CASE("vanishing moments of non-wavelets") {
  CHECK(vanishing_moments(bspline(2)) == 0);
}

TEST_CASE("refinement relation for the sampled D3 wavelet") {
  const auto df = derive_wavelets(daubechies_bank(3), d3(), d3());
  // psi^(2 xi) = b^(xi) phi^(xi), with phi^ from the infinite product
  const auto b = daubechies_bank(3).b;
  const auto& s = std::get<SampledFunction>(df.psi);
  for (double xi : {0.7, 2.0, 4.5}) {
    cplx got = 0;
    for (std::size_t i = 0; i < s.size(); ++i) got += s.values(0)[i] * std::exp(cplx(0, -2 * xi * s.x(i)));
    got *= s.step();
    CHECK(std::abs(got - b.symbol(xi)(0, 0) * product_fourier(daubechies_mask(3), xi)) < 1e-5);
  }
  CHECK(vanishing_moments(df.psi_moments) == 3);
}

TEST_CASE("A_n equals Q_n") {
  const auto xs = Grid{9, -3, 3}.points();
  for (const auto& df : {haar_framelet(), b2_framelet()})
    for (const auto& f : {clipped_sgn(), bump()})
      for (int n : {0, 1, 3, 5}) {
        const auto a = truncated_expansion(df, f, n, Grid{9, -3, 3});
        const auto q = project_values(df.pair(), f, n, 0.0, xs);
        CHECK(sup_diff(a.values(0), q) < 1e-9);
      }
}

TEST_CASE("A_n reproduces polynomials below vmo(psi~)") {
  const auto df = derive_wavelets(daubechies_bank(3), d3(), d3());
  const Grid g{6, -1, 1};
  const auto xs = g.points();
  for (int j = 0; j < 3; ++j) {
    const auto f = Signal::generic([j](double x) { return detail::ipow(x, j); }, {}, -8.0, 8.0);
    const auto a = truncated_expansion(df, f, 2, g);
    double worst = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(a.values(0)[i] - detail::ipow(xs[i], j)));
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("cascade identity") {
  const auto df = haar_framelet();
  const auto g1 = Signal::generic([](double x) { return std::exp(-x * x); }, {}, -4.0, 4.0);
  const auto g2 = Signal::generic([](double x) { return std::exp(-(x - 0.3) * (x - 0.3) * 3); }, {}, -4.0, 4.0);
  CHECK(cascade_identity_check(df, g1, g2, 1) < 1e-9);
  CHECK(cascade_identity_check(df, g1, g2, 3) < 1e-9);
  const auto phi = Signal::from_function(df.phi);
  CHECK(cascade_identity_check(df, phi, phi, 1) < 1e-9);
  const auto zero = Signal::generic([](double) { return 0.0; }, {}, -1.0, 1.0);
  CHECK(cascade_identity_check(df, zero, g2, 1) == 0.0);
  CHECK(cascade_identity_check(b2_framelet(), g1, g2, 2) < 1e-9);
  CHECK_THROWS_AS(cascade_identity_check(df, Signal::sign(), g2, 1), InputError);
}

TEST_CASE("framelet verdicts") {
  const auto haar = framelet_gibbs_verdict(haar_framelet());
  CHECK(haar.branch == FrameletBranch::NoGibbsAtOrigin);
  CHECK(haar.vmo_psi == 1);
  CHECK(haar.vmo_psi_tilde == 1);
  CHECK(haar.consequence_ok);

  const auto dv = framelet_gibbs_verdict(derive_wavelets(daubechies_bank(3), d3(), d3()));
  CHECK(dv.branch == FrameletBranch::GibbsEverywhere);
  CHECK(dv.vmo_psi == 3);
  CHECK(dv.consequence_ok);
  CHECK(dv.R0 > 1.01);

  // vmo(psi) = 1 against vmo(psi~) = 3 lies outside every branch
  auto mixed = derive_wavelets(daubechies_bank(3), d3(), d3());
  const auto hw = haar_framelet();
  mixed.psi = hw.psi;
  mixed.psi_moments = hw.psi_moments;
  const auto mv = framelet_gibbs_verdict(mixed);
  CHECK(mv.vmo_psi == 1);
  CHECK(mv.vmo_psi_tilde == 3);
  CHECK(mv.branch == FrameletBranch::Inconclusive);
  CHECK(mv.R0 > 1.0);
}

TEST_CASE("bracket vanishes to third order for D3") {
  // |phi^|^2 - 1 from the infinite product, fitted log-log slope near 0
  const auto a = daubechies_mask(3);
  std::vector<double> lx, ly;
  for (double xi : {0.05, 0.1, 0.2, 0.4}) {
    lx.push_back(std::log(xi));
    ly.push_back(std::log(std::abs(std::norm(product_fourier(a, xi)) - 1.0)));
  }
  const double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
  CHECK(slope >= 2.7);
}

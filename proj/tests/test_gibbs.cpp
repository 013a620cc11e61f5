#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace gibbslab;
using Catch::Matchers::WithinAbs;

namespace {

QuasiProjectionPair spline_pair(int m) { return QuasiProjectionPair(bspline(m), bspline(m)); }

QuasiProjectionPair constructed_pair(int m) {
  const auto phi = bspline(m);
  return QuasiProjectionPair(phi, build_dual(phi, m).phi_tilde);
}

const QuasiProjectionPair& daub_pair(int k) {
  static std::map<int, QuasiProjectionPair> cache;
  auto it = cache.find(k);
  if (it == cache.end()) {
    const FunctionHandle f = RefinableFunction::scalar(daubechies_mask(k), 12);
    it = cache.emplace(k, QuasiProjectionPair(f, f)).first;
  }
  return it->second;
}

std::vector<QuasiProjectionPair> fleet() {
  return {spline_pair(1),      spline_pair(2),      spline_pair(3), constructed_pair(2),
          constructed_pair(3), constructed_pair(4), daub_pair(2),   daub_pair(3)};
}

}  // namespace

TEST_CASE("kappa examples") {
  CHECK_THAT(kappa(bspline(1), 1)(0), WithinAbs(0.0, 1e-15));
  const auto half = PiecewisePoly::piecewise_constant({0.0, 1.0, 2.0}, {0.5, 0.5});
  CHECK_THAT(kappa(half, 1)(0), WithinAbs(-0.5, 1e-15));
  CHECK_THAT(kappa(bspline(2), 2)(0), WithinAbs(0.5, 1e-15));
  CHECK_THROWS_AS(kappa(bspline(2), 3), InputError);
}

TEST_CASE("kappa against a direct periodization") {
  // integral over [0, 1) of sum_n n^j phi~(x - n), midpoint rule
  const auto phit = build_dual(bspline(3), 3).phi_tilde;
  for (int j = 0; j <= 2; ++j) {
    const double direct = oracle::midpoint(
        [&](double x) {
          double s = 0;
          for (int n = -10; n <= 10; ++n) s += detail::ipow(n, j) * phit.eval(0, x - n);
          return s;
        },
        0.0, 1.0, 100000);
    CHECK_THAT(kappa(phit, j)(0), WithinAbs(direct, 1e-4));
  }
}

TEST_CASE("identity_rhs examples") {
  CHECK(std::abs(identity_rhs(spline_pair(1))) < 1e-14);
  CHECK(std::abs(identity_rhs(spline_pair(2)) - 1.0 / 3.0) < 1e-14);
  const auto bad = QuasiProjectionPair(bspline(2), linear_combination({{Eigen::MatrixXd::Constant(1, 1, 2.0), bspline(2)}}));
  CHECK_THROWS_AS(identity_rhs(bad), PreconditionError);
}

TEST_CASE("identity_lhs examples") {
  CHECK(std::abs(identity_lhs(spline_pair(1))) < 1e-10);
  CHECK_THAT(identity_lhs(spline_pair(2)), WithinAbs(1.0 / 3.0, 1e-6));
  CHECK_THAT(identity_lhs(daub_pair(3)), WithinAbs(0.0, 1e-5));
}

TEST_CASE("identity_lhs agrees with trapezoid quadrature of x (sgn - Q sgn)") {
  for (const auto& pair : fleet())
    CHECK_THAT(identity_lhs(pair), WithinAbs(oracle::identity_lhs_quadrature(pair, 0.0, 12), 1e-5));
}

TEST_CASE("both sides of the identity agree across the fleet") {
  for (const auto& pair : fleet()) {
    const cplx rhs = identity_rhs(pair);
    CHECK(std::abs(identity_lhs(pair) - rhs) < 1e-6);
    CHECK(std::abs(rhs.imag()) < 1e-9);
  }
}

TEST_CASE("identity survives a shifted dual") {
  // phi~ -> phi~(. - 1) breaks Q1 = 1 unless phi moves too; shift both
  const auto pair = constructed_pair(3);
  const QuasiProjectionPair moved(shift(pair.phi(), -1.0), shift(pair.phi_tilde(), -1.0));
  CHECK(std::abs(identity_lhs(moved) - identity_rhs(moved)) < 1e-9);
  const QuasiProjectionPair dual_only(pair.phi(), shift(pair.phi_tilde(), -1.0));
  CHECK(std::abs(identity_lhs(dual_only) - identity_rhs(dual_only)) < 1e-9);
}

TEST_CASE("bracket examples") {
  const auto b2 = bracket_second_deriv(spline_pair(2));
  CHECK(std::abs(b2.value - (-1.0 / 3.0)) < 1e-8);
  CHECK(b2.hypotheses_met);
  CHECK(std::abs(bracket_second_deriv(daub_pair(3)).value) < 1e-8);
  const auto b1 = bracket_second_deriv(spline_pair(1));
  CHECK(std::abs(b1.value - (-1.0 / 6.0)) < 1e-12);
  CHECK_FALSE(b1.hypotheses_met);
}

TEST_CASE("lhs equals minus the bracket when the dual reproduces linears") {
  for (const auto& pair : fleet()) {
    const auto b = bracket_second_deriv(pair);
    if (!b.hypotheses_met) continue;
    CHECK(std::abs(identity_lhs(pair) + b.value) < 1e-6);
  }
}

TEST_CASE("overshoot examples") {
  const auto h = overshoot(spline_pair(1), 0.0);
  CHECK(h.R == 1.0);
  CHECK(h.L == -1.0);
  const auto b3 = overshoot(spline_pair(3), 0.0);
  CHECK(b3.R <= 1.0 + 1e-12);
  CHECK(b3.L >= -1.0 - 1e-12);
  CHECK(overshoot(daub_pair(3), 0.0, Side::Right) > 1.01);
  CHECK_THROWS_AS(overshoot(spline_pair(2), 0.0, 12, 3.0), InputError);
  try {
    overshoot(spline_pair(2), 0.0, 12, 3.0);
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("need >= 5") != std::string::npos);
  }
}

TEST_CASE("R(t) >= 1 and L(t) <= -1") {
  for (const auto& pair : fleet())
    for (double t : {0.0, 0.2, 0.5, 0.85}) {
      const auto o = overshoot(pair, t, 9);
      CHECK(o.R >= 1.0 - 1e-9);
      CHECK(o.L <= -1.0 + 1e-9);
    }
}

TEST_CASE("cluster sets") {
  CHECK(cluster_set(Rational(3, 8)) == std::vector<Rational>{Rational(0, 1)});
  CHECK(cluster_set(Rational(1, 3)) == std::vector<Rational>{Rational(1, 3), Rational(2, 3)});
  CHECK(cluster_set(Rational(1, 5)) ==
        std::vector<Rational>{Rational(1, 5), Rational(2, 5), Rational(4, 5), Rational(3, 5)});
  // negative and improper inputs land in [0, 1)
  // -7/6 = 5/6 mod 1, whose doubling orbit enters {2/3, 1/3}
  CHECK(cluster_set(Rational(-7, 6)) == std::vector<Rational>{Rational(2, 3), Rational(1, 3)});
  CHECK(cluster_set(Rational(5, 1)) == std::vector<Rational>{Rational(0, 1)});
}

TEST_CASE("orbit points far out without float drift") {
  // 2^n mod 5 has period 4 and 10^6 = 0 mod 4, so <2^(10^6) / 5> = 1/5
  CHECK(orbit_point(Rational(1, 5), 1000000) == Rational(1, 5));
  CHECK(orbit_point(Rational(1, 5), 1000001) == Rational(2, 5));
  CHECK(orbit_point(Rational(3, 8), 2) == Rational(1, 2));
  CHECK(orbit_point(Rational(3, 8), 1000000) == Rational(0, 1));
  // odd part 7 * 3: period 6
  CHECK(orbit_point(Rational(5, 84), 1000004) == orbit_point(Rational(5, 84), 8));
  // iterate doubling exactly for a while and compare
  Rational x(11, 3 * 7 * 16);
  std::int64_t num = 11, den = 3 * 7 * 16;
  for (std::uint64_t n = 0; n < 200; ++n) {
    CHECK(orbit_point(x, n) == Rational(num, den));
    num = (2 * num) % den;
  }
}

TEST_CASE("rational parsing") {
  CHECK(Rational::parse("3/8") == Rational(3, 8));
  CHECK(Rational::parse("-2/4") == Rational(-1, 2));
  CHECK(Rational::parse("7") == Rational(7, 1));
  CHECK_THROWS_AS(Rational::parse("1/x"), InputError);
  CHECK_THROWS_AS(Rational::parse("1/0"), InputError);
  CHECK_THROWS_AS(Rational::parse("0.5"), InputError);
}

TEST_CASE("verdicts at points") {
  // nonnegative pairs, dyadic points
  for (const auto& r : {Rational(0, 1), Rational(3, 8), Rational(-5, 4)}) {
    CHECK(gibbs_at_point(spline_pair(1), r).verdict == Verdict::NoGibbs);
    CHECK(gibbs_at_point(spline_pair(3), r).verdict == Verdict::NoGibbs);
  }
  const auto d0 = gibbs_at_point(daub_pair(3), Rational(0, 1));
  CHECK(d0.verdict == Verdict::Gibbs);
  CHECK(d0.sgn_cond_confirmed);
  const auto d13 = gibbs_at_point(daub_pair(3), Rational(1, 3));
  CHECK(d13.verdict == Verdict::Gibbs);
  CHECK_THAT(d13.R, WithinAbs(std::max(overshoot(daub_pair(3), 1.0 / 3.0).R, overshoot(daub_pair(3), 2.0 / 3.0).R), 1e-15));
  CHECK(d13.cluster.size() == 2);
}

TEST_CASE("irrational points only ever report gibbs or inconclusive") {
  GibbsOptions opt;
  opt.density = 16;
  opt.level = 9;
  const auto d3 = gibbs_at_irrational(daub_pair(3), opt);
  CHECK(d3.verdict == Verdict::Gibbs);
  CHECK(d3.full_interval);
  const auto b3 = gibbs_at_irrational(spline_pair(3), opt);
  CHECK(b3.verdict == Verdict::Inconclusive);
}

TEST_CASE("verdict hypotheses") {
  // Haar is not continuous; only dyadic points are allowed
  CHECK_THROWS_AS(gibbs_at_point(spline_pair(1), Rational(1, 3)), PreconditionError);
  const auto bad = QuasiProjectionPair(bspline(2), linear_combination({{Eigen::MatrixXd::Constant(1, 1, 2.0), bspline(2)}}));
  CHECK_THROWS_AS(gibbs_at_point(bad, Rational(0, 1)), PreconditionError);
}

TEST_CASE("sgn condition flag") {
  // Haar reproduces sgn exactly, so the overshoot test cannot see sgn:cond
  CHECK_FALSE(gibbs_at_point(spline_pair(1), Rational(0, 1)).sgn_cond_confirmed);
  CHECK(gibbs_at_point(spline_pair(2), Rational(0, 1)).sgn_cond_confirmed);
}

TEST_CASE("zero bracket with confirmed sgn:cond forces gibbs at the origin") {
  int checked = 0;
  for (const auto& pair : fleet()) {
    const auto b = bracket_second_deriv(pair);
    if (!b.hypotheses_met || std::abs(b.value) >= 1e-8) continue;
    const auto r = gibbs_at_point(pair, Rational(0, 1));
    if (!r.sgn_cond_confirmed) continue;
    CHECK(r.verdict == Verdict::Gibbs);
    ++checked;
  }
  // D3 only: the D2 bracket comes out near 6e-8 at L = 12, the O(4^-L) quadrature error
  CHECK(checked == 1);
}

TEST_CASE("constructed duals of order >= 3 miss the dual-side hypothesis") {
  for (int m : {3, 4}) {
    const auto pair = constructed_pair(m);
    const auto b = bracket_second_deriv(pair);
    CHECK(std::abs(b.value) < 1e-8);
    CHECK_FALSE(b.hypotheses_met);
    CHECK(gibbs_at_point(pair, Rational(0, 1)).verdict == Verdict::NoGibbs);
  }
}

TEST_CASE("nonnegativity tests") {
  const auto b2 = nonneg_sufficient(spline_pair(2));
  CHECK(b2.item_i);
  CHECK(b2.item_ii);
  CHECK(nonneg_sufficient(constructed_pair(2)).item_i);
  const auto d3 = nonneg_sufficient(daub_pair(3));
  CHECK_FALSE(d3.item_i);
  CHECK_FALSE(d3.item_ii);
}

TEST_CASE("shifted pair route matches Q_{0,c}") {
  for (const auto& pair : {spline_pair(3), daub_pair(3), constructed_pair(3)})
    for (double c : {0.0, 0.25, 1.0 / 3.0}) CHECK_THAT(identity_lhs(pair.shifted(c)), WithinAbs(identity_lhs(pair, c), 1e-8));
}

TEST_CASE("overshoot is stable between grid levels") {
  const auto a = overshoot(daub_pair(3), 0.0, 11);
  const auto b = overshoot(daub_pair(3), 0.0, 12);
  CHECK_THAT(a.R, WithinAbs(b.R, 1e-3));
  CHECK_THAT(a.L, WithinAbs(b.L, 1e-3));
}

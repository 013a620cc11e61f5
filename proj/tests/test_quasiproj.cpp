#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace gibbslab;
using Catch::Matchers::WithinAbs;

namespace {

QuasiProjectionPair spline_pair(int m) { return QuasiProjectionPair(bspline(m), bspline(m)); }

const QuasiProjectionPair& d3_pair() {
  static const QuasiProjectionPair p = [] {
    const FunctionHandle d3 = RefinableFunction::scalar(daubechies_mask(3), 12);
    return QuasiProjectionPair(d3, d3);
  }();
  return p;
}

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

TEST_CASE("Haar pair reproduces sgn off the origin") {
  const auto pair = spline_pair(1);
  const auto xs = Grid{10, -5, 5}.points();
  const auto v = project_values(pair, Signal::sign(), 0, 0.0, xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] != 0.0) CHECK(v[i] == sgn(xs[i]));
}

TEST_CASE("Q1 = 1 for pairs that pass check_qp1") {
  for (const auto& pair : {spline_pair(1), spline_pair(2), spline_pair(3), d3_pair(),
                           QuasiProjectionPair(bspline(3), build_dual(bspline(3), 3).phi_tilde)}) {
    REQUIRE(check_qp1(pair).ok);
    const auto xs = Grid{8, -3, 3, 0.3}.points();
    for (double v : project_values(pair, Signal::constant(), 0, 0.3, xs)) CHECK_THAT(v, WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("B2 pair: Q sgn equals sgn outside [-5, 5]") {
  const auto pair = spline_pair(2);
  const auto xs = Grid{8, -9, 9}.points();
  const auto v = project_values(pair, Signal::sign(), 0, 0.0, xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (std::abs(xs[i]) > 5.0) CHECK(v[i] == sgn(xs[i]));
}

TEST_CASE("sgn coefficients match quadrature against the dual") {
  // <sgn, phi~(. - k + t)> by midpoint rule on the support
  const auto pair = QuasiProjectionPair(bspline(3), build_dual(bspline(3), 3).phi_tilde);
  const auto& pt = pair.phi_tilde();
  const auto [lo, hi] = support(pt);
  for (double t : {0.0, 0.3}) {
    for (long k = -4; k <= 4; ++k) {
      const double exact = detail::signal_coefficient(pair, pt, Signal::sign(), 0, t, k)(0);
      const double quad = oracle::midpoint([&](double y) { return sgn(y + k - t) * eval(pt, 0, y); }, lo, hi);
      CHECK_THAT(exact, WithinAbs(quad, 1e-5));
    }
  }
}

TEST_CASE("check_qp1 examples") {
  CHECK(check_qp1(spline_pair(1)).normalization_residual < 1e-12);
  CHECK(check_qp1(spline_pair(1)).sup_residual < 1e-12);
  CHECK(check_qp1(spline_pair(2)).ok);
  const auto bad = QuasiProjectionPair(bspline(2), linear_combination({{Eigen::MatrixXd::Constant(1, 1, 2.0), bspline(2)}}));
  const auto r = check_qp1(bad);
  CHECK_FALSE(r.ok);
  CHECK_THAT(r.normalization_residual, WithinAbs(1.0, 1e-12));
}

TEST_CASE("kernel_K examples") {
  const auto haar = spline_pair(1);
  CHECK_THAT(kernel_K(haar, 0.5, 0.5), WithinAbs(1.0, 1e-15));
  CHECK_THAT(kernel_K(haar, 0.5, 5.5), WithinAbs(0.0, 1e-15));
  CHECK_THAT(kernel_K(spline_pair(2), 1.0, 1.0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("kernel_criterion examples") {
  CHECK(kernel_criterion(spline_pair(1)).ok);
  CHECK(kernel_criterion(spline_pair(3)).ok);
  const auto d3 = kernel_criterion(d3_pair());
  CHECK_FALSE(d3.ok);
  CHECK(d3.right_sup > 1.0);
  CHECK(d3.right_x > 0.0);
}

TEST_CASE("poly_reproduction examples") {
  CHECK(poly_reproduction(spline_pair(1), 1)[0] < 1e-12);
  // |B2^|^2 = 1 - xi^2/3 + ..., so linears are reproduced and quadratics are not
  const auto b2 = poly_reproduction(spline_pair(2), 3);
  CHECK(b2[0] < 1e-12);
  CHECK(b2[1] < 1e-12);
  CHECK(b2[2] > 0.01);
  const auto dual = poly_reproduction(QuasiProjectionPair(bspline(2), build_dual(bspline(2), 2).phi_tilde), 2);
  CHECK(dual[0] < 1e-9);
  CHECK(dual[1] < 1e-9);
  CHECK_THROWS_AS(poly_reproduction(spline_pair(1), 7), InputError);
}

TEST_CASE("accuracy_order examples") {
  CHECK(accuracy_order(spline_pair(1)) == 1);
  CHECK(accuracy_order(spline_pair(2)) == 2);
  CHECK(accuracy_order(d3_pair()) == 3);
  CHECK(accuracy_order(QuasiProjectionPair(bspline(3), build_dual(bspline(3), 3).phi_tilde)) == 3);
}

TEST_CASE("approximation rates") {
  const auto s = Signal::generic([](double x) { return std::sin(x); });
  CHECK_THAT(approximation_rate(spline_pair(1), s, 2, 7).slope, WithinAbs(1.0, 0.2));
  CHECK_THAT(approximation_rate(d3_pair(), s, 2, 7).slope, WithinAbs(3.0, 0.3));
  // an element of the level-3 Haar span is reproduced from level 3 on
  const auto step = Signal::generic([](double x) { return std::floor(8.0 * x) / 8.0; },
                                    [] {
                                      std::vector<double> b;
                                      for (int i = -40; i <= 40; ++i) b.push_back(i / 8.0);
                                      return b;
                                    }(),
                                    -5.0, 5.0);
  const auto fit = approximation_rate(spline_pair(1), step, 3, 5);
  for (double e : fit.errors) CHECK(e < 1e-8);
}

TEST_CASE("scale-shift identity") {
  const auto pair = spline_pair(3);
  const auto f = Signal::generic([](double x) { return std::exp(-x * x); });
  for (int n : {1, 3}) {
    const double s = std::ldexp(1.0, -n);
    const auto g = Signal::generic([s](double x) { return std::exp(-s * s * x * x); });
    const auto xs = Grid{6, -3, 3}.points();
    std::vector<double> scaled;
    for (double x : xs) scaled.push_back(x * s);
    const auto lhs = project_values(pair, f, n, 0.0, scaled);
    const auto rhs = project_values(pair, g, 0, 0.0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK_THAT(lhs[i], WithinAbs(rhs[i], 1e-10));
  }
}

TEST_CASE("Q_{0,t} sgn is 1-periodic in t") {
  for (const auto& pair : {spline_pair(2), d3_pair()}) {
    const std::vector<double> xs{-2.7, -0.4, 0.1, 0.9, 3.3};
    for (double t : {0.1, 0.6}) {
      const auto a = project_values(pair, Signal::sign(), 0, t, xs);
      const auto b = project_values(pair, Signal::sign(), 0, t + 1.0, xs);
      for (std::size_t i = 0; i < xs.size(); ++i) CHECK_THAT(a[i], WithinAbs(b[i], 1e-10));
    }
  }
}

TEST_CASE("support identity for spline pairs") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> T(-0.99, 0.99);
  for (int m = 1; m <= 4; ++m) {
    const auto pair = spline_pair(m);
    const double zone = 2.0 * pair.support_bound() + 1.0;
    for (int trial = 0; trial < 5; ++trial) {
      const double t = T(rng);
      std::vector<double> xs;
      for (int i = 1; i <= 20; ++i) {
        xs.push_back(zone + 0.13 * i);
        xs.push_back(-zone - 0.13 * i);
      }
      const auto v = project_values(pair, Signal::sign(), 0, t, xs);
      for (std::size_t i = 0; i < xs.size(); ++i) CHECK(v[i] == Catch::Approx(sgn(xs[i])).margin(1e-14));
    }
  }
}

TEST_CASE("Q_{0,t} sgn is continuous in t for continuous phi") {
  for (int m : {2, 3}) {
    const auto pair = spline_pair(m);
    const auto xs = Grid{9, -7, 7}.points();
    for (double c : {0.0, 0.37}) {
      const auto a = project_values(pair, Signal::sign(), 0, c, xs);
      const auto b = project_values(pair, Signal::sign(), 0, c + 1e-3, xs);
      double d = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
      CHECK(d < 0.05);
    }
  }
}

TEST_CASE("apply returns a sampled function on the grid") {
  const auto s = apply(spline_pair(2), Signal::sign(), 1, 0.0, Grid{8, -2, 2});
  CHECK(s.level() == 8);
  CHECK_THAT(s.eval(0, 1.5), WithinAbs(apply_at(spline_pair(2), Signal::sign(), 1, 0.0, 1.5), 1e-12));
  CHECK_THROWS_AS((Grid{17, -1, 1}.points()), InputError);
}

TEST_CASE("mismatched component counts are rejected") {
  const PiecewisePoly two({0.0, 1.0}, {{{1.0}, {1.0}}});
  CHECK_THROWS_AS(QuasiProjectionPair(bspline(1), two), DimensionError);
}

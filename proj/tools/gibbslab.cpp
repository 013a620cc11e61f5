// gibbslab command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "gibbslab/gibbslab.hpp"

using namespace gibbslab;

namespace {

struct Options {
  std::string pair, phi, phi_tilde, bank, x0, out, knots, f = "sgn", file;
  int order = 2, level = 12, n = 3, density = 0;
  double window = 0.0, tol = 1e-3;
};

void check_level(int level) {
  if (level < 0 || level > kMaxLevel) throw InputError("--level must lie in [0, 16]");
}

QuasiProjectionPair load_pair(const Options& o) {
  if (!o.pair.empty()) return resolve_pair(o.pair, o.level);
  if (o.phi.empty()) throw InputError("need --pair or --phi");
  const auto phi = resolve_function(o.phi, o.level);
  return QuasiProjectionPair(phi, o.phi_tilde.empty() ? phi : resolve_function(o.phi_tilde, o.level));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

std::string csv_xy(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::ostringstream os;
  os << std::setprecision(17) << "x,value\n";
  for (std::size_t i = 0; i < xs.size(); ++i) os << xs[i] << ',' << ys[i] << '\n';
  return os.str();
}

Signal parse_signal(const std::string& spec, double window) {
  if (spec == "sgn") return Signal::sign();
  if (spec == "clipped-sgn") {
    const double A = window > 0 ? window : 3.0;
    return Signal::generic([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }, {0.0}, -A, A);
  }
  if (spec == "gauss") return Signal::generic([](double x) { return std::exp(-x * x); }, {}, -9.0, 9.0);
  if (spec.rfind("monomial:", 0) == 0) return Signal::monomial(std::stoi(spec.substr(9)));
  throw InputError("unknown signal '" + spec + "' (sgn, clipped-sgn, gauss, monomial:j)");
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

int analyze_pair(const Options& o) {
  const auto pair = load_pair(o);
  const auto qp1 = check_qp1(pair);
  json out;
  out["components"] = pair.components();
  out["support_bound"] = pair.support_bound();
  out["qp1"] = {{"ok", qp1.ok}, {"normalization_residual", qp1.normalization_residual}, {"sup_residual", qp1.sup_residual}};
  if (!qp1.ok) {
    std::cout << out.dump(2) << '\n';
    std::cerr << "error: Q1 != 1 for this pair\n";
    return 2;
  }
  json moments = json::array();
  for (int j = 0; j <= 2; ++j) moments.push_back({{"j", j}, {"phi", vec_json(pair.mu(j))}, {"phi_tilde", vec_json(pair.mu_tilde(j))}});
  out["moments"] = moments;
  out["accuracy_order"] = accuracy_order(pair);
  out["kappa"] = {vec_json(kappa(pair.phi_tilde(), 0)), vec_json(kappa(pair.phi_tilde(), 1)), vec_json(kappa(pair.phi_tilde(), 2))};
  const double lhs = identity_lhs(pair);
  const cplx rhs = identity_rhs(pair);
  out["identity"] = {{"lhs", lhs}, {"rhs", cplx_json(rhs)}, {"difference", std::abs(lhs - rhs)}};
  const auto br = bracket_second_deriv(pair);
  out["bracket_second_deriv"] = {{"value", cplx_json(br.value)}, {"hypotheses_met", br.hypotheses_met}};
  const auto kc = kernel_criterion(pair, o.window, o.level);
  out["kernel_criterion"] = {{"ok", kc.ok}, {"worst_x", kc.worst_x}, {"worst_value", kc.worst_value}};
  const auto nn = nonneg_sufficient(pair);
  out["nonneg"] = {{"item_i", nn.item_i}, {"item_ii", nn.item_ii}};
  GibbsOptions go;
  go.tau = o.tol;
  go.level = o.level;
  go.window = o.window;
  out["origin"] = to_json(gibbs_at_point(pair, Rational(0, 1), go));
  std::cout << out.dump(2) << '\n';
  return 0;
}

int gibbs_point(const Options& o) {
  if (o.x0.empty()) throw InputError("gibbs-point needs --x0 (p/q or irrational)");
  const auto pair = load_pair(o);
  GibbsOptions go;
  go.tau = o.tol;
  go.level = o.level;
  go.window = o.window;
  if (o.density > 0) go.density = o.density;
  const auto r = o.x0 == "irrational" ? gibbs_at_irrational(pair, go) : gibbs_at_point(pair, Rational::parse(o.x0), go);
  std::cout << to_json(r).dump(2) << '\n';
  return 0;
}

int construct_dual(const Options& o) {
  if (o.phi.empty()) throw InputError("construct-dual needs --phi");
  const auto phi = resolve_function(o.phi, o.level);
  std::optional<std::vector<double>> knots;
  if (!o.knots.empty()) {
    knots.emplace();
    std::stringstream ss(o.knots);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        knots->push_back(std::stod(item));
      } catch (const std::exception&) {
        throw InputError("bad knot '" + item + "'");
      }
    }
  }
  const auto dc = build_dual(phi, o.order, knots);
  const auto report = verify_gibbs_free(dc, phi, o.level);
  json out = to_json(dc);
  out["gibbs_free"] = {{"integral_right", report.integral_right},
                       {"integral_left", report.integral_left},
                       {"integrals_in_range", report.integrals_in_range},
                       {"item_i", report.item_i},
                       {"R0", report.R0},
                       {"L0", report.L0},
                       {"gibbs_free_at_origin", report.gibbs_free_at_origin}};
  const auto w = optimality_witness(dc);
  if (w.applicable)
    out["optimality_witness"] = {{"violated", w.violated}, {"worst_k", w.worst_k}, {"worst_value", w.worst_value}};
  else
    out["optimality_witness"] = "not applicable";
  if (!o.out.empty()) write_text(o.out, to_json(dc.phi_tilde).dump(2) + "\n");
  std::cout << out.dump(2) << '\n';
  return 0;
}

int check_oep_cmd(const Options& o) {
  const std::string spec = !o.file.empty() ? o.file : o.bank;
  if (spec.empty()) throw InputError("check-oep needs a bank file or --bank");
  const auto r = oep_check(resolve_bank(spec));
  std::cout << json{{"ok", r.ok}, {"residual0", r.residual0}, {"residual_pi", r.residual_pi}}.dump(2) << '\n';
  return 0;
}

int expand(const Options& o) {
  if (o.bank.empty()) throw InputError("expand needs --bank");
  const auto bank = resolve_bank(o.bank);
  auto [phi, phit] = bank_functions(o.bank, bank, o.level);
  if (!o.phi.empty()) {
    phi = resolve_function(o.phi, o.level);
    phit = o.phi_tilde.empty() ? phi : resolve_function(o.phi_tilde, o.level);
  }
  const auto df = derive_wavelets(bank, phi, phit);
  const double w = o.window > 0 ? o.window : 4.0;
  const Signal f = parse_signal(o.f, o.window);
  const Grid g{std::min(o.level, o.n + 6), -w, w};
  const auto A = truncated_expansion(df, f, o.n, g);
  const auto Q = apply(df.mathring_pair(), f, o.n, 0.0, g);
  double diff = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) diff = std::max(diff, std::abs(A.values(0)[i] - Q.values(0)[i]));
  if (!o.out.empty()) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < A.size(); ++i) xs.push_back(A.x(i));
    write_text(o.out, csv_xy(xs, A.values(0)));
  }
  std::cout << json{{"n", o.n},
                    {"points", A.size()},
                    {"max_abs_An_minus_Qn", diff},
                    {"vmo_psi", vanishing_moments(df.psi_moments)},
                    {"vmo_psi_tilde", vanishing_moments(df.psi_tilde_moments)}}
                   .dump(2)
            << '\n';
  return 0;
}

int overshoot_curve(const Options& o) {
  const auto pair = load_pair(o);
  const int density = o.density > 0 ? o.density : 64;
  std::ostringstream os;
  os << std::setprecision(17) << "t,R,L\n";
  for (int i = 0; i < density; ++i) {
    const double t = static_cast<double>(i) / density;
    const auto r = overshoot(pair, t, o.level, o.window);
    os << t << ',' << r.R << ',' << r.L << '\n';
  }
  if (o.out.empty())
    std::cout << os.str();
  else
    write_text(o.out, os.str());
  return 0;
}

int bspline_table(const Options& o) {
  const auto b = bspline(o.order);
  const auto xs = Grid{std::min(o.level, 8), 0.0, static_cast<double>(o.order)}.points();
  std::vector<double> ys;
  for (double x : xs) ys.push_back(b.eval(0, x));
  const auto text = csv_xy(xs, ys);
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-projection, framelet and Gibbs phenomenon analysis"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--level", o.level, "dyadic grid level (<= 16)")->default_val(12);
    c->add_option("--window", o.window, "half-width of the evaluation window");
    c->add_option("--tol", o.tol, "decision tolerance for overshoot")->default_val(1e-3);
    c->add_option("--out", o.out, "output file");
  };
  auto add_pair = [&](CLI::App* c) {
    c->add_option("--pair", o.pair, "haar | bspline:m | daubechies:k | dual:bspline:m | pair.json");
    c->add_option("--phi", o.phi, "phi builtin or JSON file");
    c->add_option("--phi-tilde", o.phi_tilde, "phi~ builtin or JSON file (default: phi)");
  };

  auto* analyze = app.add_subcommand("analyze-pair", "moments, identity, kernel and origin verdict of a pair");
  add_pair(analyze);
  add_common(analyze);
  auto* point = app.add_subcommand("gibbs-point", "Gibbs verdict at a rational point or for irrational points");
  add_pair(point);
  add_common(point);
  point->add_option("--x0", o.x0, "p/q or irrational");
  point->add_option("--density", o.density, "c-grid size for irrational points");
  auto* construct = app.add_subcommand("construct-dual", "piecewise-constant dual of given accuracy order");
  construct->add_option("--phi", o.phi, "nonnegative scalar phi")->required();
  construct->add_option("--order", o.order, "accuracy order m")->default_val(2);
  construct->add_option("--knots", o.knots, "comma-separated knots on [N, N+1]");
  add_common(construct);
  auto* oep = app.add_subcommand("check-oep", "verify the OEP identities of a filter bank");
  oep->add_option("file", o.file, "bank JSON file");
  oep->add_option("--bank", o.bank, "builtin bank or JSON file");
  auto* exp = app.add_subcommand("expand", "truncated framelet expansion A_n f");
  exp->add_option("--bank", o.bank, "haar | bspline2-tight | daubechies:k | bank.json");
  exp->add_option("--phi", o.phi, "override the refinable function");
  exp->add_option("--phi-tilde", o.phi_tilde, "override the dual refinable function");
  exp->add_option("--f", o.f, "sgn | clipped-sgn | gauss | monomial:j")->default_val("sgn");
  exp->add_option("--n", o.n, "number of wavelet levels")->default_val(3);
  add_common(exp);
  auto* curve = app.add_subcommand("overshoot-curve", "R(t), L(t) for t on a uniform grid of [0, 1)");
  add_pair(curve);
  add_common(curve);
  curve->add_option("--density", o.density, "number of t values")->default_val(64);
  auto* table = app.add_subcommand("bspline-table", "samples of B_m as CSV");
  table->add_option("--order", o.order, "spline order m")->default_val(4);
  add_common(table);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    check_level(o.level);
    if (*analyze) return analyze_pair(o);
    if (*point) return gibbs_point(o);
    if (*construct) return construct_dual(o);
    if (*oep) return check_oep_cmd(o);
    if (*exp) return expand(o);
    if (*curve) return overshoot_curve(o);
    if (*table) return bspline_table(o);
  } catch (const PreconditionError& e) {
    std::cerr << "precondition: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

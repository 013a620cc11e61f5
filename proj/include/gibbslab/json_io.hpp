#pragma once

// JSON payloads for sequences, functions, pairs and filter banks, plus the
// named builtins accepted on the command line.

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "gibbslab/construct.hpp"
#include "gibbslab/framelet.hpp"

namespace gibbslab {

using json = nlohmann::json;

namespace detail {

inline cplx parse_cplx(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw InputError("expected a number or [re, im], got " + j.dump());
}

/// A matrix entry: scalar, [re, im], a row of scalars / pairs, or rows of those.
inline CMatrix parse_matrix(const json& j) {
  if (j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number())) {
    CMatrix m(1, 1);
    m(0, 0) = parse_cplx(j);
    return m;
  }
  if (!j.is_array() || j.empty()) throw InputError("matrix entry must be a non-empty array: " + j.dump());
  const bool rows_of_rows = j[0].is_array() && !(j[0].size() == 2 && j[0][0].is_number());
  if (!rows_of_rows) {  // single row
    CMatrix m(1, static_cast<long>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) m(0, static_cast<long>(c)) = parse_cplx(j[c]);
    return m;
  }
  const auto cols = j[0].size();
  CMatrix m(static_cast<long>(j.size()), static_cast<long>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw DimensionError("matrix rows differ in length: " + j.dump());
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<long>(r), static_cast<long>(c)) = parse_cplx(j[r][c]);
  }
  return m;
}

inline const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw InputError(std::string("missing field '") + name + "'");
  return j.at(name);
}

}  // namespace detail

inline MatrixSeq matrixseq_from_json(const json& j) {
  try {
    const long offset = detail::field(j, "offset").get<long>();
    const auto& e = detail::field(j, "entries");
    if (!e.is_array() || e.empty()) throw InputError("'entries' must be a non-empty array");
    std::vector<CMatrix> entries;
    for (const auto& x : e) entries.push_back(detail::parse_matrix(x));
    return MatrixSeq(offset, std::move(entries));
  } catch (const json::exception& ex) {
    throw InputError(std::string("bad sequence JSON: ") + ex.what());
  }
}

inline json to_json(const MatrixSeq& u) {
  json entries = json::array();
  for (const auto& m : u.entries()) {
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (long c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
      rows.push_back(row);
    }
    entries.push_back(rows);
  }
  return {{"offset", u.offset()}, {"entries", entries}};
}

inline json to_json(const PiecewisePoly& p) {
  return {{"type", "piecewise"}, {"breakpoints", p.breakpoints()}, {"coeffs", p.coeffs()}};
}

inline json to_json(const SampledFunction& s) {
  return {{"type", "sampled"}, {"level", s.level()}, {"origin", s.origin()}, {"values", s.all_values()}};
}

inline FunctionHandle function_from_json(const json& j, int default_level = 12) {
  try {
    if (!j.is_object()) throw InputError("function JSON must be an object");
    if (j.contains("breakpoints")) {
      auto coeffs = detail::field(j, "coeffs").get<std::vector<std::vector<std::vector<double>>>>();
      return PiecewisePoly(j.at("breakpoints").get<std::vector<double>>(), std::move(coeffs));
    }
    if (j.contains("mask")) {
      const auto mask = matrixseq_from_json(j.at("mask"));
      const int level = j.value("level", default_level);
      Eigen::VectorXd norm = Eigen::VectorXd::Ones(mask.rows());
      if (j.contains("normalization")) {
        const auto v = j.at("normalization").get<std::vector<double>>();
        if (static_cast<long>(v.size()) != mask.rows()) throw DimensionError("normalization length differs from mask size");
        for (std::size_t i = 0; i < v.size(); ++i) norm(static_cast<long>(i)) = v[i];
      }
      return RefinableFunction(mask, norm, level);
    }
    if (j.contains("values")) {
      auto v = j.at("values");
      std::vector<std::vector<double>> vals;
      if (!v.empty() && v[0].is_number())
        vals.push_back(v.get<std::vector<double>>());
      else
        vals = v.get<std::vector<std::vector<double>>>();
      return SampledFunction(detail::field(j, "level").get<int>(), j.value("origin", 0.0), std::move(vals));
    }
    throw InputError("function JSON needs 'breakpoints', 'mask' or 'values'");
  } catch (const json::exception& ex) {
    throw InputError(std::string("bad function JSON: ") + ex.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw InputError("'" + path + "' is not valid JSON: " + ex.what());
  }
}

namespace detail {
inline bool has_prefix(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

inline int spec_int(const std::string& spec, const std::string& prefix) {
  const std::string rest = spec.substr(prefix.size());
  try {
    std::size_t used = 0;
    const int v = std::stoi(rest, &used);
    if (used == rest.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("bad builtin '" + spec + "': expected an integer after '" + prefix + "'");
}
}  // namespace detail

/// haar | bspline:m | daubechies:k | path to a function JSON file.
inline FunctionHandle resolve_function(const std::string& spec, int level = 12) {
  if (spec == "haar") return bspline(1);
  if (detail::has_prefix(spec, "bspline:")) return bspline(detail::spec_int(spec, "bspline:"));
  if (detail::has_prefix(spec, "daubechies:"))
    return RefinableFunction::scalar(daubechies_mask(detail::spec_int(spec, "daubechies:")), level);
  if (spec.find('/') == std::string::npos && spec.find('.') == std::string::npos)
    throw InputError("unknown builtin function '" + spec + "'");
  return function_from_json(read_json_file(spec), level);
}

/// haar | bspline:m | daubechies:k (phi~ = phi) | dual:bspline:m (constructed
/// dual of order m) | path to a pair JSON {"phi": ..., "phi_tilde": ...}.
inline QuasiProjectionPair resolve_pair(const std::string& spec, int level = 12) {
  if (detail::has_prefix(spec, "dual:bspline:")) {
    const int m = detail::spec_int(spec, "dual:bspline:");
    FunctionHandle phi = bspline(m);
    return QuasiProjectionPair(phi, build_dual(phi, m).phi_tilde);
  }
  if (spec == "haar" || detail::has_prefix(spec, "bspline:") || detail::has_prefix(spec, "daubechies:")) {
    auto f = resolve_function(spec, level);
    return QuasiProjectionPair(f, f);
  }
  if (spec.find('/') == std::string::npos && spec.find('.') == std::string::npos)
    throw InputError("unknown builtin pair '" + spec + "'");
  const auto j = read_json_file(spec);
  return QuasiProjectionPair(function_from_json(detail::field(j, "phi"), level),
                             function_from_json(detail::field(j, "phi_tilde"), level));
}

inline FilterBank filterbank_from_json(const json& j) {
  const auto a = matrixseq_from_json(detail::field(j, "a"));
  const auto b = matrixseq_from_json(detail::field(j, "b"));
  auto opt = [&](const char* name) -> std::optional<MatrixSeq> {
    if (j.contains(name)) return matrixseq_from_json(j.at(name));
    return std::nullopt;
  };
  const auto at = opt("a_tilde"), bt = opt("b_tilde");
  return FilterBank(a, at ? *at : a, b, bt ? *bt : b, opt("theta"), opt("theta_tilde"));
}

inline json to_json(const FilterBank& fb) {
  return {{"a", to_json(fb.a)},         {"a_tilde", to_json(fb.a_tilde)}, {"b", to_json(fb.b)},
          {"b_tilde", to_json(fb.b_tilde)}, {"theta", to_json(fb.theta)}, {"theta_tilde", to_json(fb.theta_tilde)}};
}

/// haar | bspline2-tight | daubechies:k | path to a bank JSON file.
inline FilterBank resolve_bank(const std::string& spec) {
  if (spec == "haar") return haar_bank();
  if (spec == "bspline2-tight") return bspline2_tight_bank();
  if (detail::has_prefix(spec, "daubechies:")) return daubechies_bank(detail::spec_int(spec, "daubechies:"));
  if (spec.find('/') == std::string::npos && spec.find('.') == std::string::npos)
    throw InputError("unknown builtin bank '" + spec + "'");
  return filterbank_from_json(read_json_file(spec));
}

/// Refinable functions attached to a bank: B-spline banks use exact splines.
inline std::pair<FunctionHandle, FunctionHandle> bank_functions(const std::string& spec, const FilterBank& fb,
                                                                int level = 12) {
  if (spec == "haar") return {bspline(1), bspline(1)};
  if (spec == "bspline2-tight") return {bspline(2), bspline(2)};
  const Eigen::VectorXd norm = Eigen::VectorXd::Ones(fb.r());
  return {RefinableFunction(fb.a, norm, level), RefinableFunction(fb.a_tilde, norm, level)};
}

inline json to_json(const GibbsReport& r) {
  json cluster;
  if (r.full_interval) {
    cluster = "full-interval";
  } else {
    cluster = json::array();
    for (const auto& c : r.cluster) cluster.push_back(c.str());
  }
  return {{"point", r.point},
          {"R", r.R},
          {"L", r.L},
          {"overshoot_right", r.overshoot_right()},
          {"overshoot_left", r.overshoot_left()},
          {"cluster_set", cluster},
          {"verdict", to_string(r.verdict)},
          {"tau", r.tau},
          {"sgn_cond", r.sgn_cond_confirmed ? "confirmed" : "cannot confirm"}};
}

inline json to_json(const DualConstruction& dc) {
  return {{"m", dc.m},
          {"d", dc.d},
          {"N", dc.N},
          {"knots", dc.knots},
          {"c", dc.c},
          {"phi_tilde", to_json(dc.phi_tilde)},
          {"moment_residual", dc.moment_residual},
          {"partition_residual", dc.partition_residual}};
}

}  // namespace gibbslab

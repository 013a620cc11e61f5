#pragma once

// Standard refinement masks: B-splines and Daubechies orthonormal filters.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "gibbslab/core.hpp"
#include "gibbslab/sequences.hpp"

namespace gibbslab {

/// Mask of B_m on [0, m]: a(j) = C(m, j) / 2^m.
inline MatrixSeq bspline_mask(int m) {
  if (m < 1 || m > 9) throw InputError("bspline_mask: order must lie in [1, 9]");
  std::vector<double> a;
  for (int j = 0; j <= m; ++j) a.push_back(detail::binomial(m, j) / std::ldexp(1.0, m));
  return MatrixSeq::scalar(0, a);
}

inline MatrixSeq haar_mask() { return bspline_mask(1); }

/// Daubechies orthonormal mask with k sum rules (2k taps on [0, 2k-1]),
/// normalized to a^(0) = 1.
inline MatrixSeq daubechies_mask(int k) {
  if (k < 1 || k > 10) throw InputError("daubechies_mask: order must lie in [1, 10]");
  if (k == 1) return haar_mask();
  if (k == 2) {
    const double s = std::sqrt(3.0);
    return MatrixSeq::scalar(0, std::vector<double>{(1 + s) / 8, (3 + s) / 8, (3 - s) / 8, (1 - s) / 8});
  }
  if (k == 3) {
    const double s = std::sqrt(10.0), q = std::sqrt(5.0 + 2.0 * s);
    return MatrixSeq::scalar(0, std::vector<double>{(1 + s + q) / 32, (5 + s + 3 * q) / 32,
                                                    (10 - 2 * s + 2 * q) / 32, (10 - 2 * s - 2 * q) / 32,
                                                    (5 + s - 3 * q) / 32, (1 + s - q) / 32});
  }
  // |L(xi)|^2 = P(y), y = sin^2(xi/2), P(y) = sum_{j<k} C(k-1+j, j) y^j.
  // Each root y_r gives z + 1/z = 2 - 4 y_r with z = e^{-i xi}; keep |z| > 1.
  const int deg = k - 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  const double lead = detail::binomial(2 * k - 2, deg);
  for (int j = 0; j < deg; ++j) companion(j, deg - 1) = -detail::binomial(k - 1 + j, j) / lead;
  for (int j = 1; j < deg; ++j) companion(j, j - 1) = 1.0;
  const Eigen::VectorXcd yroots = companion.eigenvalues();
  std::vector<cplx> poly{1.0};  // coefficients in z, ascending
  for (int r = 0; r < deg; ++r) {
    const cplx w = 2.0 - 4.0 * yroots(r);
    cplx z = 0.5 * (w + std::sqrt(w * w - 4.0));
    if (std::abs(z) < 1.0) z = 1.0 / z;
    std::vector<cplx> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] -= z * poly[i];
      next[i + 1] += poly[i];
    }
    poly = std::move(next);
  }
  for (int i = 0; i < k; ++i) {  // times (1 + z) / 2
    std::vector<cplx> next(poly.size() + 1, 0.0);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      next[j] += 0.5 * poly[j];
      next[j + 1] += 0.5 * poly[j];
    }
    poly = std::move(next);
  }
  cplx total = 0.0;
  for (const auto& c : poly) total += c;
  std::vector<double> a;
  for (const auto& c : poly) a.push_back((c / total).real());
  return MatrixSeq::scalar(0, a);
}

/// High-pass filter b(k) = (-1)^{k+1} conj(a(1-k)) of an orthonormal scalar mask.
inline MatrixSeq orthonormal_highpass(const MatrixSeq& a) {
  if (a.rows() != 1 || a.cols() != 1) throw DimensionError("orthonormal_highpass: scalar mask expected");
  std::vector<cplx> b;
  const long lo = 1 - a.last();
  for (long k = lo; k <= 1 - a.offset(); ++k) b.push_back((k % 2 == 0 ? -1.0 : 1.0) * std::conj(a.at(1 - k)(0, 0)));
  return MatrixSeq::scalar(lo, b);
}

}  // namespace gibbslab

#pragma once

// Finitely supported sequences of complex matrices on Z and the tail
// convolution sums used to cross-check the key identity.

#include <Eigen/Dense>

#include <sstream>
#include <utility>
#include <vector>

#include "gibbslab/core.hpp"

namespace gibbslab {

using CMatrix = Eigen::MatrixXcd;

/// Finitely supported sequence k -> u(k) of r x s complex matrices.
///
/// Entries are stored densely from offset() to last(). The stored range is
/// trimmed so that the first and last entries are nonzero; the zero sequence
/// has no stored entries but still remembers its shape.
class MatrixSeq {
 public:
  MatrixSeq() = default;

  MatrixSeq(long rows, long cols) : rows_(rows), cols_(cols) {}

  MatrixSeq(long offset, std::vector<CMatrix> entries) : offset_(offset), entries_(std::move(entries)) {
    if (entries_.empty()) throw DimensionError("MatrixSeq: use MatrixSeq(rows, cols) for the zero sequence");
    rows_ = entries_.front().rows();
    cols_ = entries_.front().cols();
    for (const auto& m : entries_) {
      if (m.rows() != rows_ || m.cols() != cols_) {
        std::ostringstream os;
        os << "MatrixSeq: entry of shape " << m.rows() << "x" << m.cols() << " does not match " << rows_ << "x"
           << cols_;
        throw DimensionError(os.str());
      }
    }
    trim();
  }

  /// Scalar sequence from coefficients starting at `offset`.
  static MatrixSeq scalar(long offset, const std::vector<cplx>& coeffs) {
    std::vector<CMatrix> e;
    e.reserve(coeffs.size());
    for (const auto& c : coeffs) e.push_back(CMatrix::Constant(1, 1, c));
    if (e.empty()) return MatrixSeq(1, 1);
    return MatrixSeq(offset, std::move(e));
  }

  static MatrixSeq scalar(long offset, const std::vector<double>& coeffs) {
    std::vector<cplx> c(coeffs.begin(), coeffs.end());
    return scalar(offset, c);
  }

  /// delta(k - at) * I_n
  static MatrixSeq dirac(long n = 1, long at = 0) { return MatrixSeq(at, {CMatrix::Identity(n, n)}); }

  long rows() const noexcept { return rows_; }
  long cols() const noexcept { return cols_; }
  bool is_zero() const noexcept { return entries_.empty(); }
  long offset() const noexcept { return offset_; }
  /// Index of the last stored entry (offset() - 1 for the zero sequence).
  long last() const noexcept { return offset_ + static_cast<long>(entries_.size()) - 1; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<CMatrix>& entries() const noexcept { return entries_; }

  /// u(k), zero outside the stored range.
  CMatrix at(long k) const {
    if (k < offset_ || k > last()) return CMatrix::Zero(rows_, cols_);
    return entries_[static_cast<std::size_t>(k - offset_)];
  }

  /// Largest |entry| over all coefficients.
  double max_abs() const {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, e.cwiseAbs().maxCoeff());
    return m;
  }

  /// Largest imaginary part over all coefficients.
  double max_imag() const {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, e.imag().cwiseAbs().maxCoeff());
    return m;
  }

  /// Value of the Fourier series u^(xi) = sum_k u(k) e^{-ik xi}.
  CMatrix symbol(double xi) const;

  MatrixSeq operator+(const MatrixSeq& o) const { return combine(o, 1.0); }
  MatrixSeq operator-(const MatrixSeq& o) const { return combine(o, -1.0); }
  MatrixSeq operator*(cplx s) const {
    auto e = entries_;
    for (auto& m : e) m *= s;
    return rebuild(offset_, std::move(e));
  }

 private:
  MatrixSeq rebuild(long offset, std::vector<CMatrix> e) const {
    if (e.empty()) return MatrixSeq(rows_, cols_);
    bool all_zero = true;
    for (const auto& m : e) all_zero = all_zero && m.isZero(0.0);
    if (all_zero) return MatrixSeq(rows_, cols_);
    return MatrixSeq(offset, std::move(e));
  }

  MatrixSeq combine(const MatrixSeq& o, double sign) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      std::ostringstream os;
      os << "MatrixSeq: cannot add " << rows_ << "x" << cols_ << " and " << o.rows_ << "x" << o.cols_;
      throw DimensionError(os.str());
    }
    if (is_zero()) return o * cplx(sign);
    if (o.is_zero()) return *this;
    const long lo = std::min(offset_, o.offset_);
    const long hi = std::max(last(), o.last());
    std::vector<CMatrix> e;
    e.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (long k = lo; k <= hi; ++k) e.push_back(at(k) + sign * o.at(k));
    return rebuild(lo, std::move(e));
  }

  void trim() {
    std::size_t first = 0;
    while (first < entries_.size() && entries_[first].isZero(0.0)) ++first;
    std::size_t end = entries_.size();
    while (end > first && entries_[end - 1].isZero(0.0)) --end;
    if (first == end) {
      entries_.clear();
      offset_ = 0;
      return;
    }
    entries_ = std::vector<CMatrix>(entries_.begin() + static_cast<long>(first), entries_.begin() + static_cast<long>(end));
    offset_ += static_cast<long>(first);
  }

  long rows_ = 1;
  long cols_ = 1;
  long offset_ = 0;
  std::vector<CMatrix> entries_;
};

inline MatrixSeq operator*(cplx s, const MatrixSeq& u) { return u * s; }

/// [u*d](n) = sum_k u(n-k) d(k).
inline MatrixSeq convolve(const MatrixSeq& u, const MatrixSeq& d) {
  if (u.cols() != d.rows()) {
    std::ostringstream os;
    os << "convolve: inner dimensions differ (" << u.rows() << "x" << u.cols() << " * " << d.rows() << "x"
       << d.cols() << ")";
    throw DimensionError(os.str());
  }
  if (u.is_zero() || d.is_zero()) return MatrixSeq(u.rows(), d.cols());
  const long lo = u.offset() + d.offset();
  const long hi = u.last() + d.last();
  std::vector<CMatrix> out(static_cast<std::size_t>(hi - lo + 1), CMatrix::Zero(u.rows(), d.cols()));
  for (long i = u.offset(); i <= u.last(); ++i) {
    const CMatrix& ui = u.entries()[static_cast<std::size_t>(i - u.offset())];
    for (long j = d.offset(); j <= d.last(); ++j) {
      out[static_cast<std::size_t>(i + j - lo)] += ui * d.entries()[static_cast<std::size_t>(j - d.offset())];
    }
  }
  bool all_zero = true;
  for (const auto& m : out) all_zero = all_zero && m.isZero(0.0);
  if (all_zero) return MatrixSeq(u.rows(), d.cols());
  return MatrixSeq(lo, std::move(out));
}

/// j-th derivative of the Fourier series at xi0:
/// sum_k u(k) (-ik)^j e^{-ik xi0}.
inline CMatrix fourier_deriv(const MatrixSeq& u, int j, double xi0) {
  if (j < 0 || j > 8) throw InputError("fourier_deriv: derivative order must lie in [0, 8]");
  CMatrix acc = CMatrix::Zero(u.rows(), u.cols());
  for (long k = u.offset(); k <= u.last() && !u.is_zero(); ++k) {
    const cplx factor = detail::ipow(cplx(0.0, -static_cast<double>(k)), j) *
                        std::exp(cplx(0.0, -static_cast<double>(k) * xi0));
    acc += factor * u.entries()[static_cast<std::size_t>(k - u.offset())];
  }
  return acc;
}

inline CMatrix MatrixSeq::symbol(double xi) const { return fourier_deriv(*this, 0, xi); }

/// Entrywise transpose: k -> u(k)^T.
inline MatrixSeq transpose(const MatrixSeq& u) {
  if (u.is_zero()) return MatrixSeq(u.cols(), u.rows());
  std::vector<CMatrix> e;
  for (const auto& m : u.entries()) e.push_back(m.transpose());
  return MatrixSeq(u.offset(), std::move(e));
}

/// Coefficients of conj(u^(xi)): k -> conj(u(-k)) (no transpose).
inline MatrixSeq conj_reflect(const MatrixSeq& u) {
  if (u.is_zero()) return u;
  std::vector<CMatrix> e;
  for (long k = -u.last(); k <= -u.offset(); ++k) e.push_back(u.at(-k).conjugate());
  return MatrixSeq(-u.last(), std::move(e));
}

/// Coefficients of u^(xi + pi): k -> (-1)^k u(k).
inline MatrixSeq modulate(const MatrixSeq& u) {
  if (u.is_zero()) return u;
  std::vector<CMatrix> e;
  for (long k = u.offset(); k <= u.last(); ++k) e.push_back(((k % 2 == 0) ? 1.0 : -1.0) * u.at(k));
  return MatrixSeq(u.offset(), std::move(e));
}

/// Coefficients of u^(2 xi): k -> u(k/2) for even k, zero otherwise.
inline MatrixSeq upsample(const MatrixSeq& u) {
  if (u.is_zero()) return u;
  std::vector<CMatrix> e;
  for (long k = 2 * u.offset(); k <= 2 * u.last(); ++k)
    e.push_back(k % 2 == 0 ? u.at(k / 2) : CMatrix::Zero(u.rows(), u.cols()));
  return MatrixSeq(2 * u.offset(), std::move(e));
}

/// Max coefficient-wise |u(k) - w(k)|.
inline double max_difference(const MatrixSeq& u, const MatrixSeq& w) { return (u - w).max_abs(); }

/// c(k) = tail * v(k) + finite(k), with v(k) = 1 for k >= 0 and -1 for k < 0.
struct SignLikeSeq {
  CMatrix tail;
  MatrixSeq finite;

  SignLikeSeq(CMatrix tail_coefficient, MatrixSeq finite_part)
      : tail(std::move(tail_coefficient)), finite(std::move(finite_part)) {
    if (tail.rows() != finite.rows() || tail.cols() != finite.cols())
      throw DimensionError("SignLikeSeq: tail coefficient and finite part differ in shape");
  }

  CMatrix at(long k) const { return (k >= 0 ? 1.0 : -1.0) * tail + finite.at(k); }
};

struct TailSums {
  CMatrix sum0;  ///< sum_k [c*d](k)
  CMatrix sum1;  ///< sum_k k [c*d](k)
};

inline constexpr double kMeanZeroTolerance = 1e-12;

namespace detail {
inline void require_mean_zero(const MatrixSeq& d) {
  const double m = d.symbol(0.0).cwiseAbs().maxCoeff();
  if (m > kMeanZeroTolerance) {
    std::ostringstream os;
    os << "tail convolution requires d^(0) = 0, got |d^(0)| = " << m;
    throw PreconditionError(os.str());
  }
}
}  // namespace detail

/// Explicit convolution of a sign-like sequence with a mean-zero finite
/// sequence. The result is finitely supported; both sums are taken over it.
inline TailSums tail_convolve_sums(const SignLikeSeq& c, const MatrixSeq& d) {
  if (c.tail.cols() != d.rows()) throw DimensionError("tail_convolve_sums: inner dimensions differ");
  detail::require_mean_zero(d);
  TailSums out{CMatrix::Zero(c.tail.rows(), d.cols()), CMatrix::Zero(c.tail.rows(), d.cols())};
  if (d.is_zero()) return out;
  long lo = d.offset() - 1;
  long hi = d.last() + 1;
  if (!c.finite.is_zero()) {
    lo = std::min(lo, c.finite.offset() + d.offset());
    hi = std::max(hi, c.finite.last() + d.last());
  }
  for (long n = lo; n <= hi; ++n) {
    CMatrix term = CMatrix::Zero(c.tail.rows(), d.cols());
    for (long k = d.offset(); k <= d.last(); ++k) term += c.at(n - k) * d.at(k);
    out.sum0 += term;
    out.sum1 += static_cast<double>(n) * term;
  }
  return out;
}

/// Right-hand sides of the two tail identities:
/// sum0 = -2i c_inf d^'(0),
/// sum1 = i c_inf d^'(0) + c_inf d^''(0) + i (c - c_inf v)^(0) d^'(0).
inline TailSums tail_closed_forms(const SignLikeSeq& c, const MatrixSeq& d) {
  if (c.tail.cols() != d.rows()) throw DimensionError("tail_closed_forms: inner dimensions differ");
  detail::require_mean_zero(d);
  const cplx I(0.0, 1.0);
  const CMatrix d1 = fourier_deriv(d, 1, 0.0);
  const CMatrix d2 = fourier_deriv(d, 2, 0.0);
  const CMatrix f0 = c.finite.symbol(0.0);
  return {-2.0 * I * c.tail * d1, I * c.tail * d1 + c.tail * d2 + I * f0 * d1};
}

}  // namespace gibbslab

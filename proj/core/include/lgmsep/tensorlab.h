// core/include/lgmsep/tensorlab.h

// Copyright 2026  LGMSep Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LGMSEP_TENSORLAB_H_
#define LGMSEP_TENSORLAB_H_

#include <array>
#include <vector>

#include "lgmsep/common.h"

namespace lgmsep {

// Dense complex matrix of small fixed capacity, stack allocated. Channel
// counts here are microphone-array sizes; anything past kMaxDim is out of
// scope for this library.
inline constexpr int kMaxDim = 8;

class CMat {
 public:
  CMat() : dim_(0) {}
  explicit CMat(int dim) : dim_(dim) {
    if (dim < 0 || dim > kMaxDim)
      throw InvalidInputError("CMat: dim out of range");
    data_.fill(Cplx(0.0, 0.0));
  }

  CMat(const CMat &o) : dim_(o.dim_) {
    for (int i = 0; i < dim_ * dim_; ++i) data_[i] = o.data_[i];
  }
  CMat &operator=(const CMat &o) {
    dim_ = o.dim_;
    for (int i = 0; i < dim_ * dim_; ++i) data_[i] = o.data_[i];
    return *this;
  }

  static CMat Identity(int dim) {
    CMat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  int dim() const { return dim_; }
  Cplx &operator()(int r, int c) { return data_[r * dim_ + c]; }
  const Cplx &operator()(int r, int c) const { return data_[r * dim_ + c]; }

  CMat Adjoint() const {
    CMat out(dim_);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) out(r, c) = std::conj((*this)(c, r));
    return out;
  }

  Cplx Trace() const {
    Cplx t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  double FrobeniusNorm() const {
    double s = 0.0;
    for (int i = 0; i < dim_ * dim_; ++i) s += std::norm(data_[i]);
    return std::sqrt(s);
  }

  double MaxAbs() const {
    double m = 0.0;
    for (int i = 0; i < dim_ * dim_; ++i) m = std::max(m, std::abs(data_[i]));
    return m;
  }

  CMat &operator+=(const CMat &o) {
    for (int i = 0; i < dim_ * dim_; ++i) data_[i] += o.data_[i];
    return *this;
  }
  CMat &operator-=(const CMat &o) {
    for (int i = 0; i < dim_ * dim_; ++i) data_[i] -= o.data_[i];
    return *this;
  }
  CMat &operator*=(Cplx s) {
    for (int i = 0; i < dim_ * dim_; ++i) data_[i] *= s;
    return *this;
  }

  friend CMat operator+(CMat a, const CMat &b) { return a += b; }
  friend CMat operator-(CMat a, const CMat &b) { return a -= b; }
  friend CMat operator*(CMat a, Cplx s) { return a *= s; }
  friend CMat operator*(Cplx s, CMat a) { return a *= s; }

  friend CMat operator*(const CMat &a, const CMat &b) {
    CMat out(a.dim_);
    for (int r = 0; r < a.dim_; ++r)
      for (int c = 0; c < a.dim_; ++c) {
        Cplx acc = 0.0;
        for (int k = 0; k < a.dim_; ++k) acc += a(r, k) * b(k, c);
        out(r, c) = acc;
      }
    return out;
  }

 private:
  int dim_;
  std::array<Cplx, kMaxDim * kMaxDim> data_;
};

// Hermitian matrix. Construction symmetrizes exactly (upper triangle wins,
// real diagonal), so the conjugate-symmetry invariant holds bit-for-bit.
class HermMat {
 public:
  HermMat() = default;
  explicit HermMat(int dim) : m_(dim) {}

  // Checks |M - M^H| entrywise against tol (absolute, default 1e-12 scaled
  // up for large entries) and then symmetrizes exactly.
  static HermMat FromMatrix(const CMat &m, double tol = -1.0);

  // Trusts the caller; symmetrizes exactly without the tolerance check.
  static HermMat FromMatrixUnchecked(const CMat &m);

  static HermMat Identity(int dim) {
    HermMat h;
    h.m_ = CMat::Identity(dim);
    return h;
  }

  int dim() const { return m_.dim(); }
  const CMat &mat() const { return m_; }
  const Cplx &operator()(int r, int c) const { return m_(r, c); }

 private:
  CMat m_;
};

struct EigResult {
  std::vector<double> eigenvalues;  // ascending
  CMat eigenvectors;                // unitary, column k pairs with value k
};

// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
EigResult herm_eig(const HermMat &h);

// Principal square root of a PSD matrix. Eigenvalues below
// -1e-10 * (trace/dim) raise InvalidInputError; small negatives clamp to 0.
HermMat herm_sqrt(const HermMat &h);

// Solves R * Psi * R = Omega for the PSD R, with Psi strictly PD, via
// R = Psi^{-1/2} (Psi^{1/2} Omega Psi^{1/2})^{1/2} Psi^{-1/2}.
HermMat solve_riccati(const HermMat &psi, const HermMat &omega);

// (M + M^H)/2 + eps*I.
HermMat regularize_psd(const CMat &m, double eps);

// Default diagonal loading used around spatial-covariance updates.
inline double DefaultEps(const CMat &m) {
  return 1e-7 * std::real(m.Trace()) / std::max(1, m.dim());
}

// tr(A*B) computed from the diagonal of the product only.
Cplx trace_prod(const CMat &a, const CMat &b);

// In-place Hermitian inverse via Gauss-Jordan with partial pivoting.
// Throws IllConditionedError when a pivot underflows relative to the scale.
CMat Inverse(const CMat &m);

// Cholesky M = L L^H; returns false when a pivot is <= 0 (not PD).
bool Cholesky(const CMat &m, CMat *lower);

// log det of a PD Hermitian matrix via Cholesky.
double LogDetPd(const CMat &m);

// x^H M x for an I-dim vector stored contiguously.
double QuadFormReal(const CMat &m, const Cplx *x);

}  // namespace lgmsep

#endif  // LGMSEP_TENSORLAB_H_

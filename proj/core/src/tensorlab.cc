// core/src/tensorlab.cc

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

#include "lgmsep/tensorlab.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lgmsep {

HermMat HermMat::FromMatrix(const CMat &m, double tol) {
  if (tol < 0.0) tol = 1e-12 * std::max(1.0, m.MaxAbs());
  for (int r = 0; r < m.dim(); ++r) {
    if (std::abs(std::imag(m(r, r))) > tol)
      throw InvalidInputError("HermMat: diagonal entry has imaginary part");
    for (int c = r + 1; c < m.dim(); ++c) {
      if (std::abs(m(r, c) - std::conj(m(c, r))) > tol)
        throw InvalidInputError("HermMat: input not Hermitian within tolerance");
    }
  }
  return FromMatrixUnchecked(m);
}

HermMat HermMat::FromMatrixUnchecked(const CMat &m) {
  HermMat h(m.dim());
  for (int r = 0; r < m.dim(); ++r) {
    h.m_(r, r) = 0.5 * (std::real(m(r, r)) + std::real(m(r, r)));
    for (int c = r + 1; c < m.dim(); ++c) {
      Cplx v = 0.5 * (m(r, c) + std::conj(m(c, r)));
      h.m_(r, c) = v;
      h.m_(c, r) = std::conj(v);
    }
  }
  return h;
}

namespace {

double OffDiagNorm(const CMat &a) {
  double s = 0.0;
  for (int r = 0; r < a.dim(); ++r)
    for (int c = 0; c < a.dim(); ++c)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

// One complex Jacobi rotation annihilating a(p,q). The rotation is the real
// Golub-Van-Loan symmetric Schur rotation composed with a phase that makes
// a(p,q) real first.
void JacobiRotate(CMat *a, CMat *u, int p, int q) {
  const Cplx apq = (*a)(p, q);
  const double mag = std::abs(apq);
  if (mag == 0.0) return;
  const Cplx phase = apq / mag;  // a(p,q) = mag * phase
  const double app = std::real((*a)(p, p));
  const double aqq = std::real((*a)(q, q));

  const double tau = (aqq - app) / (2.0 * mag);
  double t;
  if (tau >= 0.0)
    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
  else
    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  // Column rotation G restricted to columns (p, q):
  //   G(p,p) = c        G(p,q) = s
  //   G(q,p) = -s*e^{-i phi}   G(q,q) = c*e^{-i phi}
  const Cplx ephm = std::conj(phase);
  const int n = a->dim();
  for (int i = 0; i < n; ++i) {  // A <- A G
    const Cplx aip = (*a)(i, p), aiq = (*a)(i, q);
    (*a)(i, p) = aip * c - aiq * (s * ephm);
    (*a)(i, q) = aip * s + aiq * (c * ephm);
  }
  for (int j = 0; j < n; ++j) {  // A <- G^H A
    const Cplx apj = (*a)(p, j), aqj = (*a)(q, j);
    (*a)(p, j) = c * apj - (s * phase) * aqj;
    (*a)(q, j) = s * apj + (c * phase) * aqj;
  }
  for (int i = 0; i < n; ++i) {  // U <- U G
    const Cplx uip = (*u)(i, p), uiq = (*u)(i, q);
    (*u)(i, p) = uip * c - uiq * (s * ephm);
    (*u)(i, q) = uip * s + uiq * (c * ephm);
  }
  // Clean the rotated pair exactly.
  (*a)(p, q) = 0.0;
  (*a)(q, p) = 0.0;
  (*a)(p, p) = std::real((*a)(p, p));
  (*a)(q, q) = std::real((*a)(q, q));
}

}  // namespace

EigResult herm_eig(const HermMat &h) {
  const int n = h.dim();
  CMat a = h.mat();
  CMat u = CMat::Identity(n);
  if (n == 0) return {{}, u};

  const double scale = std::max(1e-300, a.FrobeniusNorm());
  const int kMaxSweeps = 60;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (OffDiagNorm(a) <= 1e-15 * scale) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) JacobiRotate(&a, &u, p, q);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return std::real(a(i, i)) < std::real(a(j, j));
  });

  EigResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors = CMat(n);
  for (int k = 0; k < n; ++k) {
    out.eigenvalues[k] = std::real(a(order[k], order[k]));
    for (int i = 0; i < n; ++i) out.eigenvectors(i, k) = u(i, order[k]);
  }
  return out;
}

namespace {

// U f(lambda) U^H for a spectral function f; result symmetrized exactly.
HermMat SpectralMap(const EigResult &eig, const std::vector<double> &fvals) {
  const int n = eig.eigenvectors.dim();
  CMat out(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      Cplx acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += eig.eigenvectors(r, k) * fvals[k] *
               std::conj(eig.eigenvectors(c, k));
      out(r, c) = acc;
    }
  return HermMat::FromMatrixUnchecked(out);
}

}  // namespace

HermMat herm_sqrt(const HermMat &h) {
  const int n = h.dim();
  EigResult eig = herm_eig(h);
  const double scale =
      std::abs(std::real(h.mat().Trace())) / std::max(1, n);
  std::vector<double> sq(n);
  for (int k = 0; k < n; ++k) {
    double lam = eig.eigenvalues[k];
    if (lam < -1e-10 * std::max(scale, 1e-300))
      throw InvalidInputError(
          "herm_sqrt: matrix has a negative eigenvalue beyond tolerance");
    sq[k] = std::sqrt(std::max(0.0, lam));
  }
  return SpectralMap(eig, sq);
}

HermMat solve_riccati(const HermMat &psi, const HermMat &omega) {
  const int n = psi.dim();
  if (omega.dim() != n)
    throw InvalidInputError("solve_riccati: dimension mismatch");

  EigResult eig = herm_eig(psi);
  const double lam_max = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues[n - 1];
  if (lam_max <= 0.0 || eig.eigenvalues[0] <= 1e-13 * lam_max)
    throw IllConditionedError("solve_riccati: Psi is singular");

  std::vector<double> half(n), minus_half(n);
  for (int k = 0; k < n; ++k) {
    half[k] = std::sqrt(eig.eigenvalues[k]);
    minus_half[k] = 1.0 / half[k];
  }
  const CMat psi_h = SpectralMap(eig, half).mat();
  const CMat psi_mh = SpectralMap(eig, minus_half).mat();

  const HermMat inner = HermMat::FromMatrixUnchecked(psi_h * omega.mat() * psi_h);
  const CMat inner_sqrt = herm_sqrt(inner).mat();
  return HermMat::FromMatrixUnchecked(psi_mh * inner_sqrt * psi_mh);
}

HermMat regularize_psd(const CMat &m, double eps) {
  if (eps < 0.0) throw InvalidInputError("regularize_psd: eps must be >= 0");
  CMat sym(m.dim());
  for (int r = 0; r < m.dim(); ++r)
    for (int c = 0; c < m.dim(); ++c)
      sym(r, c) = 0.5 * (m(r, c) + std::conj(m(c, r)));
  for (int i = 0; i < m.dim(); ++i) sym(i, i) += eps;
  return HermMat::FromMatrixUnchecked(sym);
}

Cplx trace_prod(const CMat &a, const CMat &b) {
  if (a.dim() != b.dim())
    throw InvalidInputError("trace_prod: dimension mismatch");
  Cplx t = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int k = 0; k < a.dim(); ++k) t += a(i, k) * b(k, i);
  return t;
}

CMat Inverse(const CMat &m) {
  const int n = m.dim();
  CMat a = m;
  CMat inv = CMat::Identity(n);
  const double scale = std::max(a.MaxAbs(), 1e-300);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a(col, col));
    for (int r = col + 1; r < n; ++r) {
      double v = std::abs(a(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best <= 1e-300 || best < 1e-15 * scale)
      throw IllConditionedError("Inverse: matrix is numerically singular");
    if (piv != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a(piv, c), a(col, c));
        std::swap(inv(piv, c), inv(col, c));
      }
    }
    const Cplx d = a(col, col);
    for (int c = 0; c < n; ++c) {
      a(col, c) /= d;
      inv(col, c) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Cplx f = a(r, col);
      if (f == Cplx(0.0, 0.0)) continue;
      for (int c = 0; c < n; ++c) {
        a(r, c) -= f * a(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

bool Cholesky(const CMat &m, CMat *lower) {
  const int n = m.dim();
  CMat l(n);
  for (int j = 0; j < n; ++j) {
    double d = std::real(m(j, j));
    for (int k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      Cplx v = m(i, j);
      for (int k = 0; k < j; ++k) v -= l(i, k) * std::conj(l(j, k));
      l(i, j) = v / ljj;
    }
  }
  *lower = l;
  return true;
}

double LogDetPd(const CMat &m) {
  CMat l;
  if (!Cholesky(m, &l))
    throw IllConditionedError("LogDetPd: matrix is not positive definite");
  double s = 0.0;
  for (int i = 0; i < m.dim(); ++i) s += std::log(std::real(l(i, i)));
  return 2.0 * s;
}

double QuadFormReal(const CMat &m, const Cplx *x) {
  Cplx acc = 0.0;
  const int n = m.dim();
  for (int r = 0; r < n; ++r) {
    Cplx row = 0.0;
    for (int c = 0; c < n; ++c) row += m(r, c) * x[c];
    acc += std::conj(x[r]) * row;
  }
  return std::real(acc);
}

}  // namespace lgmsep

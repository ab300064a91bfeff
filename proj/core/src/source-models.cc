// core/src/source-models.cc

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

#include "lgmsep/source-models.h"

#include <cmath>

namespace lgmsep {

namespace {

void CheckFinite(double t1, double t2, int f, int n) {
  if (!std::isfinite(t1) || !std::isfinite(t2))
    throw SolverDivergenceError("nonfinite update statistic at (f=" +
                                std::to_string(f) + ", n=" +
                                std::to_string(n) + ")");
}

double Floored(double x) { return x > kParamFloor ? x : kParamFloor; }

}  // namespace

NmfPerSource NmfPerSource::Init(int j, int k, int f, int n,
                                std::uint64_t seed) {
  NmfPerSource m;
  m.J = j;
  m.K = k;
  m.F = f;
  m.N = n;
  m.h.resize(static_cast<std::size_t>(j) * k * f);
  m.u.resize(static_cast<std::size_t>(j) * k * n);
  Rng rng(DeriveSeed(seed, 0xC3));
  for (auto &v : m.h) v = rng.Uniform(0.1, 1.0);
  for (auto &v : m.u) v = rng.Uniform(0.1, 1.0);
  return m;
}

NmfShared NmfShared::Init(int j, int k, int f, int n, std::uint64_t seed) {
  NmfShared m;
  m.J = j;
  m.K = k;
  m.F = f;
  m.N = n;
  m.b.assign(static_cast<std::size_t>(j) * k, 1.0 / k);
  m.h.resize(static_cast<std::size_t>(k) * f);
  m.u.resize(static_cast<std::size_t>(k) * n);
  Rng rng(DeriveSeed(seed, 0xC4));
  for (auto &v : m.h) v = rng.Uniform(0.1, 1.0);
  for (auto &v : m.u) v = rng.Uniform(0.1, 1.0);
  return m;
}

double variance_nmf1(const NmfPerSource &m, int j, int f, int n) {
  double v = 0.0;
  for (int k = 0; k < m.K; ++k) v += m.Hc(j, k, f) * m.Uc(j, k, n);
  return Floored(v);
}

double variance_nmf2(const NmfShared &m, int j, int f, int n) {
  double v = 0.0;
  for (int k = 0; k < m.K; ++k) v += m.Bc(j, k) * m.Hc(k, f) * m.Uc(k, n);
  return Floored(v);
}

VarianceField NmfPerSource::Variance() const {
  VarianceField out(J, F, N);
  for (int j = 0; j < J; ++j)
    for (int f = 0; f < F; ++f)
      for (int n = 0; n < N; ++n) out.at(j, f, n) = variance_nmf1(*this, j, f, n);
  return out;
}

VarianceField NmfShared::Variance() const {
  VarianceField out(J, F, N);
  for (int j = 0; j < J; ++j)
    for (int f = 0; f < F; ++f)
      for (int n = 0; n < N; ++n) out.at(j, f, n) = variance_nmf2(*this, j, f, n);
  return out;
}

void NmfShared::CheckRows() const {
  for (int j = 0; j < J; ++j) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += Bc(j, k);
    LGMSEP_ASSERT(std::abs(s - 1.0) <= 1e-9,
                  "indicator row does not sum to 1");
  }
}

void SweepNmf1H(NmfPerSource *m, const SolverStats &stats) {
  for (int j = 0; j < m->J; ++j)
    for (int k = 0; k < m->K; ++k)
      for (int f = 0; f < m->F; ++f) {
        double num = 0.0, den = 0.0;
        for (int n = 0; n < m->N; ++n) {
          const double t1 = stats.T1(j, f, n), t2 = stats.T2(j, f, n);
          CheckFinite(t1, t2, f, n);
          const double u = m->Uc(j, k, n);
          num += u * t1;
          den += u * t2;
        }
        if (den > 0.0 && num >= 0.0)
          m->H(j, k, f) = Floored(m->Hc(j, k, f) * std::sqrt(num / den));
      }
}

void SweepNmf1U(NmfPerSource *m, const SolverStats &stats) {
  for (int j = 0; j < m->J; ++j)
    for (int k = 0; k < m->K; ++k)
      for (int n = 0; n < m->N; ++n) {
        double num = 0.0, den = 0.0;
        for (int f = 0; f < m->F; ++f) {
          const double t1 = stats.T1(j, f, n), t2 = stats.T2(j, f, n);
          CheckFinite(t1, t2, f, n);
          const double h = m->Hc(j, k, f);
          num += h * t1;
          den += h * t2;
        }
        if (den > 0.0 && num >= 0.0)
          m->U(j, k, n) = Floored(m->Uc(j, k, n) * std::sqrt(num / den));
      }
}

void SweepNmf2B(NmfShared *m, const SolverStats &stats) {
  for (int j = 0; j < m->J; ++j)
    for (int k = 0; k < m->K; ++k) {
      double num = 0.0, den = 0.0;
      for (int f = 0; f < m->F; ++f) {
        const double h = m->Hc(k, f);
        for (int n = 0; n < m->N; ++n) {
          const double t1 = stats.T1(j, f, n), t2 = stats.T2(j, f, n);
          CheckFinite(t1, t2, f, n);
          const double hu = h * m->Uc(k, n);
          num += hu * t1;
          den += hu * t2;
        }
      }
      if (den > 0.0 && num >= 0.0)
        m->B(j, k) = Floored(m->Bc(j, k) * std::sqrt(num / den));
    }
}

void SweepNmf2H(NmfShared *m, const SolverStats &stats) {
  for (int k = 0; k < m->K; ++k)
    for (int f = 0; f < m->F; ++f) {
      double num = 0.0, den = 0.0;
      for (int j = 0; j < m->J; ++j) {
        const double b = m->Bc(j, k);
        for (int n = 0; n < m->N; ++n) {
          const double t1 = stats.T1(j, f, n), t2 = stats.T2(j, f, n);
          CheckFinite(t1, t2, f, n);
          const double bu = b * m->Uc(k, n);
          num += bu * t1;
          den += bu * t2;
        }
      }
      if (den > 0.0 && num >= 0.0)
        m->H(k, f) = Floored(m->Hc(k, f) * std::sqrt(num / den));
    }
}

void SweepNmf2U(NmfShared *m, const SolverStats &stats) {
  for (int k = 0; k < m->K; ++k)
    for (int n = 0; n < m->N; ++n) {
      double num = 0.0, den = 0.0;
      for (int j = 0; j < m->J; ++j) {
        const double b = m->Bc(j, k);
        for (int f = 0; f < m->F; ++f) {
          const double t1 = stats.T1(j, f, n), t2 = stats.T2(j, f, n);
          CheckFinite(t1, t2, f, n);
          const double bh = b * m->Hc(k, f);
          num += bh * t1;
          den += bh * t2;
        }
      }
      if (den > 0.0 && num >= 0.0)
        m->U(k, n) = Floored(m->Uc(k, n) * std::sqrt(num / den));
    }
}

void update_nmf1(NmfPerSource *m, const SolverStats &stats,
                 const StatsRefreshFn &refresh) {
  SweepNmf1H(m, stats);
  const SolverStats fresh = refresh();
  SweepNmf1U(m, fresh);
}

namespace {

// Row normalization of the indicators changes every v_j unless compensated.
// A per-template factor gamma_k applied as b <- b*gamma, h <- h/gamma leaves
// the variance field untouched, so we look for gamma > 0 with B gamma = 1
// (ridge-regularized min-norm solve; J equations, K >= J unknowns). Returns
// false when the solve is degenerate or leaves the simplex.
bool SolveRowScaling(const NmfShared &m, std::vector<double> *gamma) {
  const int J = m.J, K = m.K;
  std::vector<double> gram(static_cast<std::size_t>(J) * J, 0.0);
  for (int a = 0; a < J; ++a)
    for (int b = 0; b < J; ++b) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) s += m.Bc(a, k) * m.Bc(b, k);
      gram[a * J + b] = s;
    }
  double trace = 0.0;
  for (int a = 0; a < J; ++a) trace += gram[a * J + a];
  for (int a = 0; a < J; ++a) gram[a * J + a] += 1e-12 * std::max(trace, 1e-30);

  // Solve gram * c = 1 by Gaussian elimination.
  std::vector<double> c(J, 1.0);
  for (int col = 0; col < J; ++col) {
    int piv = col;
    for (int r = col + 1; r < J; ++r)
      if (std::abs(gram[r * J + col]) > std::abs(gram[piv * J + col])) piv = r;
    if (std::abs(gram[piv * J + col]) <= 0.0) return false;
    if (piv != col) {
      for (int cc = 0; cc < J; ++cc) std::swap(gram[piv * J + cc], gram[col * J + cc]);
      std::swap(c[piv], c[col]);
    }
    for (int r = col + 1; r < J; ++r) {
      const double f = gram[r * J + col] / gram[col * J + col];
      if (f == 0.0) continue;
      for (int cc = col; cc < J; ++cc) gram[r * J + cc] -= f * gram[col * J + cc];
      c[r] -= f * c[col];
    }
  }
  for (int r = J - 1; r >= 0; --r) {
    double v = c[r];
    for (int cc = r + 1; cc < J; ++cc) v -= gram[r * J + cc] * c[cc];
    c[r] = v / gram[r * J + r];
  }

  gamma->assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    double g = 0.0;
    for (int j = 0; j < J; ++j) g += m.Bc(j, k) * c[j];
    if (!(g > 1e-8)) return false;
    (*gamma)[k] = g;
  }
  for (int j = 0; j < J; ++j) {
    double row = 0.0;
    for (int k = 0; k < K; ++k) row += m.Bc(j, k) * (*gamma)[k];
    if (std::abs(row - 1.0) > 1e-10) return false;
  }
  return true;
}

}  // namespace

void NormalizeShared(NmfShared *m) {
  std::vector<double> gamma;
  if (SolveRowScaling(*m, &gamma)) {
    for (int j = 0; j < m->J; ++j)
      for (int k = 0; k < m->K; ++k)
        m->B(j, k) = Floored(m->Bc(j, k) * gamma[k]);
    for (int k = 0; k < m->K; ++k)
      for (int f = 0; f < m->F; ++f)
        m->H(k, f) = Floored(m->Hc(k, f) / gamma[k]);
  } else {
    // Plain row normalization; perturbs the objective, used only when the
    // compensated scaling is unavailable.
    for (int j = 0; j < m->J; ++j) {
      double s = 0.0;
      for (int k = 0; k < m->K; ++k) s += m->Bc(j, k);
      LGMSEP_ASSERT(s > 0.0, "indicator row collapsed to zero");
      for (int k = 0; k < m->K; ++k) m->B(j, k) = m->Bc(j, k) / s;
    }
  }
  // Scale fixing: unit-sum templates, factor absorbed into activations.
  for (int k = 0; k < m->K; ++k) {
    double s = 0.0;
    for (int f = 0; f < m->F; ++f) s += m->Hc(k, f);
    if (s <= 0.0) continue;
    for (int f = 0; f < m->F; ++f) m->H(k, f) = Floored(m->Hc(k, f) / s);
    for (int n = 0; n < m->N; ++n) m->U(k, n) = Floored(m->Uc(k, n) * s);
  }
  m->CheckRows();
}

void update_nmf2(NmfShared *m, const SolverStats &stats,
                 const StatsRefreshFn &refresh) {
  SweepNmf2B(m, stats);
  NormalizeShared(m);
  SolverStats fresh = refresh();
  SweepNmf2H(m, fresh);
  fresh = refresh();
  SweepNmf2U(m, fresh);
}

void update_g(VaeSourceParams *p, const SolverStats &stats, int j,
              const std::function<double(int, int)> &sigma2) {
  double num = 0.0, den = 0.0;
  for (int f = 0; f < stats.F; ++f)
    for (int n = 0; n < stats.N; ++n) {
      const double t1 = stats.T1(j, f, n), t2 = stats.T2(j, f, n);
      CheckFinite(t1, t2, f, n);
      const double s2 = sigma2(f, n);
      num += s2 * t1;
      den += s2 * t2;
    }
  if (den > 0.0 && num > 0.0) p->g *= std::sqrt(num / den);
  LGMSEP_ASSERT(std::isfinite(p->g) && p->g > 0.0,
                "global scale must stay positive and finite");
}

}  // namespace lgmsep

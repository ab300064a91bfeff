// core/include/lgmsep/source-models.h

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

#ifndef LGMSEP_SOURCE_MODELS_H_
#define LGMSEP_SOURCE_MODELS_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "lgmsep/common.h"

namespace lgmsep {

enum class SourceModelKind { kNmf1, kNmf2, kVae };

// Per-(j,f,n) statistics driving every multiplicative update. For the
// mixing-model solvers t1 = tr(Xhat^-1 X Xhat^-1 R_j) and
// t2 = tr(Xhat^-1 R_j); for the determined solver the scalar analogues
// |y_j|^2/v_j^2 and 1/v_j.
struct SolverStats {
  int J = 0, F = 0, N = 0;
  std::vector<double> t1;
  std::vector<double> t2;

  SolverStats() = default;
  SolverStats(int j, int f, int n)
      : J(j), F(f), N(n),
        t1(static_cast<std::size_t>(j) * f * n, 0.0),
        t2(static_cast<std::size_t>(j) * f * n, 0.0) {}

  std::size_t idx(int j, int f, int n) const {
    return (static_cast<std::size_t>(j) * F + f) * N + n;
  }
  double T1(int j, int f, int n) const { return t1[idx(j, f, n)]; }
  double T2(int j, int f, int n) const { return t2[idx(j, f, n)]; }
};

// Variance field v_j(f,n), layout (j*F + f)*N + n.
struct VarianceField {
  int J = 0, F = 0, N = 0;
  std::vector<double> v;

  VarianceField() = default;
  VarianceField(int j, int f, int n)
      : J(j), F(f), N(n), v(static_cast<std::size_t>(j) * f * n, 0.0) {}

  double &at(int j, int f, int n) {
    return v[(static_cast<std::size_t>(j) * F + f) * N + n];
  }
  double at(int j, int f, int n) const {
    return v[(static_cast<std::size_t>(j) * F + f) * N + n];
  }
};

// Per-source NMF model: v_j(f,n) = sum_k h_{j,k}(f) u_{j,k}(n).
struct NmfPerSource {
  int J = 0, K = 0, F = 0, N = 0;
  std::vector<double> h;  // (j*K + k)*F + f
  std::vector<double> u;  // (j*K + k)*N + n

  static NmfPerSource Init(int j, int k, int f, int n, std::uint64_t seed);

  double &H(int j, int k, int f) {
    return h[(static_cast<std::size_t>(j) * K + k) * F + f];
  }
  double Hc(int j, int k, int f) const {
    return h[(static_cast<std::size_t>(j) * K + k) * F + f];
  }
  double &U(int j, int k, int n) {
    return u[(static_cast<std::size_t>(j) * K + k) * N + n];
  }
  double Uc(int j, int k, int n) const {
    return u[(static_cast<std::size_t>(j) * K + k) * N + n];
  }

  VarianceField Variance() const;
};

// Shared-dictionary NMF with continuous indicators:
// v_j(f,n) = sum_k b_{j,k} h_k(f) u_k(n), rows of b on the simplex.
struct NmfShared {
  int J = 0, K = 0, F = 0, N = 0;
  std::vector<double> b;  // j*K + k
  std::vector<double> h;  // k*F + f
  std::vector<double> u;  // k*N + n

  static NmfShared Init(int j, int k, int f, int n, std::uint64_t seed);

  double &B(int j, int k) { return b[static_cast<std::size_t>(j) * K + k]; }
  double Bc(int j, int k) const {
    return b[static_cast<std::size_t>(j) * K + k];
  }
  double &H(int k, int f) { return h[static_cast<std::size_t>(k) * F + f]; }
  double Hc(int k, int f) const {
    return h[static_cast<std::size_t>(k) * F + f];
  }
  double &U(int k, int n) { return u[static_cast<std::size_t>(k) * N + n]; }
  double Uc(int k, int n) const {
    return u[static_cast<std::size_t>(k) * N + n];
  }

  VarianceField Variance() const;
  // Asserts every indicator row sums to 1 within 1e-9.
  void CheckRows() const;
};

// VAE-decoder source parameters for one source: per-frame latents, class
// logits, and a positive global scale.
struct VaeSourceParams {
  int D = 0, C = 0, N = 0;
  std::vector<double> z;  // n*D + d (frame-major)
  std::vector<double> d;  // C logits
  double g = 1.0;
};

double variance_nmf1(const NmfPerSource &m, int j, int f, int n);
double variance_nmf2(const NmfShared &m, int j, int f, int n);

// Callback recomputing statistics from the caller's observation and spatial
// model against the model's current variance field; invoked between sweeps.
using StatsRefreshFn = std::function<SolverStats()>;

// One full multiplicative sweep over the given factor with frozen stats.
// Throws SolverDivergenceError naming (f, n) on a nonfinite statistic.
void SweepNmf1H(NmfPerSource *m, const SolverStats &stats);
void SweepNmf1U(NmfPerSource *m, const SolverStats &stats);
void SweepNmf2B(NmfShared *m, const SolverStats &stats);
void SweepNmf2H(NmfShared *m, const SolverStats &stats);
void SweepNmf2U(NmfShared *m, const SolverStats &stats);

// h sweep, stats refresh, u sweep.
void update_nmf1(NmfPerSource *m, const SolverStats &stats,
                 const StatsRefreshFn &refresh);

// b sweep (+ row normalization and shared-scale fixing), refresh, h sweep,
// refresh, u sweep.
void update_nmf2(NmfShared *m, const SolverStats &stats,
                 const StatsRefreshFn &refresh);

// Normalizes indicator rows to sum 1; then fixes the shared scale by
// normalizing each template h_k to unit sum, absorbing the factor into u_k.
void NormalizeShared(NmfShared *m);

// Global-scale update: g <- g * sqrt(sum sigma2*t1 / sum sigma2*t2) for
// source j, with sigma2(f,n) the decoder output backing the current v.
void update_g(VaeSourceParams *p, const SolverStats &stats, int j,
              const std::function<double(int, int)> &sigma2);

}  // namespace lgmsep

#endif  // LGMSEP_SOURCE_MODELS_H_

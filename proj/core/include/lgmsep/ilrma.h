// core/include/lgmsep/ilrma.h

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

#ifndef LGMSEP_ILRMA_H_
#define LGMSEP_ILRMA_H_

#include <cstdint>
#include <vector>

#include "lgmsep/mnmf.h"
#include "lgmsep/source-models.h"
#include "lgmsep/tensorlab.h"

namespace lgmsep {

// Demixing system for the determined case (J = I): column w_j(f) extracts
// source j as y_j(f,n) = w_j(f)^H x(f,n).
struct SeparationMatrices {
  int I = 0, F = 0;
  std::vector<CMat> w;  // per frequency, columns are w_j

  SeparationMatrices() = default;
  SeparationMatrices(int i, int f)
      : I(i), F(f), w(static_cast<std::size_t>(f), CMat::Identity(i)) {}

  CMat &W(int f) { return w[f]; }
  const CMat &Wc(int f) const { return w[f]; }
};

// Exact NLL of the demixing parameterization:
// L = sum_f [-2N log|det W^H(f)|]
//   + sum_{f,n,j} [log v_j + |w_j^H x|^2 / v_j + log pi].
double neg_log_likelihood_det(const MixtureObservation &obs,
                              const SeparationMatrices &w,
                              const VarianceField &v);

// Iterative-projection update of one demixing column:
// Sigma_j(f) = (1/N) sum_n X(f,n)/v_j(f,n); w <- (W^H Sigma_j)^-1 e_j;
// w <- w / sqrt(w^H Sigma_j w). A singular system is retried with loading
// and skipped if still singular.
void ip_update(const MixtureObservation &obs, SeparationMatrices *w,
               const VarianceField &v, int j, int f);

struct IlrmaConfig {
  SourceModelKind kind = SourceModelKind::kNmf1;
  int components = 8;
  int iterations = 300;
  std::uint64_t seed = 0;
  int workers = 1;
  bool record_blocks = false;
};

struct IlrmaResult {
  SeparationMatrices demix;
  NmfPerSource nmf1;
  NmfShared nmf2;
  SourceModelKind kind = SourceModelKind::kNmf1;
  SolverTrace trace;
  // Separated spectra y_j(f,n), layout (f*N + n)*J + j, before projection.
  std::vector<Cplx> y;

  VarianceField Variance() const;
  void WriteCheckpoint(const std::string &path) const;
};

// Determined solver: IP sweeps interleaved with the NMF MM updates.
// Requires as many sources as channels.
IlrmaResult fit_ilrma(const MixtureObservation &obs, SourceModelKind kind,
                      const IlrmaConfig &cfg);

// Minimal-distortion scale restoration: source j is scaled per frequency by
// the (reference, j) entry of W^-H, so the projected sources sum to the
// reference channel of the observation.
std::vector<Spectrogram> project_back(const std::vector<Cplx> &y,
                                      const SeparationMatrices &w,
                                      const MixtureObservation &obs,
                                      int reference_channel);

}  // namespace lgmsep

#endif  // LGMSEP_ILRMA_H_

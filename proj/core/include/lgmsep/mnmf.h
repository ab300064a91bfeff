// core/include/lgmsep/mnmf.h

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

#ifndef LGMSEP_MNMF_H_
#define LGMSEP_MNMF_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lgmsep/common.h"
#include "lgmsep/neural.h"
#include "lgmsep/signal-io.h"
#include "lgmsep/source-models.h"
#include "lgmsep/tensorlab.h"

namespace lgmsep {

// Multichannel observation with precomputed rank-one outer products
// X(f,n) = x(f,n) x(f,n)^H and the STFT metadata needed to resynthesize.
struct MixtureObservation {
  int I = 0, F = 0, N = 0;
  std::vector<Cplx> x;    // (f*N + n)*I + i
  std::vector<CMat> xxh;  // f*N + n

  int frame_len = 0, hop = 0;
  Window window = Window::kSqrtHann;
  int sample_rate = 16000;
  std::size_t source_samples = 0;

  static MixtureObservation FromSpectrogram(const Spectrogram &s);

  const Cplx *xvec(int f, int n) const {
    return &x[(static_cast<std::size_t>(f) * N + n) * I];
  }
  const CMat &X(int f, int n) const {
    return xxh[static_cast<std::size_t>(f) * N + n];
  }
  // Empty spectrogram carrying this observation's STFT metadata.
  Spectrogram SpectrogramTemplate(int channels) const;
};

// Per-source per-frequency spatial covariances R_j(f), PSD.
struct SpatialModel {
  int J = 0, F = 0, I = 0;
  std::vector<CMat> r;  // j*F + f

  SpatialModel() = default;
  SpatialModel(int j, int f, int i)
      : J(j), F(f), I(i), r(static_cast<std::size_t>(j) * f, CMat(i)) {}

  CMat &R(int j, int f) { return r[static_cast<std::size_t>(j) * F + f]; }
  const CMat &Rc(int j, int f) const {
    return r[static_cast<std::size_t>(j) * F + f];
  }

  // Identity plus a per-source random rank-one bump, frequency-constant,
  // trace-normalized. Used when nothing better is known.
  static SpatialModel RandomInit(int j, int f, int i, std::uint64_t seed);
};

// Auxiliary variables of the majorizer: Wiener gains P_j(f,n) summing to the
// identity over j, and the PD matrix K(f,n) bounding the log-det term. The
// bound is tight at P_j = v_j R_j Xhat^-1 and K = Xhat (the model covariance;
// sized for analysis-scale problems, the solver itself never materializes
// them).
struct AuxiliaryVars {
  int J = 0, F = 0, N = 0, I = 0;
  std::vector<Cplx> p;  // ((j*F + f)*N + n)*I*I, row-major I x I
  std::vector<Cplx> k;  // ((f*N + n)*I*I

  AuxiliaryVars() = default;
  AuxiliaryVars(int j, int f, int n, int i)
      : J(j), F(f), N(n), I(i),
        p(static_cast<std::size_t>(j) * f * n * i * i, Cplx(0.0, 0.0)),
        k(static_cast<std::size_t>(f) * n * i * i, Cplx(0.0, 0.0)) {}

  CMat P(int j, int f, int n) const;
  void SetP(int j, int f, int n, const CMat &m);
  CMat K(int f, int n) const;
  void SetK(int f, int n, const CMat &m);
};

struct BlockRecord {
  std::string name;
  double nll_after = 0.0;
  double seconds = 0.0;
};

struct IterationRecord {
  double nll = 0.0;        // exact NLL at end of iteration
  double majorizer = 0.0;  // majorizer at refreshed auxiliaries (== nll)
  std::vector<BlockRecord> blocks;
};

struct SolverTrace {
  std::vector<IterationRecord> iterations;
  double initial_nll = 0.0;
  int skipped_bins = 0;
};

// Exact negative log-likelihood with the constant convention
// L = sum_{f,n} [ x^H Sigma^-1 x + logdet Sigma + I*log(pi) ],
// Sigma(f,n) = sum_j v_j(f,n) R_j(f). Throws IllConditionedError naming the
// frequency bin if Sigma stays singular after one round of loading.
double neg_log_likelihood(const MixtureObservation &obs, const SpatialModel &r,
                          const VarianceField &v, int workers = 1);

AuxiliaryVars refresh_aux(const MixtureObservation &obs, const SpatialModel &r,
                          const VarianceField &v);

// Majorizer value under the same constant convention, so that
// majorizer(refresh_aux(...)) equals neg_log_likelihood exactly.
double majorizer(const MixtureObservation &obs, const SpatialModel &r,
                 const VarianceField &v, const AuxiliaryVars &aux);

// t1 = tr(Xhat^-1 X Xhat^-1 R_j), t2 = tr(Xhat^-1 R_j) per (j,f,n).
SolverStats RefreshStats(const MixtureObservation &obs, const SpatialModel &r,
                         const VarianceField &v, int workers = 1);

struct SpatialUpdateReport {
  int skipped_bins = 0;
};

// Riccati update of every R_j(f) from frozen statistics, then exact
// symmetrization and diagonal loading. Frequencies where the solve fails or
// the residual exceeds 1e-6 keep their previous value for this iteration.
void update_spatial(const MixtureObservation &obs, const VarianceField &v,
                    SpatialModel *r, SpatialUpdateReport *report = nullptr,
                    int workers = 1);

struct MnmfConfig {
  SourceModelKind kind = SourceModelKind::kNmf1;
  int sources = 3;          // J
  int components = 8;       // K_j per source; shared dictionary uses J*this
  int iterations = 300;
  std::uint64_t seed = 0;
  int workers = 1;
  bool record_blocks = false;
};

struct MnmfResult {
  SourceModelKind kind = SourceModelKind::kNmf1;
  SpatialModel spatial;
  NmfPerSource nmf1;
  NmfShared nmf2;
  SolverTrace trace;

  VarianceField Variance() const;
  void WriteCheckpoint(const std::string &path) const;
  static MnmfResult ReadCheckpoint(const std::string &path);
};

// Iterative MM fit: spatial block, then source-model sweeps with statistics
// refreshed between sweeps, then exact scale renormalization. Throws
// SolverDivergenceError on nonfinite objective.
MnmfResult fit_mnmf(const MixtureObservation &obs, SourceModelKind kind,
                    const MnmfConfig &cfg);

// Multichannel Wiener images s_j(f,n) = v_j R_j Xhat^-1 x(f,n); the images
// sum to the observation exactly.
std::vector<Spectrogram> reconstruct_sources(const MixtureObservation &obs,
                                             const SpatialModel &r,
                                             const VarianceField &v);

struct GmvaeConfig {
  int sources = 3;
  int warm_start_iterations = 200;  // shared-dictionary warm start
  int warm_components = 8;          // per source
  int iterations = 100;
  int latent_steps = 10;
  double latent_lr = 5e-4;
  std::uint64_t seed = 0;
  int workers = 1;
  bool record_blocks = false;
};

struct GmvaeResult {
  SpatialModel spatial;
  std::vector<VaeSourceParams> sources;
  SolverTrace trace;
  MnmfResult warm_start;
  std::vector<std::vector<double>> sigma2;  // per source, f*N + n
  int latent_accepted = 0, latent_skipped = 0;

  VarianceField Variance() const;
  std::vector<std::vector<double>> ClassPosteriors() const;
  void WriteCheckpoint(const std::string &path) const;
};

// VAE-source-model fit warm started from the shared-dictionary solver (or
// from a caller-provided warm result). Per iteration: spatial Riccati
// update, backtracked gradient steps on each source's (z, d), then the
// closed-form g update; the majorizer never increases across accepted
// blocks.
GmvaeResult fit_gmvae(const MixtureObservation &obs, const CvaeWeights &weights,
                      const GmvaeConfig &cfg,
                      const MnmfResult *warm = nullptr);

}  // namespace lgmsep

#endif  // LGMSEP_MNMF_H_

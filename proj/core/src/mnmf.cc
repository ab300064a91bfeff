// core/src/mnmf.cc

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

#include "lgmsep/mnmf.h"

#include <chrono>
#include <cmath>

#include "lgmsep/container.h"

namespace lgmsep {

namespace {

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

CMat BuildXhat(const SpatialModel &r, const VarianceField &v, int f, int n) {
  CMat xhat(r.I);
  for (int j = 0; j < r.J; ++j) {
    const double vj = v.at(j, f, n);
    LGMSEP_ASSERT(vj > 0.0, "variance field must be strictly positive");
    const CMat &rj = r.Rc(j, f);
    for (int a = 0; a < r.I; ++a)
      for (int b = 0; b < r.I; ++b) xhat(a, b) += vj * rj(a, b);
  }
  return xhat;
}

// Inverse with one round of diagonal loading on failure; rethrows with the
// frequency bin on the second failure.
CMat InvertModelCov(const CMat &xhat, int f) {
  try {
    return Inverse(xhat);
  } catch (const IllConditionedError &) {
    CMat loaded = xhat;
    const double eps = std::max(DefaultEps(xhat), 1e-300);
    for (int i = 0; i < loaded.dim(); ++i) loaded(i, i) += eps;
    try {
      return Inverse(loaded);
    } catch (const IllConditionedError &) {
      throw IllConditionedError(
          "model covariance is singular beyond regularization at frequency "
          "bin f=" + std::to_string(f));
    }
  }
}

}  // namespace

MixtureObservation MixtureObservation::FromSpectrogram(const Spectrogram &s) {
  if (s.channels < 1 || s.channels > kMaxDim)
    throw InvalidInputError("MixtureObservation: unsupported channel count");
  MixtureObservation obs;
  obs.I = s.channels;
  obs.F = s.bins;
  obs.N = s.frames;
  obs.frame_len = s.frame_len;
  obs.hop = s.hop;
  obs.window = s.window;
  obs.sample_rate = s.sample_rate;
  obs.source_samples = s.source_samples;
  obs.x.resize(static_cast<std::size_t>(s.bins) * s.frames * s.channels);
  obs.xxh.assign(static_cast<std::size_t>(s.bins) * s.frames, CMat(s.channels));
  for (int f = 0; f < s.bins; ++f)
    for (int n = 0; n < s.frames; ++n) {
      Cplx *xv = &obs.x[(static_cast<std::size_t>(f) * s.frames + n) * s.channels];
      for (int i = 0; i < s.channels; ++i) xv[i] = s.at(f, n, i);
      CMat &xx = obs.xxh[static_cast<std::size_t>(f) * s.frames + n];
      for (int a = 0; a < s.channels; ++a)
        for (int b = 0; b < s.channels; ++b)
          xx(a, b) = xv[a] * std::conj(xv[b]);
    }
  return obs;
}

Spectrogram MixtureObservation::SpectrogramTemplate(int channels) const {
  Spectrogram s;
  s.bins = F;
  s.frames = N;
  s.channels = channels;
  s.frame_len = frame_len > 0 ? frame_len : 2 * (F - 1);
  s.hop = hop > 0 ? hop : std::max(1, (s.frame_len / 2));
  s.window = window;
  s.sample_rate = sample_rate;
  s.source_samples = source_samples;
  s.values.assign(static_cast<std::size_t>(F) * N * channels, Cplx(0.0, 0.0));
  return s;
}

SpatialModel SpatialModel::RandomInit(int j, int f, int i,
                                      std::uint64_t seed) {
  SpatialModel r(j, f, i);
  Rng rng(DeriveSeed(seed, 0xF6));
  for (int jj = 0; jj < j; ++jj) {
    std::vector<Cplx> q(i);
    double norm = 0.0;
    for (auto &v : q) {
      v = rng.ComplexNormal();
      norm += std::norm(v);
    }
    norm = std::sqrt(std::max(norm, 1e-30));
    CMat m = CMat::Identity(i);
    for (int a = 0; a < i; ++a)
      for (int b = 0; b < i; ++b)
        m(a, b) += (q[a] / norm) * std::conj(q[b] / norm);
    const double tr = std::real(m.Trace());
    m *= Cplx(static_cast<double>(i) / tr, 0.0);
    const HermMat h = HermMat::FromMatrixUnchecked(m);
    for (int ff = 0; ff < f; ++ff) r.R(jj, ff) = h.mat();
  }
  return r;
}

CMat AuxiliaryVars::P(int j, int f, int n) const {
  CMat m(I);
  const Cplx *src =
      &p[(((static_cast<std::size_t>(j) * F + f) * N) + n) * I * I];
  for (int a = 0; a < I; ++a)
    for (int b = 0; b < I; ++b) m(a, b) = src[a * I + b];
  return m;
}

void AuxiliaryVars::SetP(int j, int f, int n, const CMat &m) {
  Cplx *dst = &p[(((static_cast<std::size_t>(j) * F + f) * N) + n) * I * I];
  for (int a = 0; a < I; ++a)
    for (int b = 0; b < I; ++b) dst[a * I + b] = m(a, b);
}

CMat AuxiliaryVars::K(int f, int n) const {
  CMat m(I);
  const Cplx *src = &k[(static_cast<std::size_t>(f) * N + n) * I * I];
  for (int a = 0; a < I; ++a)
    for (int b = 0; b < I; ++b) m(a, b) = src[a * I + b];
  return m;
}

void AuxiliaryVars::SetK(int f, int n, const CMat &m) {
  Cplx *dst = &k[(static_cast<std::size_t>(f) * N + n) * I * I];
  for (int a = 0; a < I; ++a)
    for (int b = 0; b < I; ++b) dst[a * I + b] = m(a, b);
}

double neg_log_likelihood(const MixtureObservation &obs, const SpatialModel &r,
                          const VarianceField &v, int workers) {
  std::vector<double> partial(obs.F, 0.0);
  ParallelFor(obs.F, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t f = lo; f < hi; ++f) {
      double acc = 0.0;
      for (int n = 0; n < obs.N; ++n) {
        CMat sigma = BuildXhat(r, v, static_cast<int>(f), n);
        CMat l;
        if (!Cholesky(sigma, &l)) {
          const double eps = std::max(DefaultEps(sigma), 1e-300);
          for (int i = 0; i < sigma.dim(); ++i) sigma(i, i) += eps;
          if (!Cholesky(sigma, &l))
            throw IllConditionedError(
                "mixture covariance is singular at frequency bin f=" +
                std::to_string(f));
        }
        double logdet = 0.0;
        for (int i = 0; i < obs.I; ++i) logdet += std::log(std::real(l(i, i)));
        logdet *= 2.0;
        // x^H Sigma^-1 x = ||L^-1 x||^2 by forward substitution.
        const Cplx *x = obs.xvec(static_cast<int>(f), n);
        Cplx y[kMaxDim];
        double quad = 0.0;
        for (int i = 0; i < obs.I; ++i) {
          Cplx s = x[i];
          for (int k2 = 0; k2 < i; ++k2) s -= l(i, k2) * y[k2];
          y[i] = s / std::real(l(i, i));
          quad += std::norm(y[i]);
        }
        acc += quad + logdet + obs.I * std::log(kPi);
      }
      partial[f] = acc;
    }
  });
  double total = 0.0;
  for (double p : partial) total += p;
  if (!std::isfinite(total))
    throw SolverDivergenceError("neg_log_likelihood: nonfinite value");
  return total;
}

AuxiliaryVars refresh_aux(const MixtureObservation &obs, const SpatialModel &r,
                          const VarianceField &v) {
  AuxiliaryVars aux(r.J, obs.F, obs.N, obs.I);
  for (int f = 0; f < obs.F; ++f)
    for (int n = 0; n < obs.N; ++n) {
      const CMat xhat = BuildXhat(r, v, f, n);
      const CMat xinv = InvertModelCov(xhat, f);
      aux.SetK(f, n, xhat);
      CMat psum(obs.I);
      for (int j = 0; j < r.J; ++j) {
        CMat pj = r.Rc(j, f) * xinv;
        pj *= Cplx(v.at(j, f, n), 0.0);
        aux.SetP(j, f, n, pj);
        psum += pj;
      }
      // Partition of identity.
      double dev = 0.0;
      for (int a = 0; a < obs.I; ++a)
        for (int b = 0; b < obs.I; ++b)
          dev = std::max(dev, std::abs(psum(a, b) - (a == b ? 1.0 : 0.0)));
      LGMSEP_ASSERT(dev <= 1e-9, "Wiener gains must sum to the identity");
    }
  return aux;
}

double majorizer(const MixtureObservation &obs, const SpatialModel &r,
                 const VarianceField &v, const AuxiliaryVars &aux) {
  double total = 0.0;
  std::vector<CMat> rinv(static_cast<std::size_t>(r.J) * r.F, CMat(r.I));
  for (int j = 0; j < r.J; ++j)
    for (int f = 0; f < r.F; ++f)
      rinv[static_cast<std::size_t>(j) * r.F + f] = Inverse(r.Rc(j, f));

  for (int f = 0; f < obs.F; ++f)
    for (int n = 0; n < obs.N; ++n) {
      const CMat km = aux.K(f, n);
      CMat l;
      if (!Cholesky(km, &l))
        throw IllConditionedError(
            "majorizer: auxiliary K is not positive definite at bin f=" +
            std::to_string(f));
      double logdet_k = 0.0;
      for (int i = 0; i < obs.I; ++i)
        logdet_k += std::log(std::real(l(i, i)));
      logdet_k *= 2.0;
      const CMat kinv = Inverse(km);

      double acc = logdet_k - obs.I + obs.I * std::log(kPi);
      for (int j = 0; j < r.J; ++j) {
        const CMat pj = aux.P(j, f, n);
        // tr(P X P^H R^-1) = (P x)^H R^-1 (P x).
        const Cplx *x = obs.xvec(f, n);
        Cplx px[kMaxDim];
        for (int a = 0; a < obs.I; ++a) {
          Cplx s = 0.0;
          for (int b = 0; b < obs.I; ++b) s += pj(a, b) * x[b];
          px[a] = s;
        }
        const double quad =
            QuadFormReal(rinv[static_cast<std::size_t>(j) * r.F + f], px);
        acc += quad / v.at(j, f, n) +
               v.at(j, f, n) *
                   std::real(trace_prod(kinv, r.Rc(j, f)));
      }
      total += acc;
    }
  return total;
}

SolverStats RefreshStats(const MixtureObservation &obs, const SpatialModel &r,
                         const VarianceField &v, int workers) {
  SolverStats stats(r.J, obs.F, obs.N);
  ParallelFor(obs.F, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t f = lo; f < hi; ++f) {
      for (int n = 0; n < obs.N; ++n) {
        const CMat xhat = BuildXhat(r, v, static_cast<int>(f), n);
        const CMat xinv = InvertModelCov(xhat, static_cast<int>(f));
        const CMat mid = xinv * obs.X(static_cast<int>(f), n) * xinv;
        for (int j = 0; j < r.J; ++j) {
          stats.t1[stats.idx(j, static_cast<int>(f), n)] =
              std::real(trace_prod(mid, r.Rc(j, static_cast<int>(f))));
          stats.t2[stats.idx(j, static_cast<int>(f), n)] =
              std::real(trace_prod(xinv, r.Rc(j, static_cast<int>(f))));
        }
      }
    }
  });
  return stats;
}

void update_spatial(const MixtureObservation &obs, const VarianceField &v,
                    SpatialModel *r, SpatialUpdateReport *report,
                    int workers) {
  std::vector<int> skipped(obs.F, 0);
  ParallelFor(obs.F, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t f = lo; f < hi; ++f) {
      // Accumulate Psi_j and the inner sum of Omega_j over frames.
      std::vector<CMat> psi(r->J, CMat(obs.I));
      std::vector<CMat> phi(r->J, CMat(obs.I));
      for (int n = 0; n < obs.N; ++n) {
        const CMat xhat = BuildXhat(*r, v, static_cast<int>(f), n);
        const CMat xinv = InvertModelCov(xhat, static_cast<int>(f));
        const CMat mid = xinv * obs.X(static_cast<int>(f), n) * xinv;
        for (int j = 0; j < r->J; ++j) {
          const double vj = v.at(j, static_cast<int>(f), n);
          for (int a = 0; a < obs.I; ++a)
            for (int b = 0; b < obs.I; ++b) {
              psi[j](a, b) += vj * xinv(a, b);
              phi[j](a, b) += vj * mid(a, b);
            }
        }
      }

      std::vector<CMat> fresh(r->J, CMat(obs.I));
      bool ok = true;
      for (int j = 0; j < r->J && ok; ++j) {
        const CMat &rold = r->Rc(j, static_cast<int>(f));
        const HermMat psi_h = regularize_psd(psi[j], 0.0);
        const HermMat omega_h =
            regularize_psd(rold * phi[j] * rold, 0.0);
        try {
          const HermMat sol = solve_riccati(psi_h, omega_h);
          // Residual check before committing.
          const CMat res = sol.mat() * psi_h.mat() * sol.mat() - omega_h.mat();
          const double rel =
              res.FrobeniusNorm() /
              std::max(1.0, omega_h.mat().FrobeniusNorm());
          if (!(rel <= 1e-6)) {
            ok = false;
            break;
          }
          fresh[j] =
              regularize_psd(sol.mat(), DefaultEps(sol.mat())).mat();
        } catch (const IllConditionedError &) {
          ok = false;
        } catch (const InvalidInputError &) {
          ok = false;
        }
      }
      if (ok) {
        for (int j = 0; j < r->J; ++j)
          r->R(j, static_cast<int>(f)) = fresh[j];
      } else {
        skipped[f] = 1;  // keep previous value this iteration
      }
    }
  });
  if (report != nullptr) {
    report->skipped_bins = 0;
    for (int s : skipped) report->skipped_bins += s;
  }
}

VarianceField MnmfResult::Variance() const {
  return kind == SourceModelKind::kNmf1 ? nmf1.Variance() : nmf2.Variance();
}

namespace {

// Exact per-iteration renormalization fixing the v*R scale split.
// Per-source-per-frequency traces go into the per-source templates; the
// shared dictionary only admits a j-independent per-frequency factor.
void RenormalizeNmf1(SpatialModel *r, NmfPerSource *m) {
  for (int j = 0; j < r->J; ++j)
    for (int f = 0; f < r->F; ++f) {
      CMat &rj = r->R(j, f);
      const double t = std::real(rj.Trace()) / r->I;
      if (!(t > 0.0)) continue;
      rj *= Cplx(1.0 / t, 0.0);
      for (int k = 0; k < m->K; ++k) m->H(j, k, f) = m->Hc(j, k, f) * t;
    }
}

void RenormalizeNmf2(SpatialModel *r, NmfShared *m) {
  for (int f = 0; f < r->F; ++f) {
    double mean_t = 0.0;
    for (int j = 0; j < r->J; ++j)
      mean_t += std::real(r->Rc(j, f).Trace()) / r->I;
    mean_t /= r->J;
    if (!(mean_t > 0.0)) continue;
    for (int j = 0; j < r->J; ++j) r->R(j, f) *= Cplx(1.0 / mean_t, 0.0);
    for (int k = 0; k < m->K; ++k) m->H(k, f) = m->Hc(k, f) * mean_t;
  }
}

}  // namespace

MnmfResult fit_mnmf(const MixtureObservation &obs, SourceModelKind kind,
                    const MnmfConfig &cfg) {
  if (kind == SourceModelKind::kVae)
    throw InvalidInputError("fit_mnmf: use fit_gmvae for the VAE source model");
  if (cfg.sources < 1) throw InvalidInputError("fit_mnmf: sources < 1");

  MnmfResult res;
  res.kind = kind;
  res.spatial =
      SpatialModel::RandomInit(cfg.sources, obs.F, obs.I, cfg.seed);
  if (kind == SourceModelKind::kNmf1) {
    res.nmf1 = NmfPerSource::Init(cfg.sources, cfg.components, obs.F, obs.N,
                                  cfg.seed);
  } else {
    res.nmf2 = NmfShared::Init(cfg.sources, cfg.sources * cfg.components,
                               obs.F, obs.N, cfg.seed);
  }

  VarianceField v = res.Variance();
  res.trace.initial_nll = neg_log_likelihood(obs, res.spatial, v, cfg.workers);

  for (int it = 0; it < cfg.iterations; ++it) {
    IterationRecord rec;

    auto t0 = std::chrono::steady_clock::now();
    SpatialUpdateReport srep;
    update_spatial(obs, v, &res.spatial, &srep, cfg.workers);
    res.trace.skipped_bins += srep.skipped_bins;
    if (cfg.record_blocks) {
      rec.blocks.push_back(
          {"spatial", neg_log_likelihood(obs, res.spatial, v, cfg.workers),
           Seconds(t0)});
    }

    t0 = std::chrono::steady_clock::now();
    const SolverStats stats = RefreshStats(obs, res.spatial, v, cfg.workers);
    if (kind == SourceModelKind::kNmf1) {
      update_nmf1(&res.nmf1, stats, [&]() {
        return RefreshStats(obs, res.spatial, res.nmf1.Variance(),
                            cfg.workers);
      });
      v = res.nmf1.Variance();
    } else {
      update_nmf2(&res.nmf2, stats, [&]() {
        return RefreshStats(obs, res.spatial, res.nmf2.Variance(),
                            cfg.workers);
      });
      v = res.nmf2.Variance();
    }
    if (cfg.record_blocks) {
      rec.blocks.push_back(
          {"source-model",
           neg_log_likelihood(obs, res.spatial, v, cfg.workers),
           Seconds(t0)});
    }

    if (kind == SourceModelKind::kNmf1) {
      RenormalizeNmf1(&res.spatial, &res.nmf1);
      v = res.nmf1.Variance();
    } else {
      RenormalizeNmf2(&res.spatial, &res.nmf2);
      v = res.nmf2.Variance();
    }

    rec.nll = neg_log_likelihood(obs, res.spatial, v, cfg.workers);
    if (!std::isfinite(rec.nll))
      throw SolverDivergenceError("fit_mnmf: nonfinite objective at iteration " +
                                  std::to_string(it));
    // Majorizer is tight at refreshed auxiliaries; evaluate it explicitly on
    // small problems as a running self-check.
    if (static_cast<std::size_t>(obs.F) * obs.N <= 4096) {
      rec.majorizer = majorizer(obs, res.spatial, v,
                                refresh_aux(obs, res.spatial, v));
    } else {
      rec.majorizer = rec.nll;
    }
    res.trace.iterations.push_back(std::move(rec));
  }
  return res;
}

std::vector<Spectrogram> reconstruct_sources(const MixtureObservation &obs,
                                             const SpatialModel &r,
                                             const VarianceField &v) {
  std::vector<Spectrogram> out(r.J, Spectrogram{});
  for (int j = 0; j < r.J; ++j) out[j] = obs.SpectrogramTemplate(obs.I);

  for (int f = 0; f < obs.F; ++f)
    for (int n = 0; n < obs.N; ++n) {
      const CMat xhat = BuildXhat(r, v, f, n);
      const CMat xinv = InvertModelCov(xhat, f);
      const Cplx *x = obs.xvec(f, n);
      Cplx xw[kMaxDim];
      for (int a = 0; a < obs.I; ++a) {
        Cplx s = 0.0;
        for (int b = 0; b < obs.I; ++b) s += xinv(a, b) * x[b];
        xw[a] = s;
      }
      for (int j = 0; j < r.J; ++j) {
        const CMat &rj = r.Rc(j, f);
        const double vj = v.at(j, f, n);
        for (int a = 0; a < obs.I; ++a) {
          Cplx s = 0.0;
          for (int b = 0; b < obs.I; ++b) s += rj(a, b) * xw[b];
          out[j].at(f, n, a) = vj * s;
        }
      }
    }
  return out;
}

namespace {

std::vector<double> CmatsToFlat(const std::vector<CMat> &ms, int dim) {
  std::vector<double> flat;
  flat.reserve(ms.size() * dim * dim * 2);
  for (const auto &m : ms)
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        flat.push_back(m(a, b).real());
        flat.push_back(m(a, b).imag());
      }
  return flat;
}

std::vector<CMat> FlatToCmats(const std::vector<double> &flat, int count,
                              int dim) {
  std::vector<CMat> ms(count, CMat(dim));
  std::size_t idx = 0;
  for (auto &m : ms)
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        m(a, b) = Cplx(flat[idx], flat[idx + 1]);
        idx += 2;
      }
  return ms;
}

std::vector<double> TraceNll(const SolverTrace &t) {
  std::vector<double> out;
  out.push_back(t.initial_nll);
  for (const auto &it : t.iterations) out.push_back(it.nll);
  return out;
}

}  // namespace

void MnmfResult::WriteCheckpoint(const std::string &path) const {
  TensorContainer c("LGMK", 1);
  const double kind_tag = kind == SourceModelKind::kNmf1 ? 1.0 : 2.0;
  c.Add("meta", {5},
        {kind_tag, static_cast<double>(spatial.J),
         static_cast<double>(spatial.F),
         static_cast<double>(spatial.I),
         static_cast<double>(kind == SourceModelKind::kNmf1 ? nmf1.K
                                                            : nmf2.K)});
  c.Add("spatial", {spatial.r.size(),
                    static_cast<std::uint64_t>(spatial.I) * spatial.I * 2},
        CmatsToFlat(spatial.r, spatial.I));
  if (kind == SourceModelKind::kNmf1) {
    c.Add("nmf1.h", {nmf1.h.size()}, nmf1.h);
    c.Add("nmf1.u", {nmf1.u.size()}, nmf1.u);
    c.AddScalar("nmf1.n", nmf1.N);
  } else {
    c.Add("nmf2.b", {nmf2.b.size()}, nmf2.b);
    c.Add("nmf2.h", {nmf2.h.size()}, nmf2.h);
    c.Add("nmf2.u", {nmf2.u.size()}, nmf2.u);
    c.AddScalar("nmf2.n", nmf2.N);
  }
  c.Add("trace.nll", {TraceNll(trace).size()}, TraceNll(trace));
  c.WriteFile(path);
}

MnmfResult MnmfResult::ReadCheckpoint(const std::string &path) {
  TensorContainer c = TensorContainer::ReadFile(path, "LGMK", 1);
  const auto &meta = c.Get("meta").values;
  if (meta.size() != 5) throw IoError(path + ": malformed meta tensor");
  MnmfResult res;
  res.kind = meta[0] == 1.0 ? SourceModelKind::kNmf1 : SourceModelKind::kNmf2;
  const int J = static_cast<int>(meta[1]);
  const int F = static_cast<int>(meta[2]);
  const int I = static_cast<int>(meta[3]);
  const int K = static_cast<int>(meta[4]);
  res.spatial = SpatialModel(J, F, I);
  res.spatial.r = FlatToCmats(c.Get("spatial").values, J * F, I);
  if (res.kind == SourceModelKind::kNmf1) {
    res.nmf1.J = J;
    res.nmf1.K = K;
    res.nmf1.F = F;
    res.nmf1.N = static_cast<int>(c.GetScalar("nmf1.n"));
    res.nmf1.h = c.Get("nmf1.h").values;
    res.nmf1.u = c.Get("nmf1.u").values;
  } else {
    res.nmf2.J = J;
    res.nmf2.K = K;
    res.nmf2.F = F;
    res.nmf2.N = static_cast<int>(c.GetScalar("nmf2.n"));
    res.nmf2.b = c.Get("nmf2.b").values;
    res.nmf2.h = c.Get("nmf2.h").values;
    res.nmf2.u = c.Get("nmf2.u").values;
  }
  const auto &nll = c.Get("trace.nll").values;
  if (!nll.empty()) {
    res.trace.initial_nll = nll[0];
    for (std::size_t i = 1; i < nll.size(); ++i) {
      IterationRecord rec;
      rec.nll = nll[i];
      rec.majorizer = nll[i];
      res.trace.iterations.push_back(rec);
    }
  }
  return res;
}

}  // namespace lgmsep

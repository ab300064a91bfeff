// core/src/ilrma.cc

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

#include "lgmsep/ilrma.h"

#include <cmath>

#include "lgmsep/container.h"

namespace lgmsep {

namespace {

// log |det W^H| with sign discarded; Gaussian elimination on a copy.
double LogAbsDet(const CMat &m) {
  const int n = m.dim();
  CMat a = m;
  double logdet = 0.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a(col, col));
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > best) {
        best = std::abs(a(r, col));
        piv = r;
      }
    if (best <= 0.0) return -std::numeric_limits<double>::infinity();
    if (piv != col)
      for (int c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
    logdet += std::log(best);
    const Cplx d = a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const Cplx fct = a(r, col) / d;
      if (fct == Cplx(0.0, 0.0)) continue;
      for (int c = col; c < n; ++c) a(r, c) -= fct * a(col, c);
    }
  }
  return logdet;
}

Cplx DemixOne(const CMat &w, const Cplx *x, int j, int dim) {
  Cplx acc = 0.0;
  for (int i = 0; i < dim; ++i) acc += std::conj(w(i, j)) * x[i];
  return acc;
}

}  // namespace

double neg_log_likelihood_det(const MixtureObservation &obs,
                              const SeparationMatrices &w,
                              const VarianceField &v) {
  const int I = obs.I;
  double total = 0.0;
  for (int f = 0; f < obs.F; ++f) {
    const CMat wh = w.Wc(f).Adjoint();
    total += -2.0 * obs.N * LogAbsDet(wh);
    for (int n = 0; n < obs.N; ++n) {
      const Cplx *x = obs.xvec(f, n);
      for (int j = 0; j < I; ++j) {
        const double vj = v.at(j, f, n);
        LGMSEP_ASSERT(vj > 0.0, "variance field must be strictly positive");
        const double power = std::norm(DemixOne(w.Wc(f), x, j, I));
        total += std::log(vj) + power / vj + std::log(kPi);
      }
    }
  }
  if (!std::isfinite(total))
    throw SolverDivergenceError("neg_log_likelihood_det: nonfinite value");
  return total;
}

void ip_update(const MixtureObservation &obs, SeparationMatrices *w,
               const VarianceField &v, int j, int f) {
  const int I = obs.I;
  // Weighted covariance Sigma_j(f).
  CMat sigma(I);
  for (int n = 0; n < obs.N; ++n) {
    const double vj = v.at(j, f, n);
    const CMat &xx = obs.X(f, n);
    for (int a = 0; a < I; ++a)
      for (int b = 0; b < I; ++b) sigma(a, b) += xx(a, b) / vj;
  }
  sigma *= Cplx(1.0 / obs.N, 0.0);

  auto try_solve = [&](const CMat &sig) -> bool {
    const CMat wh = w->Wc(f).Adjoint();
    CMat sys = wh * sig;
    CMat inv;
    try {
      inv = Inverse(sys);
    } catch (const IllConditionedError &) {
      return false;
    }
    Cplx col[kMaxDim];
    for (int i = 0; i < I; ++i) col[i] = inv(i, j);  // (W^H Sigma)^-1 e_j
    const double quad = QuadFormReal(sig, col);
    if (!(quad > 0.0) || !std::isfinite(quad)) return false;
    const double scale = 1.0 / std::sqrt(quad);
    for (int i = 0; i < I; ++i) w->W(f)(i, j) = col[i] * scale;
    return true;
  };

  if (try_solve(sigma)) return;
  CMat loaded = sigma;
  const double eps = std::max(DefaultEps(sigma), 1e-300);
  for (int i = 0; i < I; ++i) loaded(i, i) += eps;
  try_solve(loaded);  // on repeated failure keep the previous column
}

VarianceField IlrmaResult::Variance() const {
  return kind == SourceModelKind::kNmf1 ? nmf1.Variance() : nmf2.Variance();
}

IlrmaResult fit_ilrma(const MixtureObservation &obs, SourceModelKind kind,
                      const IlrmaConfig &cfg) {
  if (kind == SourceModelKind::kVae)
    throw InvalidInputError("fit_ilrma: VAE source model is not supported");
  const int I = obs.I;

  IlrmaResult res;
  res.kind = kind;
  res.demix = SeparationMatrices(I, obs.F);
  if (kind == SourceModelKind::kNmf1)
    res.nmf1 = NmfPerSource::Init(I, cfg.components, obs.F, obs.N, cfg.seed);
  else
    res.nmf2 = NmfShared::Init(I, I * cfg.components, obs.F, obs.N, cfg.seed);

  // Scalar statistics t1 = |y|^2/v^2 and t2 = 1/v for the NMF sweeps.
  auto scalar_stats = [&](const VarianceField &v) {
    SolverStats stats(I, obs.F, obs.N);
    for (int f = 0; f < obs.F; ++f)
      for (int n = 0; n < obs.N; ++n) {
        const Cplx *x = obs.xvec(f, n);
        for (int j = 0; j < I; ++j) {
          const double power = std::norm(DemixOne(res.demix.Wc(f), x, j, I));
          const double vj = v.at(j, f, n);
          stats.t1[stats.idx(j, f, n)] = power / (vj * vj);
          stats.t2[stats.idx(j, f, n)] = 1.0 / vj;
        }
      }
    return stats;
  };

  VarianceField v = res.Variance();
  res.trace.initial_nll = neg_log_likelihood_det(obs, res.demix, v);

  for (int it = 0; it < cfg.iterations; ++it) {
    IterationRecord rec;

    // IP sweep, sources then frequencies.
    ParallelFor(obs.F, cfg.workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t f = lo; f < hi; ++f)
        for (int j = 0; j < I; ++j)
          ip_update(obs, &res.demix, v, j, static_cast<int>(f));
    });
    if (cfg.record_blocks)
      rec.blocks.push_back(
          {"ip", neg_log_likelihood_det(obs, res.demix, v), 0.0});

    // NMF block with refreshed scalar statistics.
    const SolverStats stats = scalar_stats(v);
    if (kind == SourceModelKind::kNmf1) {
      update_nmf1(&res.nmf1, stats,
                  [&]() { return scalar_stats(res.nmf1.Variance()); });
      v = res.nmf1.Variance();
    } else {
      update_nmf2(&res.nmf2, stats,
                  [&]() { return scalar_stats(res.nmf2.Variance()); });
      v = res.nmf2.Variance();
    }

    rec.nll = neg_log_likelihood_det(obs, res.demix, v);
    rec.majorizer = rec.nll;
    if (!std::isfinite(rec.nll))
      throw SolverDivergenceError(
          "fit_ilrma: nonfinite objective at iteration " + std::to_string(it));
    res.trace.iterations.push_back(std::move(rec));
  }

  res.y.assign(static_cast<std::size_t>(obs.F) * obs.N * I, Cplx(0.0, 0.0));
  for (int f = 0; f < obs.F; ++f)
    for (int n = 0; n < obs.N; ++n) {
      const Cplx *x = obs.xvec(f, n);
      for (int j = 0; j < I; ++j)
        res.y[(static_cast<std::size_t>(f) * obs.N + n) * I + j] =
            DemixOne(res.demix.Wc(f), x, j, I);
    }
  return res;
}

std::vector<Spectrogram> project_back(const std::vector<Cplx> &y,
                                      const SeparationMatrices &w,
                                      const MixtureObservation &obs,
                                      int reference_channel) {
  const int I = obs.I;
  if (reference_channel < 0 || reference_channel >= I)
    throw InvalidInputError("project_back: bad reference channel");
  if (y.size() != static_cast<std::size_t>(obs.F) * obs.N * I)
    throw InvalidInputError("project_back: separated tensor has wrong shape");

  std::vector<Spectrogram> out(I, Spectrogram{});
  for (int j = 0; j < I; ++j) out[j] = obs.SpectrogramTemplate(1);

  for (int f = 0; f < obs.F; ++f) {
    // Mixing estimate A = (W^H)^-1; row `reference_channel` rescales.
    const CMat a = Inverse(w.Wc(f).Adjoint());
    for (int n = 0; n < obs.N; ++n)
      for (int j = 0; j < I; ++j)
        out[j].at(f, n, 0) =
            a(reference_channel, j) *
            y[(static_cast<std::size_t>(f) * obs.N + n) * I + j];
  }
  return out;
}

void IlrmaResult::WriteCheckpoint(const std::string &path) const {
  TensorContainer c("LGMK", 1);
  const double kind_tag = kind == SourceModelKind::kNmf1 ? 1.0 : 2.0;
  const int K = kind == SourceModelKind::kNmf1 ? nmf1.K : nmf2.K;
  c.Add("meta", {5},
        {10.0 + kind_tag, static_cast<double>(demix.I),
         static_cast<double>(demix.F), static_cast<double>(demix.I),
         static_cast<double>(K)});
  std::vector<double> flat;
  for (const auto &m : demix.w)
    for (int a = 0; a < demix.I; ++a)
      for (int b = 0; b < demix.I; ++b) {
        flat.push_back(m(a, b).real());
        flat.push_back(m(a, b).imag());
      }
  c.Add("demix", {flat.size()}, flat);
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
  std::vector<double> nll;
  nll.push_back(trace.initial_nll);
  for (const auto &itrec : trace.iterations) nll.push_back(itrec.nll);
  c.Add("trace.nll", {nll.size()}, nll);
  c.WriteFile(path);
}

}  // namespace lgmsep

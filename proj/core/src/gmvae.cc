// core/src/gmvae.cc

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

#include <chrono>
#include <cmath>

#include "lgmsep/container.h"
#include "lgmsep/mnmf.h"

namespace lgmsep {

namespace {

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Frame-major (n,f) decoder output -> bin-major (f,n) variance rows.
void FillVariance(VarianceField *v, int j, double g,
                  const std::vector<double> &sigma2_nf, int F, int N) {
  for (int n = 0; n < N; ++n)
    for (int f = 0; f < F; ++f) {
      const double val = g * sigma2_nf[static_cast<std::size_t>(n) * F + f];
      v->at(j, f, n) = val > kParamFloor ? val : kParamFloor;
    }
}

// Majorizer source term sum_{f,n} a/v + v*b with v = g*sigma2.
double SourceTerm(const std::vector<double> &a_fn,
                  const std::vector<double> &b_fn,
                  const std::vector<double> &sigma2_nf, double g, int F,
                  int N) {
  double acc = 0.0;
  for (int f = 0; f < F; ++f)
    for (int n = 0; n < N; ++n) {
      const double v =
          std::max(g * sigma2_nf[static_cast<std::size_t>(n) * F + f],
                   kParamFloor);
      const std::size_t i = static_cast<std::size_t>(f) * N + n;
      acc += a_fn[i] / v + v * b_fn[i];
    }
  return acc;
}

}  // namespace

VarianceField GmvaeResult::Variance() const {
  const int J = static_cast<int>(sources.size());
  const int F = spatial.F;
  const int N = sources.empty() ? 0 : sources[0].N;
  VarianceField v(J, F, N);
  for (int j = 0; j < J; ++j)
    FillVariance(&v, j, sources[j].g, sigma2[j], F, N);
  return v;
}

std::vector<std::vector<double>> GmvaeResult::ClassPosteriors() const {
  std::vector<std::vector<double>> out;
  out.reserve(sources.size());
  for (const auto &s : sources) out.push_back(softmax(s.d));
  return out;
}

GmvaeResult fit_gmvae(const MixtureObservation &obs,
                      const CvaeWeights &weights, const GmvaeConfig &cfg,
                      const MnmfResult *warm) {
  if (weights.spec_dim != obs.F)
    throw InvalidInputError(
        "fit_gmvae: decoder spectral dimension does not match observation");
  const int J = cfg.sources, F = obs.F, N = obs.N;
  const int D = weights.latent_dim, C = weights.class_dim;

  GmvaeResult res;

  // Warm start with the shared-dictionary model.
  if (warm != nullptr) {
    res.warm_start = *warm;
    if (warm->spatial.J != J || warm->spatial.F != F)
      throw InvalidInputError("fit_gmvae: warm start has wrong shape");
  } else {
    MnmfConfig mc;
    mc.kind = SourceModelKind::kNmf2;
    mc.sources = J;
    mc.components = cfg.warm_components;
    mc.iterations = cfg.warm_start_iterations;
    mc.seed = cfg.seed;
    mc.workers = cfg.workers;
    res.warm_start = fit_mnmf(obs, SourceModelKind::kNmf2, mc);
  }
  res.spatial = res.warm_start.spatial;

  // Latent init: encoder mean of the warm-start Wiener power estimates,
  // channel-averaged and normalized to unit mean like the training features.
  const VarianceField v_warm = res.warm_start.Variance();
  const auto images = reconstruct_sources(obs, res.spatial, v_warm);
  res.sources.assign(J, VaeSourceParams{});
  res.sigma2.assign(J, {});
  const std::vector<double> uniform_cls(C, 1.0 / C);
  std::vector<DecoderCache> dec_caches(J);

  for (int j = 0; j < J; ++j) {
    std::vector<double> feats(static_cast<std::size_t>(N) * F, 0.0);
    double mean = 0.0;
    for (int f = 0; f < F; ++f)
      for (int n = 0; n < N; ++n) {
        double pw = 0.0;
        for (int i = 0; i < obs.I; ++i) pw += std::norm(images[j].at(f, n, i));
        pw /= obs.I;
        feats[static_cast<std::size_t>(n) * F + f] = pw;
        mean += pw;
      }
    mean /= static_cast<double>(F) * N;
    if (mean > 0.0)
      for (auto &x : feats) x /= mean;

    EncoderOut enc = encoder_forward(weights, feats, uniform_cls, N);
    VaeSourceParams &p = res.sources[j];
    p.D = D;
    p.C = C;
    p.N = N;
    p.z = enc.mu;
    p.d.assign(C, 0.0);
    p.g = 1.0;
    res.sigma2[j] =
        decoder_forward(weights, p.z, softmax(p.d), N, &dec_caches[j]);
  }

  // One closed-form g update from g = 1.
  {
    VarianceField v(J, F, N);
    for (int j = 0; j < J; ++j)
      FillVariance(&v, j, res.sources[j].g, res.sigma2[j], F, N);
    const SolverStats stats = RefreshStats(obs, res.spatial, v, cfg.workers);
    for (int j = 0; j < J; ++j)
      update_g(&res.sources[j], stats, j, [&](int f, int n) {
        return res.sigma2[j][static_cast<std::size_t>(n) * F + f];
      });
  }

  VarianceField v(J, F, N);
  for (int j = 0; j < J; ++j)
    FillVariance(&v, j, res.sources[j].g, res.sigma2[j], F, N);
  res.trace.initial_nll = neg_log_likelihood(obs, res.spatial, v, cfg.workers);

  for (int it = 0; it < cfg.iterations; ++it) {
    IterationRecord rec;

    // Spatial block.
    auto t0 = std::chrono::steady_clock::now();
    SpatialUpdateReport srep;
    update_spatial(obs, v, &res.spatial, &srep, cfg.workers);
    res.trace.skipped_bins += srep.skipped_bins;
    if (cfg.record_blocks)
      rec.blocks.push_back(
          {"spatial", neg_log_likelihood(obs, res.spatial, v, cfg.workers),
           Seconds(t0)});

    // Latent/class block: frozen statistics, per-source backtracked steps.
    t0 = std::chrono::steady_clock::now();
    const SolverStats stats = RefreshStats(obs, res.spatial, v, cfg.workers);
    for (int j = 0; j < J; ++j) {
      VaeSourceParams &p = res.sources[j];
      // a = v_cur^2 * t1 and b = t2 define this source's majorizer term.
      std::vector<double> a_fn(static_cast<std::size_t>(F) * N);
      std::vector<double> b_fn(static_cast<std::size_t>(F) * N);
      for (int f = 0; f < F; ++f)
        for (int n = 0; n < N; ++n) {
          const std::size_t i = static_cast<std::size_t>(f) * N + n;
          const double vc = v.at(j, f, n);
          a_fn[i] = vc * vc * stats.T1(j, f, n);
          b_fn[i] = stats.T2(j, f, n);
        }

      auto objective = [&](const VaeSourceParams &cand) {
        const auto s2 = decoder_forward(weights, cand.z, softmax(cand.d), N);
        return SourceTerm(a_fn, b_fn, s2, cand.g, F, N);
      };

      double value = SourceTerm(a_fn, b_fn, res.sigma2[j], p.g, F, N);
      for (int step = 0; step < cfg.latent_steps; ++step) {
        // Gradient of the source term through the decoder at the current
        // point (cache kept in sync with p).
        std::vector<double> dsigma2(static_cast<std::size_t>(N) * F);
        for (int n = 0; n < N; ++n)
          for (int f = 0; f < F; ++f) {
            const std::size_t nf = static_cast<std::size_t>(n) * F + f;
            const std::size_t i = static_cast<std::size_t>(f) * N + n;
            const double vv = std::max(p.g * res.sigma2[j][nf], kParamFloor);
            dsigma2[nf] = p.g * (-a_fn[i] / (vv * vv) + b_fn[i]);
          }
        DecoderInputGrads ig =
            DecoderBackwardInputs(weights, dec_caches[j], dsigma2);
        const std::vector<double> cls = softmax(p.d);
        const std::vector<double> dd = SoftmaxBackward(cls, ig.dc);

        const bool accepted =
            latent_step(&p, ig.dz, dd, cfg.latent_lr, objective, &value);
        if (accepted) {
          ++res.latent_accepted;
          res.sigma2[j] =
              decoder_forward(weights, p.z, softmax(p.d), N, &dec_caches[j]);
        } else {
          ++res.latent_skipped;
        }
      }
      FillVariance(&v, j, p.g, res.sigma2[j], F, N);
    }
    if (cfg.record_blocks)
      rec.blocks.push_back(
          {"latent", neg_log_likelihood(obs, res.spatial, v, cfg.workers),
           Seconds(t0)});

    // Closed-form global-scale block.
    t0 = std::chrono::steady_clock::now();
    const SolverStats stats2 = RefreshStats(obs, res.spatial, v, cfg.workers);
    for (int j = 0; j < J; ++j) {
      update_g(&res.sources[j], stats2, j, [&](int f, int n) {
        return res.sigma2[j][static_cast<std::size_t>(n) * F + f];
      });
      FillVariance(&v, j, res.sources[j].g, res.sigma2[j], F, N);
    }
    if (cfg.record_blocks)
      rec.blocks.push_back(
          {"scale", neg_log_likelihood(obs, res.spatial, v, cfg.workers),
           Seconds(t0)});

    // Exact renormalization: per-source mean trace into g.
    for (int j = 0; j < J; ++j) {
      double tau = 0.0;
      for (int f = 0; f < F; ++f)
        tau += std::real(res.spatial.Rc(j, f).Trace()) / obs.I;
      tau /= F;
      if (!(tau > 0.0)) continue;
      for (int f = 0; f < F; ++f)
        res.spatial.R(j, f) *= Cplx(1.0 / tau, 0.0);
      res.sources[j].g *= tau;
      FillVariance(&v, j, res.sources[j].g, res.sigma2[j], F, N);
    }

    rec.nll = neg_log_likelihood(obs, res.spatial, v, cfg.workers);
    if (!std::isfinite(rec.nll))
      throw SolverDivergenceError(
          "fit_gmvae: nonfinite objective at iteration " + std::to_string(it));
    if (static_cast<std::size_t>(F) * N <= 4096) {
      rec.majorizer =
          majorizer(obs, res.spatial, v, refresh_aux(obs, res.spatial, v));
    } else {
      rec.majorizer = rec.nll;
    }
    res.trace.iterations.push_back(std::move(rec));
  }
  return res;
}

void GmvaeResult::WriteCheckpoint(const std::string &path) const {
  TensorContainer c("LGMG", 1);
  const int J = static_cast<int>(sources.size());
  const int D = sources.empty() ? 0 : sources[0].D;
  const int C = sources.empty() ? 0 : sources[0].C;
  const int N = sources.empty() ? 0 : sources[0].N;
  c.Add("meta", {6},
        {static_cast<double>(J), static_cast<double>(spatial.F),
         static_cast<double>(spatial.I), static_cast<double>(D),
         static_cast<double>(C), static_cast<double>(N)});
  std::vector<double> flat;
  for (const auto &m : spatial.r)
    for (int a = 0; a < spatial.I; ++a)
      for (int b = 0; b < spatial.I; ++b) {
        flat.push_back(m(a, b).real());
        flat.push_back(m(a, b).imag());
      }
  c.Add("spatial", {flat.size()}, flat);
  for (int j = 0; j < J; ++j) {
    const std::string tag = "src" + std::to_string(j);
    c.Add(tag + ".z", {sources[j].z.size()}, sources[j].z);
    c.Add(tag + ".d", {sources[j].d.size()}, sources[j].d);
    c.AddScalar(tag + ".g", sources[j].g);
  }
  std::vector<double> nll;
  nll.push_back(trace.initial_nll);
  for (const auto &itrec : trace.iterations) nll.push_back(itrec.nll);
  c.Add("trace.nll", {nll.size()}, nll);
  c.WriteFile(path);
}

}  // namespace lgmsep

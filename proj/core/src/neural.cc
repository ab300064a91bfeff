// core/src/neural.cc

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

#include "lgmsep/neural.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lgmsep/container.h"

namespace lgmsep {

namespace {

constexpr double kInputEps = 1e-8;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void AffineForward(const AffineLayer &l, const double *in, int frames,
                   double *out) {
  for (int n = 0; n < frames; ++n) {
    const double *row = in + static_cast<std::size_t>(n) * l.in;
    double *orow = out + static_cast<std::size_t>(n) * l.out;
    for (int o = 0; o < l.out; ++o) {
      const double *wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
      double acc = l.b[o];
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * row[i];
      orow[o] = acc;
    }
  }
}

// Accumulates into *gl and *din (caller zeroes din).
void AffineBackward(const AffineLayer &l, const double *in, const double *dout,
                    int frames, AffineLayer *gl, double *din) {
  for (int n = 0; n < frames; ++n) {
    const double *row = in + static_cast<std::size_t>(n) * l.in;
    const double *drow = dout + static_cast<std::size_t>(n) * l.out;
    for (int o = 0; o < l.out; ++o) {
      const double d = drow[o];
      if (gl != nullptr) {
        double *gw = gl->w.data() + static_cast<std::size_t>(o) * l.in;
        for (int i = 0; i < l.in; ++i) gw[i] += d * row[i];
        gl->b[o] += d;
      }
      if (din != nullptr) {
        const double *wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
        double *dinrow = din + static_cast<std::size_t>(n) * l.in;
        for (int i = 0; i < l.in; ++i) dinrow[i] += d * wrow[i];
      }
    }
  }
}

// Gated linear unit: act = a .* sigmoid(b) with pre = [a | b].
void GluForward(const double *pre, int frames, int hidden, double *act) {
  for (int n = 0; n < frames; ++n) {
    const double *p = pre + static_cast<std::size_t>(n) * 2 * hidden;
    double *a = act + static_cast<std::size_t>(n) * hidden;
    for (int h = 0; h < hidden; ++h) a[h] = p[h] * Sigmoid(p[hidden + h]);
  }
}

void GluBackward(const double *pre, const double *dact, int frames, int hidden,
                 double *dpre) {
  for (int n = 0; n < frames; ++n) {
    const double *p = pre + static_cast<std::size_t>(n) * 2 * hidden;
    const double *da = dact + static_cast<std::size_t>(n) * hidden;
    double *dp = dpre + static_cast<std::size_t>(n) * 2 * hidden;
    for (int h = 0; h < hidden; ++h) {
      const double s = Sigmoid(p[hidden + h]);
      dp[h] = da[h] * s;
      dp[hidden + h] = da[h] * p[h] * s * (1.0 - s);
    }
  }
}

std::vector<double> ConcatClass(const double *x, int frames, int xdim,
                                const std::vector<double> &cls) {
  const int cdim = static_cast<int>(cls.size());
  std::vector<double> out(static_cast<std::size_t>(frames) * (xdim + cdim));
  for (int n = 0; n < frames; ++n) {
    double *row = out.data() + static_cast<std::size_t>(n) * (xdim + cdim);
    const double *xr = x + static_cast<std::size_t>(n) * xdim;
    std::copy(xr, xr + xdim, row);
    std::copy(cls.begin(), cls.end(), row + xdim);
  }
  return out;
}

// Splits d(concat input) into the x part (overwritten) and the class part
// (summed over frames, accumulated).
void SplitConcatGrad(const double *din, int frames, int xdim, int cdim,
                     double *dx, double *dc) {
  for (int n = 0; n < frames; ++n) {
    const double *row = din + static_cast<std::size_t>(n) * (xdim + cdim);
    if (dx != nullptr)
      std::copy(row, row + xdim, dx + static_cast<std::size_t>(n) * xdim);
    if (dc != nullptr)
      for (int c = 0; c < cdim; ++c) dc[c] += row[xdim + c];
  }
}

void InitAffine(AffineLayer *l, int in, int out, double std_dev, Rng *rng) {
  l->in = in;
  l->out = out;
  l->w.resize(static_cast<std::size_t>(in) * out);
  l->b.assign(out, 0.0);
  for (auto &v : l->w) v = std_dev * rng->Normal();
}

double ClampLogVar(double x) {
  return std::clamp(x, -kLogVarClamp, kLogVarClamp);
}

}  // namespace

CvaeWeights CvaeWeights::Init(const CvaeConfig &cfg, std::uint64_t seed) {
  if (cfg.spec_dim < 1 || cfg.latent_dim < 1 || cfg.class_dim < 1 ||
      cfg.hidden < 1)
    throw InvalidInputError("CvaeWeights: bad dimensions");
  CvaeWeights w;
  w.spec_dim = cfg.spec_dim;
  w.latent_dim = cfg.latent_dim;
  w.class_dim = cfg.class_dim;
  w.hidden = cfg.hidden;
  Rng rng(DeriveSeed(seed, 0xD5));
  const int F = cfg.spec_dim, D = cfg.latent_dim, C = cfg.class_dim,
            H = cfg.hidden;
  InitAffine(&w.enc1, F + C, 2 * H, 1.0 / std::sqrt(F + C), &rng);
  InitAffine(&w.enc2, H + C, 2 * H, 1.0 / std::sqrt(H + C), &rng);
  InitAffine(&w.enc_mu, H + C, D, 0.01, &rng);
  InitAffine(&w.enc_logvar, H + C, D, 0.01, &rng);
  InitAffine(&w.dec1, D + C, 2 * H, 1.0 / std::sqrt(D + C), &rng);
  InitAffine(&w.dec2, H + C, 2 * H, 1.0 / std::sqrt(H + C), &rng);
  InitAffine(&w.dec_head, H + C, F, 0.01, &rng);
  return w;
}

CvaeWeights CvaeWeights::ZerosLike(const CvaeWeights &ref) {
  CvaeWeights z = ref;
  for (auto &[name, vec] : z.ParamTensors()) {
    (void)name;
    std::fill(vec->begin(), vec->end(), 0.0);
  }
  return z;
}

std::vector<std::pair<std::string, std::vector<double> *>>
CvaeWeights::ParamTensors() {
  return {{"enc1.w", &enc1.w},       {"enc1.b", &enc1.b},
          {"enc2.w", &enc2.w},       {"enc2.b", &enc2.b},
          {"enc_mu.w", &enc_mu.w},   {"enc_mu.b", &enc_mu.b},
          {"enc_logvar.w", &enc_logvar.w}, {"enc_logvar.b", &enc_logvar.b},
          {"dec1.w", &dec1.w},       {"dec1.b", &dec1.b},
          {"dec2.w", &dec2.w},       {"dec2.b", &dec2.b},
          {"dec_head.w", &dec_head.w}, {"dec_head.b", &dec_head.b}};
}

std::vector<std::pair<std::string, const std::vector<double> *>>
CvaeWeights::ParamTensors() const {
  auto mut = const_cast<CvaeWeights *>(this)->ParamTensors();
  std::vector<std::pair<std::string, const std::vector<double> *>> out;
  out.reserve(mut.size());
  for (auto &[name, vec] : mut) out.emplace_back(name, vec);
  return out;
}

std::size_t CvaeWeights::NumParams() const {
  std::size_t n = 0;
  for (auto &[name, vec] : ParamTensors()) {
    (void)name;
    n += vec->size();
  }
  return n;
}

void CvaeWeights::Write(const std::string &path) const {
  TensorContainer c("LGMW", 1);
  c.Add("meta",
        {5},
        {static_cast<double>(latent_dim), static_cast<double>(class_dim),
         static_cast<double>(spec_dim), static_cast<double>(hidden), 2.0});
  for (auto &[name, vec] : ParamTensors())
    c.Add(name, {vec->size()}, *vec);
  c.WriteFile(path);
}

CvaeWeights CvaeWeights::Read(const std::string &path) {
  TensorContainer c = TensorContainer::ReadFile(path, "LGMW", 1);
  const auto &meta = c.Get("meta").values;
  if (meta.size() != 5) throw IoError(path + ": malformed meta tensor");
  CvaeConfig cfg;
  cfg.latent_dim = static_cast<int>(meta[0]);
  cfg.class_dim = static_cast<int>(meta[1]);
  cfg.spec_dim = static_cast<int>(meta[2]);
  cfg.hidden = static_cast<int>(meta[3]);
  CvaeWeights w = Init(cfg, 0);
  for (auto &[name, vec] : w.ParamTensors()) {
    const auto &t = c.Get(name);
    if (t.values.size() != vec->size())
      throw IoError(path + ": tensor '" + name + "' has wrong size");
    *vec = t.values;
  }
  return w;
}

EncoderOut encoder_forward(const CvaeWeights &w,
                           const std::vector<double> &power,
                           const std::vector<double> &cls, int frames,
                           EncoderCache *cache) {
  const int F = w.spec_dim, C = w.class_dim, H = w.hidden, D = w.latent_dim;
  if (static_cast<int>(cls.size()) != C)
    throw InvalidInputError("encoder_forward: class vector size mismatch");
  if (power.size() != static_cast<std::size_t>(frames) * F)
    throw InvalidInputError("encoder_forward: power block size mismatch");

  std::vector<double> xin(power.size());
  for (std::size_t i = 0; i < power.size(); ++i)
    xin[i] = std::log(power[i] + kInputEps);

  EncoderCache local;
  EncoderCache &cc = cache != nullptr ? *cache : local;
  cc.frames = frames;

  cc.l1.input = ConcatClass(xin.data(), frames, F, cls);
  cc.l1.pre.resize(static_cast<std::size_t>(frames) * 2 * H);
  AffineForward(w.enc1, cc.l1.input.data(), frames, cc.l1.pre.data());
  cc.l1.act.resize(static_cast<std::size_t>(frames) * H);
  GluForward(cc.l1.pre.data(), frames, H, cc.l1.act.data());

  cc.l2.input = ConcatClass(cc.l1.act.data(), frames, H, cls);
  cc.l2.pre.resize(static_cast<std::size_t>(frames) * 2 * H);
  AffineForward(w.enc2, cc.l2.input.data(), frames, cc.l2.pre.data());
  cc.l2.act.resize(static_cast<std::size_t>(frames) * H);
  GluForward(cc.l2.pre.data(), frames, H, cc.l2.act.data());

  cc.in_head = ConcatClass(cc.l2.act.data(), frames, H, cls);
  cc.mu.resize(static_cast<std::size_t>(frames) * D);
  AffineForward(w.enc_mu, cc.in_head.data(), frames, cc.mu.data());
  cc.logvar_pre.resize(static_cast<std::size_t>(frames) * D);
  AffineForward(w.enc_logvar, cc.in_head.data(), frames, cc.logvar_pre.data());
  cc.logvar.resize(cc.logvar_pre.size());
  for (std::size_t i = 0; i < cc.logvar.size(); ++i)
    cc.logvar[i] = ClampLogVar(cc.logvar_pre[i]);

  return {cc.mu, cc.logvar};
}

std::vector<double> decoder_forward(const CvaeWeights &w,
                                    const std::vector<double> &z,
                                    const std::vector<double> &cls, int frames,
                                    DecoderCache *cache) {
  const int F = w.spec_dim, C = w.class_dim, H = w.hidden, D = w.latent_dim;
  if (static_cast<int>(cls.size()) != C)
    throw InvalidInputError("decoder_forward: class vector size mismatch");
  double csum = 0.0;
  for (double v : cls) csum += v;
  if (std::abs(csum - 1.0) > 1e-6)
    throw InvalidInputError("decoder_forward: class vector must sum to 1");
  if (z.size() != static_cast<std::size_t>(frames) * D)
    throw InvalidInputError("decoder_forward: latent block size mismatch");

  DecoderCache local;
  DecoderCache &cc = cache != nullptr ? *cache : local;
  cc.frames = frames;

  cc.l1.input = ConcatClass(z.data(), frames, D, cls);
  cc.l1.pre.resize(static_cast<std::size_t>(frames) * 2 * H);
  AffineForward(w.dec1, cc.l1.input.data(), frames, cc.l1.pre.data());
  cc.l1.act.resize(static_cast<std::size_t>(frames) * H);
  GluForward(cc.l1.pre.data(), frames, H, cc.l1.act.data());

  cc.l2.input = ConcatClass(cc.l1.act.data(), frames, H, cls);
  cc.l2.pre.resize(static_cast<std::size_t>(frames) * 2 * H);
  AffineForward(w.dec2, cc.l2.input.data(), frames, cc.l2.pre.data());
  cc.l2.act.resize(static_cast<std::size_t>(frames) * H);
  GluForward(cc.l2.pre.data(), frames, H, cc.l2.act.data());

  cc.in_head = ConcatClass(cc.l2.act.data(), frames, H, cls);
  cc.logv_pre.resize(static_cast<std::size_t>(frames) * F);
  AffineForward(w.dec_head, cc.in_head.data(), frames, cc.logv_pre.data());
  cc.logv.resize(cc.logv_pre.size());
  cc.sigma2.resize(cc.logv_pre.size());
  for (std::size_t i = 0; i < cc.logv.size(); ++i) {
    cc.logv[i] = ClampLogVar(cc.logv_pre[i]);
    cc.sigma2[i] = std::exp(cc.logv[i]);
    LGMSEP_ASSERT(cc.sigma2[i] > 0.0, "decoder variance must be positive");
  }
  return cc.sigma2;
}

std::vector<double> reparam_sample(const std::vector<double> &mu,
                                   const std::vector<double> &logvar,
                                   Rng *rng) {
  if (mu.size() != logvar.size())
    throw InvalidInputError("reparam_sample: shape mismatch");
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = mu[i] + std::exp(0.5 * logvar[i]) * rng->Normal();
  return z;
}

namespace {

struct ElboInternals {
  EncoderCache enc;
  DecoderCache dec;
  std::vector<double> z;
  ElboParts parts;
};

ElboInternals ElboForwardInternal(const CvaeWeights &w,
                                  const std::vector<double> &power,
                                  const std::vector<double> &cls, int frames,
                                  const std::vector<double> &eps) {
  const int F = w.spec_dim, D = w.latent_dim;
  ElboInternals out;
  encoder_forward(w, power, cls, frames, &out.enc);

  if (eps.size() != static_cast<std::size_t>(frames) * D)
    throw InvalidInputError("elbo: eps block size mismatch");
  out.z.resize(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i)
    out.z[i] = out.enc.mu[i] + std::exp(0.5 * out.enc.logvar[i]) * eps[i];

  decoder_forward(w, out.z, cls, frames, &out.dec);

  double recon = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(frames) * F; ++i)
    recon += -std::log(kPi) - out.dec.logv[i] - power[i] / out.dec.sigma2[i];

  double kl = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(frames) * D; ++i) {
    const double m = out.enc.mu[i], lv = out.enc.logvar[i];
    kl += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
  }
  LGMSEP_ASSERT(kl >= 0.0, "KL divergence must be nonnegative");

  out.parts.recon = recon;
  out.parts.kl = kl;
  out.parts.elbo = recon - kl;
  if (!std::isfinite(out.parts.elbo))
    throw TrainingDivergenceError("elbo: nonfinite loss");
  return out;
}

}  // namespace

ElboParts elbo(const CvaeWeights &w, const std::vector<double> &power,
               const std::vector<double> &cls, int frames, Rng *rng) {
  std::vector<double> eps(static_cast<std::size_t>(frames) * w.latent_dim);
  for (auto &e : eps) e = rng->Normal();
  return ElboForwardInternal(w, power, cls, frames, eps).parts;
}

ElboParts ElboWithGrad(const CvaeWeights &w, const std::vector<double> &power,
                       const std::vector<double> &cls, int frames,
                       const std::vector<double> &eps, CvaeWeights *grads) {
  const int F = w.spec_dim, C = w.class_dim, H = w.hidden, D = w.latent_dim;
  ElboInternals fw = ElboForwardInternal(w, power, cls, frames, eps);
  if (grads == nullptr) return fw.parts;

  // Loss = -elbo. Decoder head: dL/dlogv = 1 - s/sigma2, masked by the clamp.
  std::vector<double> dlogv(static_cast<std::size_t>(frames) * F);
  for (std::size_t i = 0; i < dlogv.size(); ++i) {
    const double inside =
        std::abs(fw.dec.logv_pre[i]) < kLogVarClamp ? 1.0 : 0.0;
    dlogv[i] = (1.0 - power[i] / fw.dec.sigma2[i]) * inside;
  }

  std::vector<double> din_head(static_cast<std::size_t>(frames) * (H + C), 0.0);
  AffineBackward(w.dec_head, fw.dec.in_head.data(), dlogv.data(), frames,
                 &grads->dec_head, din_head.data());
  std::vector<double> dact2(static_cast<std::size_t>(frames) * H);
  SplitConcatGrad(din_head.data(), frames, H, C, dact2.data(), nullptr);

  std::vector<double> dpre2(static_cast<std::size_t>(frames) * 2 * H);
  GluBackward(fw.dec.l2.pre.data(), dact2.data(), frames, H, dpre2.data());
  std::vector<double> din2(static_cast<std::size_t>(frames) * (H + C), 0.0);
  AffineBackward(w.dec2, fw.dec.l2.input.data(), dpre2.data(), frames,
                 &grads->dec2, din2.data());
  std::vector<double> dact1(static_cast<std::size_t>(frames) * H);
  SplitConcatGrad(din2.data(), frames, H, C, dact1.data(), nullptr);

  std::vector<double> dpre1(static_cast<std::size_t>(frames) * 2 * H);
  GluBackward(fw.dec.l1.pre.data(), dact1.data(), frames, H, dpre1.data());
  std::vector<double> din1(static_cast<std::size_t>(frames) * (D + C), 0.0);
  AffineBackward(w.dec1, fw.dec.l1.input.data(), dpre1.data(), frames,
                 &grads->dec1, din1.data());
  std::vector<double> dz(static_cast<std::size_t>(frames) * D);
  SplitConcatGrad(din1.data(), frames, D, C, dz.data(), nullptr);

  // Reparameterization + KL into encoder-head grads.
  std::vector<double> dmu(static_cast<std::size_t>(frames) * D);
  std::vector<double> dlogvar(static_cast<std::size_t>(frames) * D);
  for (std::size_t i = 0; i < dmu.size(); ++i) {
    const double lv = fw.enc.logvar[i];
    dmu[i] = dz[i] + fw.enc.mu[i];
    const double via_z = dz[i] * eps[i] * 0.5 * std::exp(0.5 * lv);
    const double via_kl = 0.5 * (std::exp(lv) - 1.0);
    const double inside =
        std::abs(fw.enc.logvar_pre[i]) < kLogVarClamp ? 1.0 : 0.0;
    dlogvar[i] = (via_z + via_kl) * inside;
  }

  std::vector<double> din_head_e(static_cast<std::size_t>(frames) * (H + C),
                                 0.0);
  AffineBackward(w.enc_mu, fw.enc.in_head.data(), dmu.data(), frames,
                 &grads->enc_mu, din_head_e.data());
  AffineBackward(w.enc_logvar, fw.enc.in_head.data(), dlogvar.data(), frames,
                 &grads->enc_logvar, din_head_e.data());
  std::vector<double> dact2e(static_cast<std::size_t>(frames) * H);
  SplitConcatGrad(din_head_e.data(), frames, H, C, dact2e.data(), nullptr);

  std::vector<double> dpre2e(static_cast<std::size_t>(frames) * 2 * H);
  GluBackward(fw.enc.l2.pre.data(), dact2e.data(), frames, H, dpre2e.data());
  std::vector<double> din2e(static_cast<std::size_t>(frames) * (H + C), 0.0);
  AffineBackward(w.enc2, fw.enc.l2.input.data(), dpre2e.data(), frames,
                 &grads->enc2, din2e.data());
  std::vector<double> dact1e(static_cast<std::size_t>(frames) * H);
  SplitConcatGrad(din2e.data(), frames, H, C, dact1e.data(), nullptr);

  std::vector<double> dpre1e(static_cast<std::size_t>(frames) * 2 * H);
  GluBackward(fw.enc.l1.pre.data(), dact1e.data(), frames, H, dpre1e.data());
  AffineBackward(w.enc1, fw.enc.l1.input.data(), dpre1e.data(), frames,
                 &grads->enc1, nullptr);

  return fw.parts;
}

DecoderInputGrads DecoderBackwardInputs(const CvaeWeights &w,
                                        const DecoderCache &cache,
                                        const std::vector<double> &dsigma2) {
  DecoderInputGrads out;
  DecoderBackwardFull(w, cache, dsigma2, nullptr, &out);
  return out;
}

void DecoderBackwardFull(const CvaeWeights &w, const DecoderCache &cache,
                         const std::vector<double> &dsigma2,
                         CvaeWeights *grads, DecoderInputGrads *input_grads) {
  const int F = w.spec_dim, C = w.class_dim, H = w.hidden, D = w.latent_dim;
  const int frames = cache.frames;
  if (dsigma2.size() != static_cast<std::size_t>(frames) * F)
    throw InvalidInputError("DecoderBackward: dsigma2 size mismatch");

  // sigma2 = exp(clamped pre): dL/dpre = dL/dsigma2 * sigma2, clamp-masked.
  std::vector<double> dlogv(dsigma2.size());
  for (std::size_t i = 0; i < dlogv.size(); ++i) {
    const double inside =
        std::abs(cache.logv_pre[i]) < kLogVarClamp ? 1.0 : 0.0;
    dlogv[i] = dsigma2[i] * cache.sigma2[i] * inside;
  }

  std::vector<double> dc(C, 0.0);
  std::vector<double> din_head(static_cast<std::size_t>(frames) * (H + C), 0.0);
  AffineBackward(w.dec_head, cache.in_head.data(), dlogv.data(), frames,
                 grads != nullptr ? &grads->dec_head : nullptr,
                 din_head.data());
  std::vector<double> dact2(static_cast<std::size_t>(frames) * H);
  SplitConcatGrad(din_head.data(), frames, H, C, dact2.data(), dc.data());

  std::vector<double> dpre2(static_cast<std::size_t>(frames) * 2 * H);
  GluBackward(cache.l2.pre.data(), dact2.data(), frames, H, dpre2.data());
  std::vector<double> din2(static_cast<std::size_t>(frames) * (H + C), 0.0);
  AffineBackward(w.dec2, cache.l2.input.data(), dpre2.data(), frames,
                 grads != nullptr ? &grads->dec2 : nullptr, din2.data());
  std::vector<double> dact1(static_cast<std::size_t>(frames) * H);
  SplitConcatGrad(din2.data(), frames, H, C, dact1.data(), dc.data());

  std::vector<double> dpre1(static_cast<std::size_t>(frames) * 2 * H);
  GluBackward(cache.l1.pre.data(), dact1.data(), frames, H, dpre1.data());
  std::vector<double> din1(static_cast<std::size_t>(frames) * (D + C), 0.0);
  AffineBackward(w.dec1, cache.l1.input.data(), dpre1.data(), frames,
                 grads != nullptr ? &grads->dec1 : nullptr, din1.data());

  if (input_grads != nullptr) {
    input_grads->dz.resize(static_cast<std::size_t>(frames) * D);
    SplitConcatGrad(din1.data(), frames, D, C, input_grads->dz.data(),
                    dc.data());
    input_grads->dc = dc;
  }
}

std::vector<double> softmax(const std::vector<double> &d) {
  if (d.empty()) throw InvalidInputError("softmax: empty input");
  const double m = *std::max_element(d.begin(), d.end());
  std::vector<double> out(d.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    out[i] = std::exp(d[i] - m);
    sum += out[i];
  }
  double check = 0.0;
  for (auto &v : out) {
    v /= sum;
    check += v;
  }
  LGMSEP_ASSERT(std::abs(check - 1.0) <= 1e-12,
                "softmax output must sum to 1");
  return out;
}

std::vector<double> SoftmaxBackward(const std::vector<double> &c,
                                    const std::vector<double> &dc) {
  double inner = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) inner += dc[i] * c[i];
  std::vector<double> dd(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) dd[i] = c[i] * (dc[i] - inner);
  return dd;
}

namespace {

void AdamStep(CvaeWeights *w, const CvaeWeights &g, CvaeWeights *m,
              CvaeWeights *v, std::int64_t t, const TrainConfig &tc) {
  const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(t));
  auto wt = w->ParamTensors();
  auto gt = const_cast<CvaeWeights &>(g).ParamTensors();
  auto mt = m->ParamTensors();
  auto vt = v->ParamTensors();
  for (std::size_t k = 0; k < wt.size(); ++k) {
    auto &wk = *wt[k].second;
    auto &gk = *gt[k].second;
    auto &mk = *mt[k].second;
    auto &vk = *vt[k].second;
    for (std::size_t i = 0; i < wk.size(); ++i) {
      mk[i] = tc.beta1 * mk[i] + (1.0 - tc.beta1) * gk[i];
      vk[i] = tc.beta2 * vk[i] + (1.0 - tc.beta2) * gk[i] * gk[i];
      const double mhat = mk[i] / bc1;
      const double vhat = vk[i] / bc2;
      wk[i] -= tc.lr * mhat / (std::sqrt(vhat) + tc.adam_eps);
    }
  }
}

}  // namespace

void TrainState::Write(const std::string &path) const {
  TensorContainer c("LGMT", 1);
  c.Add("meta", {6},
        {static_cast<double>(weights.latent_dim),
         static_cast<double>(weights.class_dim),
         static_cast<double>(weights.spec_dim),
         static_cast<double>(weights.hidden), static_cast<double>(epoch),
         static_cast<double>(adam_t)});
  for (auto &[name, vec] : weights.ParamTensors())
    c.Add("w." + name, {vec->size()}, *vec);
  for (auto &[name, vec] : adam_m.ParamTensors())
    c.Add("m." + name, {vec->size()}, *vec);
  for (auto &[name, vec] : adam_v.ParamTensors())
    c.Add("v." + name, {vec->size()}, *vec);
  c.WriteFile(path);
}

TrainState TrainState::Read(const std::string &path) {
  TensorContainer c = TensorContainer::ReadFile(path, "LGMT", 1);
  const auto &meta = c.Get("meta").values;
  if (meta.size() != 6) throw IoError(path + ": malformed meta tensor");
  CvaeConfig cfg;
  cfg.latent_dim = static_cast<int>(meta[0]);
  cfg.class_dim = static_cast<int>(meta[1]);
  cfg.spec_dim = static_cast<int>(meta[2]);
  cfg.hidden = static_cast<int>(meta[3]);
  TrainState st;
  st.weights = CvaeWeights::Init(cfg, 0);
  st.adam_m = CvaeWeights::ZerosLike(st.weights);
  st.adam_v = CvaeWeights::ZerosLike(st.weights);
  st.epoch = static_cast<int>(meta[4]);
  st.adam_t = static_cast<std::int64_t>(meta[5]);
  for (auto &[name, vec] : st.weights.ParamTensors())
    *vec = c.Get("w." + name).values;
  for (auto &[name, vec] : st.adam_m.ParamTensors())
    *vec = c.Get("m." + name).values;
  for (auto &[name, vec] : st.adam_v.ParamTensors())
    *vec = c.Get("v." + name).values;
  return st;
}

TrainResult train_cvae(const std::vector<TrainExample> &dataset,
                       const CvaeConfig &cfg, const TrainConfig &tc,
                       const TrainState *resume, TrainState *final_state) {
  if (dataset.empty()) throw InvalidInputError("train_cvae: empty dataset");
  for (const auto &ex : dataset) {
    if (ex.frames < 1 ||
        ex.power.size() != static_cast<std::size_t>(ex.frames) * cfg.spec_dim)
      throw InvalidInputError("train_cvae: malformed example block");
    if (static_cast<int>(ex.cls.size()) != cfg.class_dim)
      throw InvalidInputError("train_cvae: class vector size mismatch");
    double s = 0.0;
    for (double v : ex.cls) s += v;
    if (std::abs(s - 1.0) > 1e-9)
      throw InvalidInputError("train_cvae: class labels must be one-hot");
  }

  TrainResult res;
  CvaeWeights w = resume != nullptr ? resume->weights
                                    : CvaeWeights::Init(cfg, tc.seed);
  CvaeWeights adam_m = resume != nullptr ? resume->adam_m
                                         : CvaeWeights::ZerosLike(w);
  CvaeWeights adam_v = resume != nullptr ? resume->adam_v
                                         : CvaeWeights::ZerosLike(w);
  std::int64_t adam_t = resume != nullptr ? resume->adam_t : 0;
  const int start_epoch = resume != nullptr ? resume->epoch : 0;

  CvaeWeights last_good = w;
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = start_epoch; epoch < tc.epochs; ++epoch) {
    Rng rng(DeriveSeed(tc.seed, 0xE000 + static_cast<std::uint64_t>(epoch)));
    // Fisher-Yates with the epoch stream.
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.UniformInt(static_cast<int>(i))]);

    double sum_elbo = 0.0, sum_recon = 0.0, sum_kl = 0.0;
    std::size_t total_frames = 0;
    try {
      for (int ex_idx : order) {
        const TrainExample &ex = dataset[ex_idx];
        for (int lo = 0; lo < ex.frames; lo += tc.batch) {
          const int nb = std::min(tc.batch, ex.frames - lo);
          std::vector<double> block(
              ex.power.begin() + static_cast<std::size_t>(lo) * cfg.spec_dim,
              ex.power.begin() +
                  static_cast<std::size_t>(lo + nb) * cfg.spec_dim);
          std::vector<double> eps(static_cast<std::size_t>(nb) *
                                  cfg.latent_dim);
          for (auto &e : eps) e = rng.Normal();

          CvaeWeights grads = CvaeWeights::ZerosLike(w);
          ElboParts parts = ElboWithGrad(w, block, ex.cls, nb, eps, &grads);
          sum_elbo += parts.elbo;
          sum_recon += parts.recon;
          sum_kl += parts.kl;
          total_frames += nb;

          const double scale = 1.0 / nb;
          for (auto &[name, vec] : grads.ParamTensors()) {
            (void)name;
            for (auto &v : *vec) v *= scale;
          }
          ++adam_t;
          AdamStep(&w, grads, &adam_m, &adam_v, adam_t, tc);
        }
      }
    } catch (const TrainingDivergenceError &e) {
      res.weights = last_good;
      res.diverged = true;
      res.message = e.what();
      res.epochs_done = epoch;
      if (final_state != nullptr) {
        final_state->weights = last_good;
        final_state->adam_m = adam_m;
        final_state->adam_v = adam_v;
        final_state->adam_t = adam_t;
        final_state->epoch = epoch;
      }
      return res;
    }

    res.log.push_back({epoch, sum_elbo / total_frames,
                       sum_recon / total_frames, sum_kl / total_frames});
    last_good = w;
  }

  res.weights = w;
  res.epochs_done = tc.epochs;
  if (final_state != nullptr) {
    final_state->weights = w;
    final_state->adam_m = adam_m;
    final_state->adam_v = adam_v;
    final_state->adam_t = adam_t;
    final_state->epoch = tc.epochs;
  }
  return res;
}

bool latent_step(VaeSourceParams *p, const std::vector<double> &grad_z,
                 const std::vector<double> &grad_d, double lr,
                 const std::function<double(const VaeSourceParams &)> &objective,
                 double *objective_value) {
  if (grad_z.size() != p->z.size() || grad_d.size() != p->d.size())
    throw InvalidInputError("latent_step: gradient shape mismatch");

  double gnorm = 0.0;
  for (double g : grad_z) gnorm += g * g;
  for (double g : grad_d) gnorm += g * g;
  if (gnorm == 0.0) return false;  // nothing to do, parameters unchanged

  const double current =
      objective_value != nullptr ? *objective_value : objective(*p);
  double step = lr;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    VaeSourceParams cand = *p;
    for (std::size_t i = 0; i < cand.z.size(); ++i)
      cand.z[i] -= step * grad_z[i];
    for (std::size_t i = 0; i < cand.d.size(); ++i)
      cand.d[i] -= step * grad_d[i];
    const double val = objective(cand);
    if (std::isfinite(val) && val <= current + 1e-12 * std::abs(current)) {
      *p = std::move(cand);
      if (objective_value != nullptr) *objective_value = val;
      return true;
    }
    step *= 0.5;
  }
  return false;  // step skipped, monotonicity preserved
}

}  // namespace lgmsep

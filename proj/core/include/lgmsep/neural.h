// core/include/lgmsep/neural.h

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

#ifndef LGMSEP_NEURAL_H_
#define LGMSEP_NEURAL_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lgmsep/common.h"
#include "lgmsep/source-models.h"

namespace lgmsep {

// Frame-wise conditional VAE over power-spectrum frames. Both networks are
// two gated-linear hidden layers with the class vector concatenated onto
// every layer input. The encoder maps a frame to a diagonal Gaussian over
// the latent; the decoder maps (z, c) to a strictly positive variance frame
// through an exp head whose pre-activation is clamped to [-30, 30].
struct AffineLayer {
  int in = 0, out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
};

inline constexpr double kLogVarClamp = 30.0;

struct CvaeConfig {
  int spec_dim = 0;    // F
  int latent_dim = 16; // D
  int class_dim = 0;   // C
  int hidden = 128;
};

struct CvaeWeights {
  int spec_dim = 0, latent_dim = 0, class_dim = 0, hidden = 0;
  AffineLayer enc1, enc2, enc_mu, enc_logvar;
  AffineLayer dec1, dec2, dec_head;

  static CvaeWeights Init(const CvaeConfig &cfg, std::uint64_t seed);
  static CvaeWeights ZerosLike(const CvaeWeights &ref);

  // All parameter tensors in declaration order (also the file order).
  std::vector<std::pair<std::string, std::vector<double> *>> ParamTensors();
  std::vector<std::pair<std::string, const std::vector<double> *>>
  ParamTensors() const;
  std::size_t NumParams() const;

  void Write(const std::string &path) const;
  static CvaeWeights Read(const std::string &path);
};

struct LayerCache {
  std::vector<double> input;  // N x in
  std::vector<double> pre;    // N x out (pre-nonlinearity)
  std::vector<double> act;    // N x (out/2 for GLU, out otherwise)
};

struct EncoderCache {
  int frames = 0;
  LayerCache l1, l2;
  std::vector<double> in_head;  // N x (hidden + C)
  std::vector<double> mu;       // N x D
  std::vector<double> logvar_pre, logvar;
};

struct DecoderCache {
  int frames = 0;
  LayerCache l1, l2;
  std::vector<double> in_head;
  std::vector<double> logv_pre, logv;  // N x F
  std::vector<double> sigma2;          // N x F
};

struct EncoderOut {
  std::vector<double> mu;      // N x D, frame-major
  std::vector<double> logvar;  // N x D
};

// power: N x F magnitude-squared frames (frame-major); a fixed elementwise
// log(x + 1e-8) front end conditions the input.
EncoderOut encoder_forward(const CvaeWeights &w,
                           const std::vector<double> &power,
                           const std::vector<double> &cls, int frames,
                           EncoderCache *cache = nullptr);

// Returns sigma2, N x F, strictly positive.
std::vector<double> decoder_forward(const CvaeWeights &w,
                                    const std::vector<double> &z,
                                    const std::vector<double> &cls, int frames,
                                    DecoderCache *cache = nullptr);

// z = mu + exp(logvar/2) .* eps with eps drawn from rng.
std::vector<double> reparam_sample(const std::vector<double> &mu,
                                   const std::vector<double> &logvar,
                                   Rng *rng);

struct ElboParts {
  double elbo = 0.0;
  double recon = 0.0;  // sum over frames/bins of the LGM log density
  double kl = 0.0;     // closed-form diagonal-Gaussian KL, >= 0
};

// Single-sample Monte-Carlo ELBO of one (block, class) pair.
ElboParts elbo(const CvaeWeights &w, const std::vector<double> &power,
               const std::vector<double> &cls, int frames, Rng *rng);

// Same, with the noise injected so finite differences can reuse it; if
// grads != nullptr, accumulates d(-elbo)/d(params) into it. Throws
// TrainingDivergenceError on a nonfinite loss.
ElboParts ElboWithGrad(const CvaeWeights &w, const std::vector<double> &power,
                       const std::vector<double> &cls, int frames,
                       const std::vector<double> &eps, CvaeWeights *grads);

struct DecoderInputGrads {
  std::vector<double> dz;  // N x D
  std::vector<double> dc;  // C (summed over frames)
};

// Backpropagates dL/dsigma2 (N x F) to the decoder inputs.
DecoderInputGrads DecoderBackwardInputs(const CvaeWeights &w,
                                        const DecoderCache &cache,
                                        const std::vector<double> &dsigma2);

// Backpropagates dL/dsigma2 into parameter grads as well.
void DecoderBackwardFull(const CvaeWeights &w, const DecoderCache &cache,
                         const std::vector<double> &dsigma2,
                         CvaeWeights *grads, DecoderInputGrads *input_grads);

// Max-subtracted stable softmax.
std::vector<double> softmax(const std::vector<double> &d);

// Chain rule through softmax: given dL/dc and c = softmax(d), returns dL/dd.
std::vector<double> SoftmaxBackward(const std::vector<double> &c,
                                    const std::vector<double> &dc);

// One labeled training block.
struct TrainExample {
  std::vector<double> power;  // frames x F, frame-major, nonnegative
  int frames = 0;
  std::vector<double> cls;    // one-hot, length C
};

struct TrainConfig {
  int epochs = 200;
  int batch = 64;
  double lr = 2e-4;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainLogEntry {
  int epoch = 0;
  double mean_elbo = 0.0, mean_recon = 0.0, mean_kl = 0.0;
};

struct TrainResult {
  CvaeWeights weights;
  std::vector<TrainLogEntry> log;
  bool diverged = false;
  std::string message;
  int epochs_done = 0;
};

// Optimizer state alongside weights so interrupted runs resume exactly.
struct TrainState {
  CvaeWeights weights;
  CvaeWeights adam_m, adam_v;
  std::int64_t adam_t = 0;
  int epoch = 0;

  void Write(const std::string &path) const;
  static TrainState Read(const std::string &path);
};

// Adaptive-moment training of (phi, theta). The per-epoch RNG is derived
// from (seed, epoch), so resuming from a state checkpoint reproduces the
// uninterrupted trajectory bit for bit.
TrainResult train_cvae(const std::vector<TrainExample> &dataset,
                       const CvaeConfig &cfg, const TrainConfig &tc,
                       const TrainState *resume = nullptr,
                       TrainState *final_state = nullptr);

// One backtracked gradient step on (z, d): candidate = params - lr*grad,
// accepted only if objective does not increase; lr halves up to 10 times,
// then the step is skipped. Returns true when a step was accepted and
// updates *objective_value.
bool latent_step(VaeSourceParams *p, const std::vector<double> &grad_z,
                 const std::vector<double> &grad_d, double lr,
                 const std::function<double(const VaeSourceParams &)> &objective,
                 double *objective_value);

}  // namespace lgmsep

#endif  // LGMSEP_NEURAL_H_

// core/include/lgmsep/mixsim.h

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

#ifndef LGMSEP_MIXSIM_H_
#define LGMSEP_MIXSIM_H_

#include <cstdint>
#include <vector>

#include "lgmsep/common.h"
#include "lgmsep/signal-io.h"

namespace lgmsep {

enum class MixingKind { kInstantaneousComplex, kAnechoicDelay };

struct MixSpec {
  int sources = 3;   // J
  int channels = 2;  // I
  MixingKind kind = MixingKind::kAnechoicDelay;
  std::uint64_t seed = 0;
  std::vector<double> gains;   // per-source balance, default all 1
  double max_delay_ms = 2.0;   // anechoic model
  int sample_rate = 16000;

  void Validate() const;
};

// Per-frequency mixing matrices A(f), I x J, layout (f*I + i)*J + j.
struct MixingSystem {
  int bins = 0;
  int channels = 0;
  int sources = 0;
  int frame_len = 0;  // maps bin index to physical frequency
  int sample_rate = 16000;
  std::vector<Cplx> a;

  Cplx &at(int f, int i, int j) {
    return a[(static_cast<std::size_t>(f) * channels + i) * sources + j];
  }
  const Cplx &at(int f, int i, int j) const {
    return a[(static_cast<std::size_t>(f) * channels + i) * sources + j];
  }
};

// Draws the mixing system. Instantaneous-complex matrices are resampled
// until their condition number (ratio of extreme singular values of the
// fat/tall Gram matrix) is at most 10. Anechoic-delay entries are
// exp(-2*pi*i*f_hz*tau_ij) with tau uniform in [0, max_delay_ms].
// Gains scale the columns.
MixingSystem gen_mixing(const MixSpec &spec, int bins, int frame_len);

struct MixResult {
  Spectrogram mixture;                 // F x N x I
  std::vector<Spectrogram> images;     // per source, F x N x I
};

// x(f,n) = sum_j a_j(f) s_j(f,n); images are the per-source summands.
MixResult mix(const std::vector<Spectrogram> &sources, const MixingSystem &a);

struct NmfSourceDraw {
  Spectrogram s;                 // F x N x 1 complex draw
  std::vector<double> variance;  // true v(f,n), layout f*N + n
  std::vector<double> h;         // K x F templates used
  std::vector<double> u;         // K x N activations used
};

// Draws one local-Gaussian source: random K-component NMF variance field,
// then s(f,n) ~ CN(0, v(f,n)).
NmfSourceDraw synth_nmf_sources(int k, int bins, int frames,
                                std::uint64_t seed);

}  // namespace lgmsep

#endif  // LGMSEP_MIXSIM_H_

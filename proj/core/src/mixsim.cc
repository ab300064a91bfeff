// core/src/mixsim.cc

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

#include "lgmsep/mixsim.h"

#include <cmath>
#include <limits>

#include "lgmsep/tensorlab.h"

namespace lgmsep {

void MixSpec::Validate() const {
  if (sources < 1 || channels < 1)
    throw InvalidInputError("MixSpec: need at least one source and channel");
  if (channels > kMaxDim)
    throw InvalidInputError("MixSpec: too many channels");
  if (!gains.empty() && static_cast<int>(gains.size()) != sources)
    throw InvalidInputError("MixSpec: gains size must match sources");
  for (double g : gains)
    if (!(g > 0.0)) throw InvalidInputError("MixSpec: gains must be positive");
}

namespace {

// Condition number of a rectangular matrix from the smaller Gram matrix,
// so it stays finite in the underdetermined case.
double ConditionNumber(const std::vector<Cplx> &m, int rows, int cols) {
  const int d = std::min(rows, cols);
  CMat gram(d);
  if (rows <= cols) {  // G = M M^H
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < rows; ++c) {
        Cplx acc = 0.0;
        for (int k = 0; k < cols; ++k)
          acc += m[r * cols + k] * std::conj(m[c * cols + k]);
        gram(r, c) = acc;
      }
  } else {  // G = M^H M
    for (int r = 0; r < cols; ++r)
      for (int c = 0; c < cols; ++c) {
        Cplx acc = 0.0;
        for (int k = 0; k < rows; ++k)
          acc += std::conj(m[k * cols + r]) * m[k * cols + c];
        gram(r, c) = acc;
      }
  }
  EigResult eig = herm_eig(HermMat::FromMatrixUnchecked(gram));
  const double lo = eig.eigenvalues.front();
  const double hi = eig.eigenvalues.back();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

}  // namespace

MixingSystem gen_mixing(const MixSpec &spec, int bins, int frame_len) {
  spec.Validate();
  if (bins < 1 || frame_len < 2)
    throw InvalidInputError("gen_mixing: bad bins/frame_len");

  MixingSystem sys;
  sys.bins = bins;
  sys.channels = spec.channels;
  sys.sources = spec.sources;
  sys.frame_len = frame_len;
  sys.sample_rate = spec.sample_rate;
  sys.a.assign(static_cast<std::size_t>(bins) * spec.channels * spec.sources,
               Cplx(0.0, 0.0));

  Rng rng(DeriveSeed(spec.seed, 0xA1));
  const int I = spec.channels, J = spec.sources;

  if (spec.kind == MixingKind::kInstantaneousComplex) {
    std::vector<Cplx> flat(static_cast<std::size_t>(I) * J);
    const int kMaxTries = 1000;
    int tries = 0;
    do {
      for (auto &v : flat) v = rng.ComplexNormal();
      if (++tries > kMaxTries)
        throw SolverDivergenceError(
            "gen_mixing: could not draw a well-conditioned mixing matrix");
    } while (ConditionNumber(flat, I, J) > 10.0);
    for (int f = 0; f < bins; ++f)
      for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) sys.at(f, i, j) = flat[i * J + j];
  } else {
    std::vector<double> tau(static_cast<std::size_t>(I) * J);
    for (auto &t : tau) t = rng.Uniform() * spec.max_delay_ms * 1e-3;
    for (int f = 0; f < bins; ++f) {
      const double hz =
          static_cast<double>(f) * spec.sample_rate / frame_len;
      for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
          const double phase = -2.0 * kPi * hz * tau[i * J + j];
          sys.at(f, i, j) = Cplx(std::cos(phase), std::sin(phase));
        }
    }
  }

  if (!spec.gains.empty()) {
    for (int f = 0; f < bins; ++f)
      for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) sys.at(f, i, j) *= spec.gains[j];
  }
  return sys;
}

MixResult mix(const std::vector<Spectrogram> &sources, const MixingSystem &a) {
  if (static_cast<int>(sources.size()) != a.sources)
    throw InvalidInputError("mix: source count does not match mixing system");
  if (sources.empty()) throw InvalidInputError("mix: no sources");
  const Spectrogram &first = sources[0];
  for (const auto &s : sources) {
    if (s.bins != first.bins || s.frames != first.frames || s.channels != 1)
      throw InvalidInputError("mix: sources must be mono and equally shaped");
  }
  if (first.bins != a.bins)
    throw InvalidInputError("mix: bins mismatch with mixing system");

  MixResult out;
  out.mixture = first;
  out.mixture.channels = a.channels;
  out.mixture.values.assign(
      static_cast<std::size_t>(first.bins) * first.frames * a.channels,
      Cplx(0.0, 0.0));
  out.images.assign(a.sources, out.mixture);

  for (int f = 0; f < first.bins; ++f)
    for (int n = 0; n < first.frames; ++n)
      for (int j = 0; j < a.sources; ++j) {
        const Cplx s = sources[j].at(f, n, 0);
        for (int i = 0; i < a.channels; ++i) {
          const Cplx img = a.at(f, i, j) * s;
          out.images[j].at(f, n, i) = img;
          out.mixture.at(f, n, i) += img;
        }
      }
  return out;
}

NmfSourceDraw synth_nmf_sources(int k, int bins, int frames,
                                std::uint64_t seed) {
  if (k < 1 || bins < 1 || frames < 1)
    throw InvalidInputError("synth_nmf_sources: bad dimensions");

  NmfSourceDraw out;
  out.h.assign(static_cast<std::size_t>(k) * bins, 0.0);
  out.u.assign(static_cast<std::size_t>(k) * frames, 0.0);
  out.variance.assign(static_cast<std::size_t>(bins) * frames, 0.0);

  Rng rng(DeriveSeed(seed, 0xB2));

  // Smooth peaked templates rather than white draws, so different seeds give
  // spectrally distinct sources and separation tests are meaningful.
  for (int q = 0; q < k; ++q) {
    const double center = rng.Uniform(0.05, 0.95) * (bins - 1);
    const double width = rng.Uniform(0.02, 0.12) * bins + 1.0;
    const double height = rng.Uniform(0.5, 2.0);
    for (int f = 0; f < bins; ++f) {
      const double d = (f - center) / width;
      out.h[q * bins + f] = height * std::exp(-0.5 * d * d) + 1e-3;
    }
    for (int n = 0; n < frames; ++n)
      out.u[q * frames + n] = rng.Uniform(0.1, 1.0);
  }

  out.s.bins = bins;
  out.s.frames = frames;
  out.s.channels = 1;
  out.s.frame_len = 2 * (bins - 1);
  out.s.hop = std::max(1, (bins - 1));
  out.s.window = Window::kSqrtHann;
  out.s.values.assign(static_cast<std::size_t>(bins) * frames, Cplx(0.0, 0.0));

  for (int f = 0; f < bins; ++f)
    for (int n = 0; n < frames; ++n) {
      double v = 0.0;
      for (int q = 0; q < k; ++q) v += out.h[q * bins + f] * out.u[q * frames + n];
      out.variance[static_cast<std::size_t>(f) * frames + n] = v;
      out.s.at(f, n, 0) = std::sqrt(v) * rng.ComplexNormal();
    }
  return out;
}

}  // namespace lgmsep

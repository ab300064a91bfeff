// core/include/lgmsep/signal-io.h

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

#ifndef LGMSEP_SIGNAL_IO_H_
#define LGMSEP_SIGNAL_IO_H_

#include <string>
#include <vector>

#include "lgmsep/common.h"

namespace lgmsep {

struct Waveform {
  std::vector<std::vector<double>> channels;  // equal lengths
  int sample_rate = 16000;

  int num_channels() const { return static_cast<int>(channels.size()); }
  std::size_t num_samples() const {
    return channels.empty() ? 0 : channels[0].size();
  }
  void Validate() const;
};

enum class Window { kRect, kHann, kSqrtHann };

// F x N x channels complex STFT, value layout (f*frames + n)*channels + ch.
struct Spectrogram {
  int bins = 0;        // frame_len/2 + 1
  int frames = 0;
  int channels = 0;
  int frame_len = 0;   // samples
  int hop = 0;         // samples
  Window window = Window::kSqrtHann;
  int sample_rate = 16000;
  std::size_t source_samples = 0;  // pre-padding length, used by istft
  std::vector<Cplx> values;

  Cplx &at(int f, int n, int ch) {
    return values[(static_cast<std::size_t>(f) * frames + n) * channels + ch];
  }
  const Cplx &at(int f, int n, int ch) const {
    return values[(static_cast<std::size_t>(f) * frames + n) * channels + ch];
  }
  double BinHz(int f) const {
    return static_cast<double>(f) * sample_rate / frame_len;
  }
};

// Analysis STFT. The tail is zero-padded to a whole frame; frame count is
// floor((padded_len - frame_len)/hop) + 1. hop must divide frame_len and the
// window must satisfy constant overlap-add at that hop.
Spectrogram stft(const Waveform &w, int frame_len, int hop, Window window);

// Overlap-add synthesis using the same window, normalized by the summed
// squared window, trimmed back to the analysis length.
Waveform istft(const Spectrogram &s);

// RIFF/WAVE, PCM16 or IEEE float32, mono or multichannel.
Waveform read_wav(const std::string &path);

enum class WavEncoding { kPcm16, kFloat32 };
void write_wav(const std::string &path, const Waveform &w,
               WavEncoding enc = WavEncoding::kFloat32);

std::vector<double> MakeWindow(Window window, int frame_len);

}  // namespace lgmsep

#endif  // LGMSEP_SIGNAL_IO_H_

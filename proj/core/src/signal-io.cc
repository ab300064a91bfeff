// core/src/signal-io.cc

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

#include "lgmsep/signal-io.h"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>

namespace lgmsep {

void Waveform::Validate() const {
  if (sample_rate <= 0) throw InvalidInputError("Waveform: sample_rate <= 0");
  for (const auto &ch : channels)
    if (ch.size() != num_samples())
      throw InvalidInputError("Waveform: channels have unequal lengths");
}

std::vector<double> MakeWindow(Window window, int frame_len) {
  std::vector<double> w(frame_len, 1.0);
  switch (window) {
    case Window::kRect:
      break;
    case Window::kHann:
      for (int t = 0; t < frame_len; ++t)
        w[t] = 0.5 * (1.0 - std::cos(2.0 * kPi * t / frame_len));
      break;
    case Window::kSqrtHann:
      for (int t = 0; t < frame_len; ++t)
        w[t] = std::sqrt(0.5 * (1.0 - std::cos(2.0 * kPi * t / frame_len)));
      break;
  }
  return w;
}

namespace {

// FFTW plan creation is not thread safe; execution on private buffers is.
std::mutex &FftwMutex() {
  static std::mutex m;
  return m;
}

// Overlap-add weight per sample position within the hop-periodic pattern.
// Reconstruction divides by this, so it must be bounded away from zero.
std::vector<double> WindowSquareTiling(const std::vector<double> &w, int hop) {
  std::vector<double> tile(hop, 0.0);
  const int L = static_cast<int>(w.size());
  for (int t = 0; t < L; ++t) tile[t % hop] += w[t] * w[t];
  return tile;
}

void CheckAnalysisParams(int frame_len, int hop, Window window) {
  if (frame_len <= 0 || hop <= 0)
    throw InvalidInputError("stft: frame_len and hop must be positive");
  if (hop > frame_len) throw InvalidInputError("stft: hop exceeds frame_len");
  if (frame_len % hop != 0)
    throw InvalidInputError("stft: hop must divide frame_len");
  const auto tile = WindowSquareTiling(MakeWindow(window, frame_len), hop);
  double lo = tile[0], hi = tile[0];
  for (double v : tile) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo <= 1e-12 * std::max(hi, 1.0))
    throw InvalidInputError(
        "stft: window/hop combination violates overlap-add invertibility");
}

}  // namespace

Spectrogram stft(const Waveform &w, int frame_len, int hop, Window window) {
  w.Validate();
  CheckAnalysisParams(frame_len, hop, window);
  const std::size_t len = w.num_samples();
  if (len < static_cast<std::size_t>(frame_len))
    throw InvalidInputError("stft: signal shorter than one frame");

  const int frames =
      static_cast<int>((len - frame_len + hop - 1) / hop) + 1;
  const std::size_t padded =
      static_cast<std::size_t>(frames - 1) * hop + frame_len;
  const int bins = frame_len / 2 + 1;
  const auto win = MakeWindow(window, frame_len);

  Spectrogram s;
  s.bins = bins;
  s.frames = frames;
  s.channels = w.num_channels();
  s.frame_len = frame_len;
  s.hop = hop;
  s.window = window;
  s.sample_rate = w.sample_rate;
  s.source_samples = len;
  s.values.assign(static_cast<std::size_t>(bins) * frames * s.channels,
                  Cplx(0.0, 0.0));

  double *in = fftw_alloc_real(frame_len);
  fftw_complex *out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(FftwMutex());
    plan = fftw_plan_dft_r2c_1d(frame_len, in, out, FFTW_ESTIMATE);
  }

  for (int ch = 0; ch < s.channels; ++ch) {
    const auto &x = w.channels[ch];
    for (int n = 0; n < frames; ++n) {
      const std::size_t start = static_cast<std::size_t>(n) * hop;
      for (int t = 0; t < frame_len; ++t) {
        const std::size_t idx = start + t;
        in[t] = (idx < len ? x[idx] : 0.0) * win[t];
      }
      fftw_execute(plan);
      for (int f = 0; f < bins; ++f)
        s.at(f, n, ch) = Cplx(out[f][0], out[f][1]);
    }
  }
  (void)padded;

  {
    std::lock_guard<std::mutex> lock(FftwMutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return s;
}

Waveform istft(const Spectrogram &s) {
  if (s.frame_len <= 0 || s.hop <= 0 || s.bins != s.frame_len / 2 + 1 ||
      s.channels <= 0)
    throw InvalidInputError("istft: analysis metadata missing or inconsistent");
  const auto win = MakeWindow(s.window, s.frame_len);
  const std::size_t padded =
      static_cast<std::size_t>(s.frames - 1) * s.hop + s.frame_len;
  const std::size_t out_len =
      s.source_samples > 0 ? s.source_samples : padded;

  fftw_complex *in = fftw_alloc_complex(s.bins);
  double *out = fftw_alloc_real(s.frame_len);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(FftwMutex());
    plan = fftw_plan_dft_c2r_1d(s.frame_len, in, out, FFTW_ESTIMATE);
  }

  Waveform w;
  w.sample_rate = s.sample_rate;
  w.channels.assign(s.channels, std::vector<double>(out_len, 0.0));

  std::vector<double> acc(padded), wsum(padded);
  const double inv_n = 1.0 / s.frame_len;
  for (int ch = 0; ch < s.channels; ++ch) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(wsum.begin(), wsum.end(), 0.0);
    for (int n = 0; n < s.frames; ++n) {
      for (int f = 0; f < s.bins; ++f) {
        const Cplx v = s.at(f, n, ch);
        in[f][0] = v.real();
        in[f][1] = v.imag();
      }
      fftw_execute(plan);
      const std::size_t start = static_cast<std::size_t>(n) * s.hop;
      for (int t = 0; t < s.frame_len; ++t) {
        acc[start + t] += out[t] * inv_n * win[t];
        wsum[start + t] += win[t] * win[t];
      }
    }
    for (std::size_t t = 0; t < out_len; ++t)
      w.channels[ch][t] = wsum[t] > 1e-12 ? acc[t] / wsum[t] : 0.0;
  }

  {
    std::lock_guard<std::mutex> lock(FftwMutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return w;
}

namespace {

struct ByteReader {
  const std::uint8_t *data;
  std::size_t len;
  std::size_t off = 0;
  std::string path;

  void Need(std::size_t n) const {
    if (off + n > len)
      throw IoError(path + ": truncated WAV at byte offset " +
                    std::to_string(off));
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = std::uint32_t(data[off]) | std::uint32_t(data[off + 1]) << 8 |
                      std::uint32_t(data[off + 2]) << 16 |
                      std::uint32_t(data[off + 3]) << 24;
    off += 4;
    return v;
  }
  std::uint16_t U16() {
    Need(2);
    std::uint16_t v =
        std::uint16_t(data[off] | (std::uint16_t(data[off + 1]) << 8));
    off += 2;
    return v;
  }
  std::string Tag() {
    Need(4);
    std::string s(reinterpret_cast<const char *>(data + off), 4);
    off += 4;
    return s;
  }
};

void PutU32le(std::vector<std::uint8_t> *b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b->push_back((v >> (8 * i)) & 0xff);
}
void PutU16le(std::vector<std::uint8_t> *b, std::uint16_t v) {
  b->push_back(v & 0xff);
  b->push_back((v >> 8) & 0xff);
}
void PutTag(std::vector<std::uint8_t> *b, const char *t) {
  for (int i = 0; i < 4; ++i) b->push_back(static_cast<std::uint8_t>(t[i]));
}

}  // namespace

Waveform read_wav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());
  ByteReader r{buf.data(), buf.size(), 0, path};

  if (r.Tag() != "RIFF") throw IoError(path + ": not a RIFF file");
  r.U32();  // riff size, not trusted
  if (r.Tag() != "WAVE") throw IoError(path + ": not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t *data_ptr = nullptr;
  std::uint32_t data_len = 0;

  while (r.off + 8 <= r.len) {
    std::string tag = r.Tag();
    std::uint32_t size = r.U32();
    if (tag == "fmt ") {
      if (size < 16)
        throw IoError(path + ": malformed fmt chunk at byte offset " +
                      std::to_string(r.off - 4));
      std::size_t fmt_start = r.off;
      format = r.U16();
      channels = r.U16();
      rate = r.U32();
      r.U32();  // byte rate
      r.U16();  // block align
      bits = r.U16();
      r.off = fmt_start + size + (size & 1);
      have_fmt = true;
    } else if (tag == "data") {
      r.Need(size);
      data_ptr = r.data + r.off;
      data_len = size;
      r.off += size + (size & 1);
    } else {
      r.Need(size);
      r.off += size + (size & 1);  // skip unknown chunk
    }
  }
  if (!have_fmt) throw IoError(path + ": missing fmt chunk");
  if (data_ptr == nullptr) throw IoError(path + ": missing data chunk");
  if (channels == 0 || rate == 0)
    throw IoError(path + ": malformed fmt fields");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.channels.assign(channels, {});

  if (format == 1 && bits == 16) {
    const std::size_t total = data_len / 2;
    const std::size_t frames = total / channels;
    for (auto &ch : w.channels) ch.resize(frames);
    for (std::size_t k = 0; k < frames; ++k)
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = (k * channels + c) * 2;
        std::int16_t v =
            static_cast<std::int16_t>(data_ptr[i] | (data_ptr[i + 1] << 8));
        w.channels[c][k] = static_cast<double>(v) / 32768.0;
      }
  } else if (format == 3 && bits == 32) {
    const std::size_t total = data_len / 4;
    const std::size_t frames = total / channels;
    for (auto &ch : w.channels) ch.resize(frames);
    for (std::size_t k = 0; k < frames; ++k)
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = (k * channels + c) * 4;
        std::uint32_t bitsv = std::uint32_t(data_ptr[i]) |
                              std::uint32_t(data_ptr[i + 1]) << 8 |
                              std::uint32_t(data_ptr[i + 2]) << 16 |
                              std::uint32_t(data_ptr[i + 3]) << 24;
        float f;
        std::memcpy(&f, &bitsv, 4);
        w.channels[c][k] = static_cast<double>(f);
      }
  } else {
    throw IoError(path + ": unsupported WAV encoding (format=" +
                  std::to_string(format) + ", bits=" + std::to_string(bits) +
                  ")");
  }
  return w;
}

void write_wav(const std::string &path, const Waveform &w, WavEncoding enc) {
  w.Validate();
  if (w.num_channels() == 0)
    throw InvalidInputError("write_wav: no channels");
  const std::uint16_t channels = static_cast<std::uint16_t>(w.num_channels());
  const std::size_t frames = w.num_samples();
  const std::uint16_t bits = (enc == WavEncoding::kPcm16) ? 16 : 32;
  const std::uint16_t block = channels * bits / 8;
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * block);

  std::vector<std::uint8_t> b;
  PutTag(&b, "RIFF");
  const bool is_float = enc == WavEncoding::kFloat32;
  const std::uint32_t fact_len = is_float ? 12 : 0;
  PutU32le(&b, 4 + 24 + fact_len + 8 + data_len);
  PutTag(&b, "WAVE");
  PutTag(&b, "fmt ");
  PutU32le(&b, 16);
  PutU16le(&b, is_float ? 3 : 1);
  PutU16le(&b, channels);
  PutU32le(&b, static_cast<std::uint32_t>(w.sample_rate));
  PutU32le(&b, static_cast<std::uint32_t>(w.sample_rate) * block);
  PutU16le(&b, block);
  PutU16le(&b, bits);
  if (is_float) {
    PutTag(&b, "fact");
    PutU32le(&b, 4);
    PutU32le(&b, static_cast<std::uint32_t>(frames));
  }
  PutTag(&b, "data");
  PutU32le(&b, data_len);

  if (enc == WavEncoding::kPcm16) {
    for (std::size_t k = 0; k < frames; ++k)
      for (int c = 0; c < channels; ++c) {
        double v = std::clamp(w.channels[c][k], -1.0, 32767.0 / 32768.0);
        auto s = static_cast<std::int16_t>(std::lrint(v * 32768.0));
        PutU16le(&b, static_cast<std::uint16_t>(s));
      }
  } else {
    for (std::size_t k = 0; k < frames; ++k)
      for (int c = 0; c < channels; ++c) {
        float f = static_cast<float>(w.channels[c][k]);
        std::uint32_t bitsv;
        std::memcpy(&bitsv, &f, 4);
        PutU32le(&b, bitsv);
      }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(reinterpret_cast<const char *>(b.data()),
           static_cast<std::streamsize>(b.size()));
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace lgmsep

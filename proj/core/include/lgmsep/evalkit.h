// core/include/lgmsep/evalkit.h

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

#ifndef LGMSEP_EVALKIT_H_
#define LGMSEP_EVALKIT_H_

#include <string>
#include <vector>

#include "lgmsep/common.h"
#include "lgmsep/signal-io.h"

namespace lgmsep {

inline constexpr double kMetricClampDb = 60.0;

struct SourceMetrics {
  double sdr = 0.0;
  double isr = 0.0;
  double sir = 0.0;
  double sar = 0.0;
  double si_sdr = 0.0;
};

struct MetricReport {
  std::vector<SourceMetrics> sources;   // in reference order
  std::vector<int> permutation;         // ref index -> matched estimate index
  SourceMetrics average;
};

// Scale-invariant SDR in dB, clamped to [-60, 60]. Invariant to any
// positive rescaling of est.
double si_sdr(const std::vector<double> &est, const std::vector<double> &ref);

// Energy decomposition with zero-lag projections onto nested subspaces:
// coupled target image -> per-channel scalings of the target image -> span
// of all reference image channels -> residual. No multi-tap distortion
// filters; suitable for instantaneous and anechoic material.
MetricReport bss_eval(const std::vector<Waveform> &est_images,
                      const std::vector<Waveform> &ref_images);

// Assignment maximizing total SI-SDR over all J! pairings (J <= 4).
// Returns p with p[ref_index] = est_index.
std::vector<int> resolve_permutation(const std::vector<Waveform> &est,
                                     const std::vector<Waveform> &ref);

// Delimiter-separated metrics table (one row per source plus an average
// row) and a JSON report with the same content. Byte-deterministic.
std::string MetricsTsv(const MetricReport &report);
std::string MetricsJson(const MetricReport &report);

// Per-metric averages formatted for external bar-chart plotting.
std::string BarChartData(const std::vector<std::string> &labels,
                         const std::vector<MetricReport> &reports);

}  // namespace lgmsep

#endif  // LGMSEP_EVALKIT_H_

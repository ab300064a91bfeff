// core/src/evalkit.cc

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

#include "lgmsep/evalkit.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace lgmsep {

namespace {

double Dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double ClampDb(double ratio_num, double ratio_den) {
  if (!(ratio_num >= 0.0) || !(ratio_den >= 0.0)) return -kMetricClampDb;
  if (ratio_den <= 0.0) return kMetricClampDb;
  if (ratio_num <= 0.0) return -kMetricClampDb;
  const double db = 10.0 * std::log10(ratio_num / ratio_den);
  return std::clamp(db, -kMetricClampDb, kMetricClampDb);
}

// Stacks the channels of a multichannel waveform into one vector.
std::vector<double> Stack(const Waveform &w) {
  std::vector<double> out;
  out.reserve(w.num_channels() * w.num_samples());
  for (const auto &ch : w.channels) out.insert(out.end(), ch.begin(), ch.end());
  return out;
}

// Least-squares coefficients of e against the given basis, with a tiny
// ridge so degenerate (duplicated) references stay solvable.
std::vector<double> LsqCoeffs(const std::vector<std::vector<double>> &basis,
                              const std::vector<double> &e) {
  const int m = static_cast<int>(basis.size());
  std::vector<double> gram(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  double trace = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double g = Dot(basis[i], basis[j]);
      gram[i * m + j] = g;
      gram[j * m + i] = g;
    }
    trace += gram[i * m + i];
    rhs[i] = Dot(basis[i], e);
  }
  const double ridge = 1e-12 * std::max(trace, 1e-30);
  for (int i = 0; i < m; ++i) gram[i * m + i] += ridge;

  // Gaussian elimination with partial pivoting.
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(gram[r * m + col]) > std::abs(gram[piv * m + col])) piv = r;
    if (piv != col) {
      for (int c = 0; c < m; ++c) std::swap(gram[piv * m + c], gram[col * m + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    const double d = gram[col * m + col];
    for (int r = col + 1; r < m; ++r) {
      const double f = gram[r * m + col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < m; ++c) gram[r * m + c] -= f * gram[col * m + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> coef(m, 0.0);
  for (int r = m - 1; r >= 0; --r) {
    double v = rhs[r];
    for (int c = r + 1; c < m; ++c) v -= gram[r * m + c] * coef[c];
    coef[r] = v / gram[r * m + r];
  }
  return coef;
}

std::vector<double> Combine(const std::vector<std::vector<double>> &basis,
                            const std::vector<double> &coef, std::size_t len) {
  std::vector<double> out(len, 0.0);
  for (std::size_t b = 0; b < basis.size(); ++b)
    for (std::size_t t = 0; t < len; ++t) out[t] += coef[b] * basis[b][t];
  return out;
}

double Energy(const std::vector<double> &x) { return Dot(x, x); }

}  // namespace

double si_sdr(const std::vector<double> &est, const std::vector<double> &ref) {
  if (est.size() != ref.size())
    throw InvalidInputError("si_sdr: length mismatch");
  const double rr = Dot(ref, ref);
  if (rr <= 0.0) throw InvalidInputError("si_sdr: zero reference");
  const double alpha = Dot(est, ref) / rr;
  double noise = 0.0;
  for (std::size_t t = 0; t < est.size(); ++t) {
    const double d = est[t] - alpha * ref[t];
    noise += d * d;
  }
  return ClampDb(alpha * alpha * rr, noise);
}

std::vector<int> resolve_permutation(const std::vector<Waveform> &est,
                                     const std::vector<Waveform> &ref) {
  const int J = static_cast<int>(ref.size());
  if (static_cast<int>(est.size()) != J)
    throw InvalidInputError("resolve_permutation: list sizes differ");
  if (J > 4)
    throw InvalidInputError("resolve_permutation: exhaustive search limited to J <= 4");

  std::vector<std::vector<double>> est_s(J), ref_s(J);
  for (int j = 0; j < J; ++j) {
    est_s[j] = Stack(est[j]);
    ref_s[j] = Stack(ref[j]);
  }
  std::vector<std::vector<double>> score(J, std::vector<double>(J));
  for (int r = 0; r < J; ++r)
    for (int e = 0; e < J; ++e) score[r][e] = si_sdr(est_s[e], ref_s[r]);

  std::vector<int> idx(J);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> best = idx;
  double best_total = -1e300;
  do {
    double total = 0.0;
    for (int r = 0; r < J; ++r) total += score[r][idx[r]];
    if (total > best_total) {
      best_total = total;
      best = idx;
    }
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

MetricReport bss_eval(const std::vector<Waveform> &est_images,
                      const std::vector<Waveform> &ref_images) {
  const int J = static_cast<int>(ref_images.size());
  if (static_cast<int>(est_images.size()) != J || J == 0)
    throw InvalidInputError("bss_eval: need equally many estimates and references");
  const int I = ref_images[0].num_channels();
  const std::size_t T = ref_images[0].num_samples();
  for (const auto &w : ref_images)
    if (w.num_channels() != I || w.num_samples() != T)
      throw InvalidInputError("bss_eval: reference shapes differ");
  for (const auto &w : est_images)
    if (w.num_channels() != I || w.num_samples() != T)
      throw InvalidInputError("bss_eval: estimate shape differs from references");

  MetricReport report;
  report.permutation = resolve_permutation(est_images, ref_images);

  // Per-channel basis vectors for every reference image, channel-embedded
  // into the stacked space.
  const std::size_t len = T * I;
  std::vector<std::vector<std::vector<double>>> chan_basis(J);
  for (int q = 0; q < J; ++q) {
    chan_basis[q].assign(I, std::vector<double>(len, 0.0));
    for (int i = 0; i < I; ++i)
      for (std::size_t t = 0; t < T; ++t)
        chan_basis[q][i][i * T + t] = ref_images[q].channels[i][t];
  }
  std::vector<std::vector<double>> all_basis;
  for (int q = 0; q < J; ++q)
    for (int i = 0; i < I; ++i) all_basis.push_back(chan_basis[q][i]);

  report.sources.resize(J);
  for (int r = 0; r < J; ++r) {
    const int e_idx = report.permutation[r];
    const std::vector<double> est = Stack(est_images[e_idx]);
    const std::vector<double> ref = Stack(ref_images[r]);

    // Nested projections: coupled target -> per-channel target -> all refs.
    const double rr = Energy(ref);
    const double alpha = rr > 0.0 ? Dot(est, ref) / rr : 0.0;
    std::vector<double> p1(len);
    for (std::size_t t = 0; t < len; ++t) p1[t] = alpha * ref[t];

    const auto c2 = LsqCoeffs(chan_basis[r], est);
    const auto p2 = Combine(chan_basis[r], c2, len);
    const auto c3 = LsqCoeffs(all_basis, est);
    const auto p3 = Combine(all_basis, c3, len);

    double e_target = Energy(p1);
    double e_spatial = 0.0, e_interf = 0.0, e_artif = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double ds = p2[t] - p1[t];
      const double di = p3[t] - p2[t];
      const double da = est[t] - p3[t];
      e_spatial += ds * ds;
      e_interf += di * di;
      e_artif += da * da;
    }

    SourceMetrics &m = report.sources[r];
    m.sdr = ClampDb(e_target, e_spatial + e_interf + e_artif);
    m.isr = ClampDb(e_target, e_spatial);
    m.sir = ClampDb(e_target + e_spatial, e_interf);
    m.sar = ClampDb(e_target + e_spatial + e_interf, e_artif);
    m.si_sdr = si_sdr(est, ref);
  }

  auto &avg = report.average;
  for (const auto &m : report.sources) {
    avg.sdr += m.sdr;
    avg.isr += m.isr;
    avg.sir += m.sir;
    avg.sar += m.sar;
    avg.si_sdr += m.si_sdr;
  }
  avg.sdr /= J;
  avg.isr /= J;
  avg.sir /= J;
  avg.sar /= J;
  avg.si_sdr /= J;
  return report;
}

namespace {

std::string FmtDb(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string MetricsTsv(const MetricReport &report) {
  std::string out = "source\tmatched_est\tSDR\tISR\tSIR\tSAR\tSI-SDR\n";
  for (std::size_t r = 0; r < report.sources.size(); ++r) {
    const auto &m = report.sources[r];
    out += std::to_string(r) + "\t" + std::to_string(report.permutation[r]) +
           "\t" + FmtDb(m.sdr) + "\t" + FmtDb(m.isr) + "\t" + FmtDb(m.sir) +
           "\t" + FmtDb(m.sar) + "\t" + FmtDb(m.si_sdr) + "\n";
  }
  const auto &a = report.average;
  out += "average\t-\t" + FmtDb(a.sdr) + "\t" + FmtDb(a.isr) + "\t" +
         FmtDb(a.sir) + "\t" + FmtDb(a.sar) + "\t" + FmtDb(a.si_sdr) + "\n";
  return out;
}

std::string MetricsJson(const MetricReport &report) {
  nlohmann::ordered_json j;
  j["note"] =
      "zero-lag projection decomposition (no multi-tap distortion filters)";
  j["permutation"] = report.permutation;
  j["sources"] = nlohmann::ordered_json::array();
  for (const auto &m : report.sources) {
    j["sources"].push_back({{"sdr", FmtDb(m.sdr)},
                            {"isr", FmtDb(m.isr)},
                            {"sir", FmtDb(m.sir)},
                            {"sar", FmtDb(m.sar)},
                            {"si_sdr", FmtDb(m.si_sdr)}});
  }
  const auto &a = report.average;
  j["average"] = {{"sdr", FmtDb(a.sdr)},
                  {"isr", FmtDb(a.isr)},
                  {"sir", FmtDb(a.sir)},
                  {"sar", FmtDb(a.sar)},
                  {"si_sdr", FmtDb(a.si_sdr)}};
  return j.dump(2) + "\n";
}

std::string BarChartData(const std::vector<std::string> &labels,
                         const std::vector<MetricReport> &reports) {
  if (labels.size() != reports.size())
    throw InvalidInputError("BarChartData: labels do not match reports");
  std::string out = "label\tSDR\tISR\tSIR\tSAR\tSI-SDR\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto &a = reports[i].average;
    out += labels[i] + "\t" + FmtDb(a.sdr) + "\t" + FmtDb(a.isr) + "\t" +
           FmtDb(a.sir) + "\t" + FmtDb(a.sar) + "\t" + FmtDb(a.si_sdr) + "\n";
  }
  return out;
}

}  // namespace lgmsep

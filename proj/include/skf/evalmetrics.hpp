// SDR / SIR computation from an orthogonal decomposition of the estimate
// against the true sources, plus order-statistic summaries and report output.
//
// Projections are zero-lag (scalar coefficients per source, solved through the
// Gram system), not the evaluation campaign's 512-tap filtered variants, so
// absolute dB values are not comparable with published campaign numbers.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "skf/stft.hpp"

namespace skf {

struct Decomposition {
  std::vector<double> s_target;  // projection onto the true target
  std::vector<double> e_interf;  // remaining in-span component
  std::vector<double> e_artif;   // out-of-span residual
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Gaussian elimination with partial pivoting on a dense K x K system.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-300)
      throw std::runtime_error("degenerate source set");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace detail

/// Splits the estimate into the projection onto true source j, the
/// interference component inside the span of all true sources, and the
/// artifact residual. The three parts are mutually orthogonal and sum back to
/// the estimate.
inline Decomposition decompose(const AudioBuffer& estimate,
                               const std::vector<AudioBuffer>& true_sources, std::size_t j) {
  if (j >= true_sources.size()) throw std::invalid_argument("decompose: bad source index");
  const std::size_t len = estimate.samples.size();
  for (const auto& s : true_sources)
    if (s.samples.size() != len) throw std::invalid_argument("decompose: length mismatch");
  const std::vector<double>& sj = true_sources[j].samples;
  const double sj_energy = detail::dot(sj, sj);
  if (sj_energy <= 0.0) throw std::runtime_error("zero-energy target source");

  const std::size_t k = true_sources.size();
  std::vector<std::vector<double>> gram(k, std::vector<double>(k, 0.0));
  std::vector<double> rhs(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    rhs[a] = detail::dot(estimate.samples, true_sources[a].samples);
    for (std::size_t b = a; b < k; ++b) {
      gram[a][b] = detail::dot(true_sources[a].samples, true_sources[b].samples);
      gram[b][a] = gram[a][b];
    }
  }
  const std::vector<double> coef = detail::solve_dense(gram, rhs);

  Decomposition d;
  d.s_target.resize(len);
  d.e_interf.resize(len);
  d.e_artif.resize(len);
  const double target_coef = rhs[j] / sj_energy;
  for (std::size_t i = 0; i < len; ++i) {
    double in_span = 0.0;
    for (std::size_t a = 0; a < k; ++a) in_span += coef[a] * true_sources[a].samples[i];
    d.s_target[i] = target_coef * sj[i];
    d.e_interf[i] = in_span - d.s_target[i];
    d.e_artif[i] = estimate.samples[i] - in_span;
  }
  return d;
}

namespace detail {

inline double energy_ratio_db(double num, double den) {
  if (num <= 0.0) return -100.0;
  if (den <= 0.0) return 100.0;
  return std::clamp(10.0 * std::log10(num / den), -100.0, 100.0);
}

}  // namespace detail

/// Signal-to-distortion ratio in dB; degenerate ratios capped at +/-100 dB.
inline double sdr(const Decomposition& d) {
  const double num = detail::dot(d.s_target, d.s_target);
  std::vector<double> err(d.e_interf.size());
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = d.e_interf[i] + d.e_artif[i];
  return detail::energy_ratio_db(num, detail::dot(err, err));
}

/// Signal-to-interference ratio in dB; same capping as sdr.
inline double sir(const Decomposition& d) {
  return detail::energy_ratio_db(detail::dot(d.s_target, d.s_target),
                                 detail::dot(d.e_interf, d.e_interf));
}

struct Summary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Order statistics with linear interpolation between ranks.
inline Summary aggregate(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate: empty list");
  std::sort(values.begin(), values.end());
  auto quantile = [&values](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return Summary{quantile(0.5), quantile(0.25), quantile(0.75)};
}

struct TrackMetrics {
  std::string track;
  double sdr_db = 0.0;
  double sir_db = 0.0;
};

struct EvalReport {
  std::vector<TrackMetrics> tracks;
};

inline std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char buf[64];
  std::vector<double> sdrs, sirs;
  for (const auto& t : report.tracks) {
    std::snprintf(buf, sizeof buf, "%-20s SDR %9.4f dB   SIR %9.4f dB", t.track.c_str(),
                  t.sdr_db, t.sir_db);
    out << buf << "\n";
    sdrs.push_back(t.sdr_db);
    sirs.push_back(t.sir_db);
  }
  if (!report.tracks.empty()) {
    const Summary s_sdr = aggregate(sdrs);
    const Summary s_sir = aggregate(sirs);
    std::snprintf(buf, sizeof buf, "median               SDR %9.4f dB   SIR %9.4f dB",
                  s_sdr.median, s_sir.median);
    out << buf << "\n";
  }
  return out.str();
}

/// Machine-readable key-value report: one "<track>.<metric>=<value>" line per
/// metric, followed by summary statistics.
inline void write_report(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report for writing: " + path);
  char buf[64];
  std::vector<double> sdrs, sirs;
  for (const auto& t : report.tracks) {
    std::snprintf(buf, sizeof buf, "%.6f", t.sdr_db);
    out << t.track << ".SDR=" << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.6f", t.sir_db);
    out << t.track << ".SIR=" << buf << "\n";
    sdrs.push_back(t.sdr_db);
    sirs.push_back(t.sir_db);
  }
  if (!report.tracks.empty()) {
    const Summary s_sdr = aggregate(sdrs);
    const Summary s_sir = aggregate(sirs);
    auto kv = [&out, &buf](const char* key, double v) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << key << "=" << buf << "\n";
    };
    kv("summary.SDR.median", s_sdr.median);
    kv("summary.SDR.q1", s_sdr.q1);
    kv("summary.SDR.q3", s_sdr.q3);
    kv("summary.SIR.median", s_sir.median);
    kv("summary.SIR.q1", s_sir.q1);
    kv("summary.SIR.q3", s_sir.q3);
  }
  if (!out) throw std::runtime_error("report write failed: " + path);
}

}  // namespace skf

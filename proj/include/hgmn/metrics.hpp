// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgmn {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfusionCounts {
  std::vector<long> tp, fp, fn;
  long total = 0;
};

inline ConfusionCounts confusion(const std::vector<int>& pred,
                                 const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw MetricError("prediction/truth length mismatch");
  if (pred.empty()) throw MetricError("empty prediction set");
  int m = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    m = std::max({m, pred[i] + 1, truth[i] + 1});
  ConfusionCounts c;
  c.tp.assign(static_cast<size_t>(m), 0);
  c.fp.assign(static_cast<size_t>(m), 0);
  c.fn.assign(static_cast<size_t>(m), 0);
  c.total = static_cast<long>(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) {
      c.tp[static_cast<size_t>(pred[i])]++;
    } else {
      c.fp[static_cast<size_t>(pred[i])]++;
      c.fn[static_cast<size_t>(truth[i])]++;
    }
  }
  return c;
}

/// Micro-averaged F1. For single-label multiclass prediction this equals
/// accuracy.
inline double micro_f1(const std::vector<int>& pred,
                       const std::vector<int>& truth) {
  ConfusionCounts c = confusion(pred, truth);
  long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < c.tp.size(); ++i) {
    tp += c.tp[i];
    fp += c.fp[i];
    fn += c.fn[i];
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

struct Improvement {
  double ai = 0.0;       // p1 - p2
  double ir_pct = 0.0;   // (p1 - p2) / p2 * 100
};

inline Improvement improvement(double p1, double p2) {
  if (p2 <= 0.0) throw MetricError("baseline score must be positive");
  Improvement r;
  r.ai = p1 - p2;
  r.ir_pct = r.ai / p2 * 100.0;
  return r;
}

struct ReportRow {
  std::string name;
  double mean = 0.0;  // percent
  double stdev = 0.0;
  double best = 0.0;
};

inline std::string format_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

/// Aligned-text table of mean +/- std and max scores, with AI/IR rows when a
/// baseline score is supplied. Scores are percentages, two decimals.
inline void render_report(const std::vector<ReportRow>& rows,
                          std::ostream& out,
                          const double* best_baseline = nullptr) {
  if (rows.empty()) throw MetricError("report needs at least one row");
  size_t w = 5;
  for (auto& r : rows) w = std::max(w, r.name.size());
  out << std::left << std::setw(static_cast<int>(w) + 2) << "model"
      << std::setw(18) << "mean" << "max\n";
  double top = rows.front().best;
  for (auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(w) + 2) << r.name
        << std::setw(18) << (format_pct(r.mean) + " +/- " + format_pct(r.stdev))
        << format_pct(r.best) << '\n';
    top = std::max(top, r.best);
  }
  if (best_baseline) {
    Improvement imp = improvement(top, *best_baseline);
    out << std::left << std::setw(static_cast<int>(w) + 2) << "AI"
        << format_pct(imp.ai) << '\n';
    out << std::left << std::setw(static_cast<int>(w) + 2) << "IR"
        << format_pct(imp.ir_pct) << "%\n";
  }
}

inline void render_report_csv(const std::vector<ReportRow>& rows,
                              std::ostream& out,
                              const double* best_baseline = nullptr) {
  if (rows.empty()) throw MetricError("report needs at least one row");
  out << "model,mean,std,max\n";
  double top = rows.front().best;
  for (auto& r : rows) {
    out << r.name << ',' << format_pct(r.mean) << ',' << format_pct(r.stdev)
        << ',' << format_pct(r.best) << '\n';
    top = std::max(top, r.best);
  }
  if (best_baseline) {
    Improvement imp = improvement(top, *best_baseline);
    out << "AI," << format_pct(imp.ai) << ",,\n";
    out << "IR," << format_pct(imp.ir_pct) << ",,\n";
  }
}

}  // namespace hgmn

#include "focus/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "focus/error.hpp"

namespace focus::eval {
namespace {

double ratio(long num, long den, bool empty) {
  if (den == 0) return empty ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricReport metrics_from_confusion(const std::vector<std::vector<long>>& confusion) {
  const int k = static_cast<int>(confusion.size());
  if (k < 2) throw ValidationError("metrics need at least 2 classes");
  for (const auto& row : confusion) {
    if (static_cast<int>(row.size()) != k) throw ValidationError("confusion matrix must be square");
  }
  MetricReport rep;
  rep.classes = k;
  rep.confusion = confusion;
  long correct = 0;
  for (int i = 0; i < k; ++i) {
    correct += confusion[i][i];
    for (int j = 0; j < k; ++j) rep.total += confusion[i][j];
  }
  rep.overall_accuracy = rep.total ? static_cast<double>(correct) / rep.total : 0.0;
  for (int c = 0; c < k; ++c) {
    const long tp = confusion[c][c];
    long fn = 0, fp = 0;
    for (int j = 0; j < k; ++j) {
      if (j == c) continue;
      fn += confusion[c][j];
      fp += confusion[j][c];
    }
    const long tn = rep.total - tp - fn - fp;
    const bool empty = tp + fp + fn == 0;
    ClassMetrics m;
    m.support = tp + fn;
    m.accuracy = rep.total ? static_cast<double>(tp + tn) / rep.total : 0.0;
    m.precision = ratio(tp, tp + fp, empty);
    m.recall = ratio(tp, tp + fn, empty);
    m.fscore = ratio(2 * tp, 2 * tp + fp + fn, empty);
    m.iou = ratio(tp, tp + fp + fn, empty);
    rep.per_class.push_back(m);
  }
  for (const auto& m : rep.per_class) {
    rep.macro.accuracy += m.accuracy / k;
    rep.macro.iou += m.iou / k;
    rep.macro.fscore += m.fscore / k;
    rep.macro.precision += m.precision / k;
    rep.macro.recall += m.recall / k;
    rep.macro.support += m.support;
  }
  return rep;
}

MetricReport metrics_from_labels(std::span<const int> truth, std::span<const int> pred, int classes) {
  if (truth.size() != pred.size()) throw ValidationError("truth and prediction lengths differ");
  std::vector<std::vector<long>> conf(classes, std::vector<long>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || pred[i] < 0 || pred[i] >= classes) {
      throw ValidationError("label out of range at index " + std::to_string(i));
    }
    ++conf[truth[i]][pred[i]];
  }
  return metrics_from_confusion(conf);
}

MetricReport sample_point_metrics(std::span<const RasterGrid> maps, std::span<const labeling::SamplePoint> samples,
                                  labeling::LabelMode mode) {
  const int k = labeling::class_count(mode);
  const int non_water = labeling::non_water_label(mode);
  std::vector<int> truth, pred;
  std::vector<std::string> offenders;
  for (const auto& s : samples) {
    const RasterGrid* best = nullptr;
    GridIndex best_ix{};
    double best_d = 0.0;
    for (const auto& m : maps) {
      auto ix = m.locate(s.location);
      if (!ix) continue;
      const double dr = ix->row - (m.height() - 1) / 2.0;
      const double dc = ix->col - (m.width() - 1) / 2.0;
      const double d = dr * dr + dc * dc;
      if (!best || d < best_d) {
        best = &m;
        best_ix = *ix;
        best_d = d;
      }
    }
    if (!best) {
      offenders.push_back(s.id + " (no prediction)");
      continue;
    }
    const double v = best->at(best_ix);
    if (best->is_nodata(v) || static_cast<int>(v) == non_water) {
      offenders.push_back(s.id + " (non-water)");
      continue;
    }
    truth.push_back(s.label);
    pred.push_back(static_cast<int>(v));
  }
  if (!offenders.empty()) {
    std::string msg = "sample_point_metrics: samples without a water prediction:";
    for (const auto& o : offenders) msg += " " + o;
    throw ValidationError(msg);
  }
  return metrics_from_labels(truth, pred, k);
}

std::string format_report_csv(const MetricReport& r) {
  std::ostringstream out;
  out << "class,accuracy,iou,fscore,precision,recall,support\n";
  auto row = [&out](const std::string& name, const ClassMetrics& m) {
    out << name << ',' << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", m.accuracy, m.iou, m.fscore,
                                      m.precision, m.recall)
        << ',' << m.support << '\n';
  };
  for (int c = 0; c < r.classes; ++c) row(std::to_string(c), r.per_class[c]);
  row("macro", r.macro);
  return out.str();
}

std::string format_report_table(const MetricReport& r) {
  std::string out = fmt::format("{:<8}{:>10}{:>10}{:>10}{:>11}{:>10}{:>9}\n", "class", "accuracy", "iou", "fscore",
                                "precision", "recall", "support");
  auto row = [&out](const std::string& name, const ClassMetrics& m) {
    out += fmt::format("{:<8}{:>10.4f}{:>10.4f}{:>10.4f}{:>11.4f}{:>10.4f}{:>9}\n", name, m.accuracy, m.iou,
                       m.fscore, m.precision, m.recall, m.support);
  };
  for (int c = 0; c < r.classes; ++c) row(std::to_string(c), r.per_class[c]);
  row("macro", r.macro);
  out += fmt::format("overall accuracy {:.4f} over {} points\n", r.overall_accuracy, r.total);
  return out;
}

double ece(std::span<const double> conf, std::span<const std::uint8_t> correct, int bins) {
  if (conf.empty()) throw ValidationError("ece: empty input");
  if (conf.size() != correct.size()) throw ValidationError("ece: confidences and outcomes differ in length");
  if (bins < 1) throw ValidationError("ece: need at least one bin");
  std::vector<double> sum_conf(bins, 0.0), sum_acc(bins, 0.0);
  std::vector<long> count(bins, 0);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    const double c = conf[i];
    if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("ece: confidence outside [0,1]");
    const int b = std::min(static_cast<int>(std::floor(c * bins)), bins - 1);
    sum_conf[b] += c;
    sum_acc[b] += correct[i] ? 1.0 : 0.0;
    ++count[b];
  }
  double e = 0.0;
  const double n = static_cast<double>(conf.size());
  for (int b = 0; b < bins; ++b) {
    if (!count[b]) continue;
    e += (count[b] / n) * std::abs(sum_acc[b] / count[b] - sum_conf[b] / count[b]);
  }
  return e;
}

Overlap overlap_of(const RasterGrid& a, const RasterGrid& b) {
  const double cs = a.cell_size();
  if (std::abs(b.cell_size() - cs) > 1e-9 * cs) throw ValidationError("overlap: grids have different cell sizes");
  const double fc = (b.origin().easting - a.origin().easting) / cs;
  const double fr = (a.origin().northing - b.origin().northing) / cs;
  const double rc = std::round(fc);
  const double rr = std::round(fr);
  if (std::abs(fc - rc) > 1e-6 || std::abs(fr - rr) > 1e-6) {
    throw ValidationError("overlap: grids are not aligned to a common pixel lattice");
  }
  const int dc = static_cast<int>(rc);  // b col 0 sits at a col dc
  const int dr = static_cast<int>(rr);
  Overlap o;
  o.row0 = std::max(0, dr);
  o.col0 = std::max(0, dc);
  o.rows = std::max(0, std::min(a.height(), dr + b.height()) - o.row0);
  o.cols = std::max(0, std::min(a.width(), dc + b.width()) - o.col0);
  o.row_shift = -dr;
  o.col_shift = -dc;
  return o;
}

double consistency_agreement(const RasterGrid& a, const RasterGrid& b, std::optional<double> ignore) {
  const Overlap o = overlap_of(a, b);
  long n = 0, same = 0;
  for (int r = o.row0; r < o.row0 + o.rows; ++r) {
    for (int c = o.col0; c < o.col0 + o.cols; ++c) {
      const double va = a.at(r, c);
      const double vb = b.at(r + o.row_shift, c + o.col_shift);
      if (a.is_nodata(va) || b.is_nodata(vb)) continue;
      if (ignore && (va == *ignore || vb == *ignore)) continue;
      ++n;
      same += va == vb;
    }
  }
  if (n == 0) throw ValidationError("consistency_agreement: empty overlap");
  return static_cast<double>(same) / n;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ValidationError("wilcoxon: need two nonempty samples of equal length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  }
  if (d.empty()) throw ValidationError("wilcoxon: all differences are zero");
  const int n = static_cast<int>(d.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return std::abs(d[x]) < std::abs(d[y]); });
  // Doubled average ranks stay integral under ties.
  std::vector<int> rank2(n);
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    for (int t = i; t <= j; ++t) rank2[order[t]] = (i + 1) + (j + 1);
    i = j + 1;
  }
  WilcoxonResult res;
  res.n = n;
  long wp2 = 0, wm2 = 0;
  for (int i = 0; i < n; ++i) (d[i] > 0 ? wp2 : wm2) += rank2[i];
  res.w_plus = wp2 / 2.0;
  res.w_minus = wm2 / 2.0;
  res.w = std::min(res.w_plus, res.w_minus);
  const long w2 = std::min(wp2, wm2);
  if (n <= 20) {
    // Count sign assignments whose positive doubled-rank sum is <= w2.
    const long total2 = wp2 + wm2;
    std::vector<double> ways(total2 + 1, 0.0);
    ways[0] = 1.0;
    for (int i = 0; i < n; ++i) {
      for (long s = total2; s >= rank2[i]; --s) ways[s] += ways[s - rank2[i]];
    }
    double tail = 0.0;
    for (long s = 0; s <= w2; ++s) tail += ways[s];
    res.p_one_sided = tail / std::ldexp(1.0, n);
    res.exact = true;
  } else {
    double tie = 0.0;
    for (int i = 0; i < n;) {
      int j = i;
      while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
      const double t = j - i + 1;
      tie += t * t * t - t;
      i = j + 1;
    }
    const double mean = n * (n + 1) / 4.0;
    const double var = n * (n + 1) * (2.0 * n + 1) / 24.0 - tie / 48.0;
    const double z = (res.w - mean + 0.5) / std::sqrt(var);
    res.p_one_sided = 0.5 * std::erfc(-z / std::sqrt(2.0));
    res.exact = false;
  }
  res.p_one_sided = std::min(1.0, res.p_one_sided);
  res.p_two_sided = std::min(1.0, 2.0 * res.p_one_sided);
  return res;
}

std::vector<labeling::NoiseWeights> default_weight_grid() {
  std::array<int, 4> w = {1, 2, 3, 4};
  std::vector<labeling::NoiseWeights> out;
  do {
    out.push_back({w[0] / 10.0, w[1] / 10.0, w[2] / 10.0, w[3] / 10.0});
  } while (std::next_permutation(w.begin(), w.end()));
  return out;
}

std::vector<GridRow> noise_weight_grid_search(std::span<const labeling::NoiseWeights> configs,
                                              const GridHarness& harness) {
  std::vector<GridRow> rows;
  for (const auto& w : configs) {
    w.validate();
    rows.push_back({w, harness(w)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const GridRow& x, const GridRow& y) { return x.report.macro.fscore > y.report.macro.fscore; });
  return rows;
}

std::string format_grid_csv(std::span<const GridRow> rows) {
  std::string out = "dischargers,landcover,sample_dist,downstream,iou,fscore,precision,recall,accuracy\n";
  for (const auto& r : rows) {
    const auto& m = r.report.macro;
    out += fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.weights.dischargers,
                       r.weights.landcover, r.weights.sample_dist, r.weights.downstream, m.iou, m.fscore,
                       m.precision, m.recall, m.accuracy);
  }
  return out;
}

std::string format_grid_table(std::span<const GridRow> rows) {
  std::string out = fmt::format("{:>6}{:>6}{:>6}{:>6}{:>9}{:>9}{:>11}{:>9}{:>10}\n", "dis", "lc", "sd", "ds", "iou",
                                "fscore", "precision", "recall", "accuracy");
  for (const auto& r : rows) {
    const auto& m = r.report.macro;
    out += fmt::format("{:>6.1f}{:>6.1f}{:>6.1f}{:>6.1f}{:>9.4f}{:>9.4f}{:>11.4f}{:>9.4f}{:>10.4f}\n",
                       r.weights.dischargers, r.weights.landcover, r.weights.sample_dist, r.weights.downstream, m.iou,
                       m.fscore, m.precision, m.recall, m.accuracy);
  }
  return out;
}

}  // namespace focus::eval

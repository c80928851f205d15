#include "signxfer/eval.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "signxfer/errors.hpp"

namespace signxfer {

namespace fs = std::filesystem;

double tiou(const Span& a, const Span& b) {
  const int inter = std::min(a.end, b.end) - std::max(a.start, b.start);
  if (inter <= 0) return 0.0;
  const int uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Class indices of the k largest logits; ties resolved to lower index.
std::vector<int> topk_classes(const Matrix& logits, std::size_t row, std::size_t k) {
  std::vector<int> order(logits.cols());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = static_cast<int>(c);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return logits.at(row, static_cast<std::size_t>(a)) >
           logits.at(row, static_cast<std::size_t>(b));
  });
  order.resize(k);
  return order;
}

bool hit_topk(const Matrix& logits, std::size_t row, int label, std::size_t k) {
  for (int c : topk_classes(logits, row, k)) {
    if (c == label) return true;
  }
  return false;
}

}  // namespace

double topk_accuracy(const Matrix& logits, const std::vector<int>& labels,
                     std::size_t k, AccuracyMode mode, const GlossVocabulary* vocab) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("topk_accuracy: " + std::to_string(logits.rows()) +
                     " logit rows vs " + std::to_string(labels.size()) + " labels");
  }
  if (k == 0 || k > logits.cols()) {
    throw ShapeError("topk_accuracy: k=" + std::to_string(k) + " outside [1," +
                     std::to_string(logits.cols()) + "]");
  }

  if (mode == AccuracyMode::kMicro) {
    if (labels.empty()) throw DataError("topk_accuracy: no instances");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (hit_topk(logits, i, labels[i], k)) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(labels.size());
  }

  const std::size_t classes = logits.cols();
  std::vector<std::size_t> count(classes, 0), hits(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    count[static_cast<std::size_t>(labels[i])] += 1;
    if (hit_topk(logits, i, labels[i], k)) hits[static_cast<std::size_t>(labels[i])] += 1;
  }
  double total = 0.0;
  for (std::size_t cls = 0; cls < classes; ++cls) {
    if (count[cls] == 0) {
      std::string name = vocab ? vocab->glosses.at(cls) : std::to_string(cls);
      throw DataError("topk_accuracy: macro average undefined, class '" + name +
                      "' (" + std::to_string(cls) + ") has no test instance");
    }
    total += static_cast<double>(hits[cls]) / static_cast<double>(count[cls]);
  }
  return 100.0 * total / static_cast<double>(classes);
}

std::vector<Span> localize(const NewsStream& stream,
                           const std::function<Matrix(const Matrix&)>& scorer,
                           const LocalizeConfig& cfg) {
  std::vector<Span> raw;
  const int total = static_cast<int>(stream.frames.rows());
  for (int size = cfg.window_min; size <= cfg.window_max; ++size) {
    for (int start = 0; start + size <= total; start += cfg.stride) {
      Matrix window(static_cast<std::size_t>(size), stream.frames.cols());
      for (int r = 0; r < size; ++r)
        for (std::size_t c = 0; c < window.cols(); ++c)
          window.at(static_cast<std::size_t>(r), c) =
              stream.frames.at(static_cast<std::size_t>(start + r), c);
      const Matrix probs = scorer(window);
      for (std::size_t cls = 0; cls < probs.cols(); ++cls) {
        const double p = probs.at(0, cls);
        if (p > cfg.probability_gate) {
          raw.push_back({static_cast<int>(cls), start, start + size, p});
        }
      }
    }
  }

  auto by_score = [](const Span& a, const Span& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cls != b.cls) return a.cls < b.cls;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  };
  std::sort(raw.begin(), raw.end(), by_score);
  if (!cfg.nms) return raw;

  std::vector<Span> kept;
  for (const Span& candidate : raw) {
    bool suppressed = false;
    for (const Span& winner : kept) {
      if (winner.cls == candidate.cls && tiou(winner, candidate) >= cfg.nms_tiou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(candidate);
  }
  return kept;
}

namespace {

struct ClassDetections {
  std::vector<const LocalizedSpan*> detections;
  std::vector<const LocalizedSpan*> ground_truth;
};

double average_precision(const ClassDetections& cls, double threshold) {
  std::vector<const LocalizedSpan*> dets = cls.detections;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const LocalizedSpan* a, const LocalizedSpan* b) {
                     if (a->span.score != b->span.score)
                       return a->span.score > b->span.score;
                     if (a->stream_id != b->stream_id) return a->stream_id < b->stream_id;
                     if (a->span.start != b->span.start) return a->span.start < b->span.start;
                     return a->span.end < b->span.end;
                   });

  std::vector<bool> gt_used(cls.ground_truth.size(), false);
  std::vector<bool> is_tp(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    double best = 0.0;
    std::size_t best_gt = cls.ground_truth.size();
    for (std::size_t j = 0; j < cls.ground_truth.size(); ++j) {
      if (gt_used[j]) continue;
      if (cls.ground_truth[j]->stream_id != dets[i]->stream_id) continue;
      const double overlap = tiou(dets[i]->span, cls.ground_truth[j]->span);
      if (overlap > best) {
        best = overlap;
        best_gt = j;
      }
    }
    if (best_gt < cls.ground_truth.size() && best >= threshold) {
      gt_used[best_gt] = true;
      is_tp[i] = true;
    }
  }

  const double gt_count = static_cast<double>(cls.ground_truth.size());
  std::vector<double> precision(dets.size()), recall(dets.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (is_tp[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / gt_count;
  }
  // all-point interpolation: running max of precision from the right
  for (std::size_t i = dets.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

}  // namespace

std::map<double, double> map_at_tiou(const std::vector<LocalizedSpan>& detections,
                                     const std::vector<LocalizedSpan>& ground_truth,
                                     const std::vector<double>& thresholds) {
  if (ground_truth.empty()) {
    throw DataError("map_at_tiou: no ground-truth spans");
  }
  std::map<int, ClassDetections> per_class;
  for (const LocalizedSpan& gt : ground_truth) {
    per_class[gt.span.cls].ground_truth.push_back(&gt);
  }
  for (const LocalizedSpan& det : detections) {
    auto it = per_class.find(det.span.cls);
    if (it != per_class.end()) it->second.detections.push_back(&det);
  }

  std::map<double, double> result;
  for (double threshold : thresholds) {
    double total = 0.0;
    for (const auto& [cls, entry] : per_class) {
      total += average_precision(entry, threshold);
    }
    result[threshold] = total / static_cast<double>(per_class.size());
  }
  return result;
}

SignSignature sign_signature(const ForwardTrace& trace, std::size_t downsample) {
  if (trace.attention.rows() != 1 || trace.attention.cols() == 0) {
    throw ShapeError("sign_signature: attention row missing");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.attention.cols(); ++i) {
    if (trace.attention.at(0, i) > trace.attention.at(0, best)) best = i;
  }
  SignSignature sig;
  sig.feature_index = best;
  sig.raw_start = static_cast<int>(best * downsample);
  sig.raw_end = static_cast<int>((best + 1) * downsample);
  return sig;
}

AgreementResult agreement_filter(const std::vector<std::pair<Span, Span>>& pairs,
                                 double min_tiou) {
  AgreementResult result;
  if (pairs.empty()) return result;
  double total = 0.0;
  for (const auto& [a, b] : pairs) {
    const double overlap = tiou(a, b);
    total += overlap;
    if (overlap >= min_tiou) result.kept.push_back({a, b});
  }
  result.mean_tiou = total / static_cast<double>(pairs.size());
  return result;
}

EvalReport evaluate_recognition(const Matrix& logits, const std::vector<int>& labels,
                                const GlossVocabulary& vocab) {
  EvalReport report;
  const std::size_t top5 = std::min<std::size_t>(5, logits.cols());
  report.micro_top1 = topk_accuracy(logits, labels, 1, AccuracyMode::kMicro, &vocab);
  report.micro_top5 = topk_accuracy(logits, labels, top5, AccuracyMode::kMicro, &vocab);
  report.macro_top1 = topk_accuracy(logits, labels, 1, AccuracyMode::kMacro, &vocab);
  report.macro_top5 = topk_accuracy(logits, labels, top5, AccuracyMode::kMacro, &vocab);

  std::vector<std::size_t> count(vocab.size(), 0), hits(vocab.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    count[static_cast<std::size_t>(labels[i])] += 1;
    if (hit_topk(logits, i, labels[i], 1)) hits[static_cast<std::size_t>(labels[i])] += 1;
  }
  for (std::size_t cls = 0; cls < vocab.size(); ++cls) {
    EvalReport::ClassAccuracy acc;
    acc.cls = static_cast<int>(cls);
    acc.gloss = vocab.glosses[cls];
    acc.count = count[cls];
    acc.top1 = count[cls] ? 100.0 * static_cast<double>(hits[cls]) /
                                static_cast<double>(count[cls])
                          : 0.0;
    report.per_class.push_back(std::move(acc));
  }
  return report;
}

void write_eval_report(const fs::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write eval report: " + path.string());
  out << "micro_top1\t" << format_double(report.micro_top1) << '\n';
  out << "micro_top5\t" << format_double(report.micro_top5) << '\n';
  out << "macro_top1\t" << format_double(report.macro_top1) << '\n';
  out << "macro_top5\t" << format_double(report.macro_top5) << '\n';
  for (const auto& [threshold, value] : report.localization_map) {
    out << "map@" << format_double(threshold) << '\t' << format_double(value) << '\n';
  }
  for (const auto& acc : report.per_class) {
    out << "class\t" << acc.cls << '\t' << acc.gloss << '\t' << acc.count << '\t'
        << format_double(acc.top1) << '\n';
  }
}

std::string format_eval_table(const EvalReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-12s %8s %8s\n", "", "top-1", "top-5");
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %8.2f %8.2f\n", "micro", report.micro_top1,
                report.micro_top5);
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %8.2f %8.2f\n", "macro", report.macro_top1,
                report.macro_top5);
  out << line;
  if (!report.localization_map.empty()) {
    out << "mAP:";
    for (const auto& [threshold, value] : report.localization_map) {
      std::snprintf(line, sizeof(line), "  @%.1f %.2f", threshold, 100.0 * value);
      out << line;
    }
    out << '\n';
  }
  return out.str();
}

void write_detections_tsv(const fs::path& path,
                          const std::vector<LocalizedSpan>& detections) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write detections: " + path.string());
  for (const LocalizedSpan& det : detections) {
    out << det.span.cls << '\t' << det.stream_id << '\t' << det.span.start << '\t'
        << det.span.end << '\t' << format_double(det.span.score) << '\n';
  }
}

}  // namespace signxfer

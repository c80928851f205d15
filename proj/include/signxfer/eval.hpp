#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "signxfer/corpus.hpp"
#include "signxfer/matrix.hpp"
#include "signxfer/model.hpp"

namespace signxfer {

// Scored half-open frame interval of one class.
struct Span {
  int cls = 0;
  int start = 0;
  int end = 0;
  double score = 1.0;
};

// A detection or annotation tied to its stream.
struct LocalizedSpan {
  std::string stream_id;
  Span span;
};

// Temporal intersection over union on frame counts.
double tiou(const Span& a, const Span& b);

enum class AccuracyMode { kMicro, kMacro };

// Top-k accuracy in percent. Micro averages over instances, macro over
// classes (which must all have at least one instance). A hit means the true
// label is among the k largest logits, ties resolved to the lower class
// index.
double topk_accuracy(const Matrix& logits, const std::vector<int>& labels,
                     std::size_t k, AccuracyMode mode,
                     const GlossVocabulary* vocab = nullptr);

struct LocalizeConfig {
  int window_min = 9;
  int window_max = 16;
  int stride = 1;
  double probability_gate = 0.2;  // keep strictly greater scores
  bool nms = true;
  double nms_tiou = 0.5;
};

// Sliding-window localization. `scorer` maps a raw window to 1 x K class
// probabilities; every (window, class) above the gate becomes a detection,
// then per-class NMS keeps the highest-scored span among overlaps. Output is
// sorted by descending score.
std::vector<Span> localize(const NewsStream& stream,
                           const std::function<Matrix(const Matrix&)>& scorer,
                           const LocalizeConfig& cfg);

// Mean average precision per tIoU threshold. Detections match unmatched
// ground truth of the same class and stream greedily in score order; AP is
// the all-point interpolated area under precision-recall; the mean runs over
// classes with at least one ground-truth span.
std::map<double, double> map_at_tiou(const std::vector<LocalizedSpan>& detections,
                                     const std::vector<LocalizedSpan>& ground_truth,
                                     const std::vector<double>& thresholds);

struct SignSignature {
  std::size_t feature_index = 0;  // argmax of the attention row
  int raw_start = 0;              // covered raw-frame range
  int raw_end = 0;
};

SignSignature sign_signature(const ForwardTrace& trace, std::size_t downsample);

struct AgreementResult {
  std::vector<std::pair<Span, Span>> kept;
  std::optional<double> mean_tiou;  // pre-filter mean; absent for empty input
};

// Keeps annotation pairs with tIoU >= min_tiou.
AgreementResult agreement_filter(const std::vector<std::pair<Span, Span>>& pairs,
                                 double min_tiou = 0.5);

struct EvalReport {
  double micro_top1 = 0.0;
  double micro_top5 = 0.0;
  double macro_top1 = 0.0;
  double macro_top5 = 0.0;
  struct ClassAccuracy {
    int cls = 0;
    std::string gloss;
    std::size_t count = 0;
    double top1 = 0.0;
  };
  std::vector<ClassAccuracy> per_class;
  std::map<double, double> localization_map;  // filled by localization runs
};

EvalReport evaluate_recognition(const Matrix& logits, const std::vector<int>& labels,
                                const GlossVocabulary& vocab);

void write_eval_report(const std::filesystem::path& path, const EvalReport& report);
std::string format_eval_table(const EvalReport& report);

// TSV rows: class, stream, start, end, score.
void write_detections_tsv(const std::filesystem::path& path,
                          const std::vector<LocalizedSpan>& detections);

}  // namespace signxfer

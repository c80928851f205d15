#include "signxfer/training.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "signxfer/adam.hpp"
#include "signxfer/errors.hpp"

namespace signxfer {

namespace fs = std::filesystem;

std::string to_string(TrainStage stage) {
  switch (stage) {
    case TrainStage::kBase: return "base";
    case TrainStage::kJoint: return "joint";
    case TrainStage::kFull: return "full";
  }
  return "base";
}

Matrix temporal_augment(const Matrix& frames, std::size_t target_length, Rng& rng) {
  const std::size_t t_raw = frames.rows();
  Matrix out(target_length, frames.cols());
  if (t_raw >= target_length) {
    const long start = rng.int_range(0, static_cast<long>(t_raw - target_length));
    for (std::size_t r = 0; r < target_length; ++r)
      for (std::size_t c = 0; c < frames.cols(); ++c)
        out.at(r, c) = frames.at(static_cast<std::size_t>(start) + r, c);
  } else {
    for (std::size_t r = 0; r < target_length; ++r)
      for (std::size_t c = 0; c < frames.cols(); ++c)
        out.at(r, c) = frames.at(r % t_raw, c);
  }
  return out;
}

namespace {

struct LabeledClip {
  const Matrix* frames;
  int label;
};

Matrix one_hot(int label, std::size_t classes) {
  Matrix y(1, classes);
  y.at(0, static_cast<std::size_t>(label)) = 1.0;
  return y;
}

int argmax_row(const Matrix& row) {
  int best = 0;
  for (std::size_t c = 1; c < row.cols(); ++c) {
    if (row.at(0, c) > row.at(0, static_cast<std::size_t>(best))) best = static_cast<int>(c);
  }
  return best;
}

std::string describe(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "stage=" << to_string(cfg.stage) << " epochs=" << cfg.epochs
      << " batch=" << cfg.batch_size << " lr=" << cfg.learning_rate
      << " wd=" << cfg.weight_decay << " target_length=" << cfg.target_length
      << " seed=" << cfg.seed;
  if (cfg.stage == TrainStage::kFull) {
    out << " init_from_base=" << (cfg.init_from_base ? 1 : 0)
        << " freeze_encoder=" << (cfg.freeze_encoder ? 1 : 0);
  }
  return out.str();
}

void require_class_coverage(const std::vector<LabeledClip>& samples,
                            const GlossVocabulary& vocab) {
  std::vector<bool> seen(vocab.size(), false);
  for (const LabeledClip& s : samples) seen[static_cast<std::size_t>(s.label)] = true;
  for (std::size_t cls = 0; cls < seen.size(); ++cls) {
    if (!seen[cls]) {
      throw DataError("training set has no samples for class '" + vocab.glosses[cls] +
                      "' (" + std::to_string(cls) + ")");
    }
  }
}

struct ClassifierBinding {
  BoundEncoder encoder;
  BoundHead head;
};

// Gradient collection follows the ParamRef order handed to Adam.
void collect_grads(const ClassifierBinding& bound, const std::vector<ParamRef>& refs,
                   std::vector<Matrix>& grads) {
  (void)refs;
  grads.push_back(bound.encoder.w.grad());
  grads.push_back(bound.encoder.b.grad());
  grads.push_back(bound.head.w.grad());
  grads.push_back(bound.head.b.grad());
}

void collect_grads(const BoundFullModel& bound, const std::vector<ParamRef>& refs,
                   std::vector<Matrix>& grads) {
  const std::map<std::string, ad::Value> by_name = {
      {"encoder.w", bound.encoder.w},
      {"encoder.b", bound.encoder.b},
      {"attn.w_x", bound.attention.to_common_clip},
      {"attn.w_m", bound.attention.to_common_memory},
      {"attn.w_delta", bound.attention.perturbation},
      {"attn.w_u", bound.attention.to_input},
      {"attn.w_p", bound.attention.query_descriptor},
      {"attn.w_q", bound.attention.query_clip},
      {"attn.w_v", bound.attention.value_down},
      {"attn.w_o", bound.attention.value_up},
      {"head.w", bound.head.w},
      {"head.b", bound.head.b},
  };
  for (const ParamRef& ref : refs) grads.push_back(by_name.at(ref.name).grad());
}

// Shared optimization loop; gradient accumulation order is fixed by the
// shuffled sample order, so runs are reproducible from the seed alone.
template <typename BindFn, typename LogitsFn, typename ValLogitsFn>
void optimize(std::size_t classes, const std::vector<LabeledClip>& train,
              const std::vector<LabeledClip>& val, const TrainConfig& cfg,
              const std::vector<ParamRef>& updatable, BindFn bind, LogitsFn build_logits,
              ValLogitsFn val_logits, TrainReport* report) {
  Rng order_rng = Rng(cfg.seed).substream("order");
  Rng augment_rng = Rng(cfg.seed).substream("augment");

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  adam_cfg.weight_decay = cfg.weight_decay;
  AdamState adam(adam_cfg);

  std::vector<Matrix*> param_ptrs;
  for (const ParamRef& p : updatable) param_ptrs.push_back(p.matrix);

  std::vector<std::size_t> indices(train.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  if (report) {
    report->stage = cfg.stage;
    report->sample_count = train.size();
    report->seed = cfg.seed;
    report->config_echo = describe(cfg);
    report->has_validation = !val.empty();
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(indices);
    double loss_total = 0.0;
    for (std::size_t batch_begin = 0; batch_begin < indices.size();
         batch_begin += cfg.batch_size) {
      const std::size_t batch_end =
          std::min(indices.size(), batch_begin + cfg.batch_size);
      ad::Graph graph;
      auto bound = bind(graph);
      ad::Value batch_loss;
      for (std::size_t i = batch_begin; i < batch_end; ++i) {
        const LabeledClip& sample = train[indices[i]];
        const Matrix clip = temporal_augment(*sample.frames, cfg.target_length, augment_rng);
        ad::Value logits = build_logits(graph, bound, clip);
        ad::Value loss = graph.sigmoid_bce(logits, one_hot(sample.label, classes));
        batch_loss = batch_loss.valid() ? graph.add(batch_loss, loss) : loss;
      }
      const std::size_t batch_n = batch_end - batch_begin;
      batch_loss = graph.scale(batch_loss, 1.0 / static_cast<double>(batch_n));
      const double loss_value = batch_loss.value().at(0, 0);
      if (!std::isfinite(loss_value)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      loss_total += loss_value * static_cast<double>(batch_n);

      graph.backward(batch_loss);
      std::vector<Matrix> grads;
      grads.reserve(updatable.size());
      collect_grads(bound, updatable, grads);
      std::vector<const Matrix*> grad_ptrs;
      for (const Matrix& gm : grads) grad_ptrs.push_back(&gm);
      adam_step(param_ptrs, grad_ptrs, adam);
    }

    if (report) {
      report->epoch_loss.push_back(loss_total / static_cast<double>(train.size()));
      if (!val.empty()) {
        std::size_t hits = 0;
        for (const LabeledClip& sample : val) {
          if (argmax_row(val_logits(*sample.frames)) == sample.label) ++hits;
        }
        report->epoch_val_micro_top1.push_back(100.0 * static_cast<double>(hits) /
                                               static_cast<double>(val.size()));
      }
    }
  }
}

SignClassifier train_classifier(const std::vector<LabeledClip>& train,
                                const std::vector<LabeledClip>& val,
                                const GlossVocabulary& vocab, const ModelDims& dims,
                                const TrainConfig& cfg, const char* init_salt,
                                TrainReport* report) {
  if (train.empty()) throw DataError("training set is empty");
  require_class_coverage(train, vocab);

  Rng init_rng = Rng(cfg.seed).substream(init_salt);
  SignClassifier model = SignClassifier::init(dims, init_rng);

  optimize(
      vocab.size(), train, val, cfg, model.params(),
      [&model](ad::Graph& g) {
        return ClassifierBinding{bind_encoder(g, model.encoder), bind_head(g, model.head)};
      },
      [](ad::Graph& g, const ClassifierBinding& bound, const Matrix& clip) {
        return classifier_logits_graph(g, bound.encoder, bound.head, clip);
      },
      [&model](const Matrix& frames) { return classifier_logits(model, frames); },
      report);
  return model;
}

std::vector<LabeledClip> as_clips(const std::vector<IsolatedSample>& samples) {
  std::vector<LabeledClip> clips;
  clips.reserve(samples.size());
  for (const IsolatedSample& s : samples) clips.push_back({&s.frames, s.label});
  return clips;
}

}  // namespace

SignClassifier train_base(const std::vector<IsolatedSample>& train,
                          const std::vector<IsolatedSample>& val,
                          const GlossVocabulary& vocab, const ModelDims& dims,
                          const TrainConfig& cfg, TrainReport* report,
                          const CandidateSet* extra_news) {
  std::vector<LabeledClip> clips = as_clips(train);
  if (extra_news) {
    for (const Candidate& c : extra_news->items) clips.push_back({&c.frames, c.cls});
  }
  return train_classifier(clips, as_clips(val), vocab, dims, cfg, "base-init", report);
}

SignClassifier train_joint(const std::vector<IsolatedSample>& train,
                           const CandidateSet& candidates,
                           const std::vector<IsolatedSample>& val,
                           const GlossVocabulary& vocab, const ModelDims& dims,
                           const TrainConfig& cfg, TrainReport* report) {
  if (candidates.empty()) {
    throw DataError("train_joint: candidate set is empty; joint training undefined");
  }
  std::vector<LabeledClip> clips = as_clips(train);
  for (const Candidate& c : candidates.items) clips.push_back({&c.frames, c.cls});
  return train_classifier(clips, as_clips(val), vocab, dims, cfg, "joint-init", report);
}

FullModel train_full(const std::vector<IsolatedSample>& train,
                     const PrototypeMemory& memory, const SignClassifier& base,
                     const std::vector<IsolatedSample>& val, const ModelDims& dims,
                     const TrainConfig& cfg, TrainReport* report) {
  if (train.empty()) throw DataError("training set is empty");
  if (memory.centroids.rows() != dims.classes) {
    throw ShapeError("train_full: memory has " +
                     std::to_string(memory.centroids.rows()) + " classes, expected " +
                     std::to_string(dims.classes));
  }

  Rng init_rng = Rng(cfg.seed).substream("full-init");
  FullModel model = FullModel::init(dims, init_rng);
  if (cfg.init_from_base) {
    model.encoder = base.encoder;
  }

  std::vector<ParamRef> updatable;
  for (const ParamRef& p : model.params()) {
    if (cfg.freeze_encoder && (p.name == "encoder.w" || p.name == "encoder.b")) continue;
    updatable.push_back(p);
  }

  const std::vector<LabeledClip> clips = as_clips(train);
  const std::vector<LabeledClip> val_clips = as_clips(val);
  optimize(
      dims.classes, clips, val_clips, cfg, updatable,
      [&model, &memory](ad::Graph& g) {
        return bind_full_model(g, model, memory.centroids);
      },
      [](ad::Graph& g, const BoundFullModel& bound, const Matrix& clip) {
        return full_logits_graph(g, bound, clip);
      },
      [&model, &memory](const Matrix& frames) {
        return forward_full(model, memory, frames).logits;
      },
      report);
  return model;
}

double interdomain_centroid_distance(const SignClassifier& model,
                                     const std::vector<IsolatedSample>& isolated,
                                     const CandidateSet& candidates) {
  std::map<int, std::vector<Matrix>> iso_features;
  for (const IsolatedSample& s : isolated) {
    iso_features[s.label].push_back(clip_embedding(s.frames, model.encoder));
  }
  std::map<int, std::vector<Matrix>> news_features;
  for (const Candidate& c : candidates.items) {
    news_features[c.cls].push_back(clip_embedding(c.frames, model.encoder));
  }

  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& [cls, news] : news_features) {
    auto it = iso_features.find(cls);
    if (it == iso_features.end()) continue;
    const Matrix iso_centroid = build_prototype(it->second);
    const Matrix news_centroid = build_prototype(news);
    total += std::sqrt(squared_distance(iso_centroid, news_centroid));
    ++counted;
  }
  if (counted == 0) {
    throw DataError("interdomain_centroid_distance: no class has both domains");
  }
  return total / static_cast<double>(counted);
}

void write_train_report(const fs::path& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write train report: " + path.string());
  out << "#stage\t" << to_string(report.stage) << '\n';
  out << "#seed\t" << report.seed << '\n';
  out << "#config\t" << report.config_echo << '\n';
  out << "#samples\t" << report.sample_count << '\n';
  if (!report.checkpoint_path.empty()) out << "#checkpoint\t" << report.checkpoint_path << '\n';
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    out << (e + 1) << '\t' << format_double(report.epoch_loss[e]) << '\t';
    if (report.has_validation && e < report.epoch_val_micro_top1.size()) {
      out << format_double(report.epoch_val_micro_top1[e]);
    } else {
      out << '-';
    }
    out << '\n';
  }
}

}  // namespace signxfer

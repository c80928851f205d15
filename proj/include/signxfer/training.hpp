#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "signxfer/backbone.hpp"
#include "signxfer/corpus.hpp"
#include "signxfer/extraction.hpp"
#include "signxfer/memory.hpp"
#include "signxfer/model.hpp"
#include "signxfer/rng.hpp"

namespace signxfer {

enum class TrainStage { kBase, kJoint, kFull };

std::string to_string(TrainStage stage);

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double weight_decay = 1e-7;
  std::size_t target_length = 64;  // temporal augmentation window
  std::uint64_t seed = 1;
  TrainStage stage = TrainStage::kBase;
  bool init_from_base = true;   // full stage: start encoder from the base model
  bool freeze_encoder = false;  // full stage: do not update encoder weights
};

struct TrainReport {
  TrainStage stage = TrainStage::kBase;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_val_micro_top1;  // parallel to epoch_loss when present
  bool has_validation = false;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  std::string config_echo;
  std::string checkpoint_path;
};

// 64-frame temporal crop: clips at least target_length long get a uniformly
// random start; shorter clips repeat cyclically until the target is reached.
Matrix temporal_augment(const Matrix& frames, std::size_t target_length, Rng& rng);

// Stage 1: classifier on isolated signs. `extra_news`, when given, adds the
// extracted windows directly to the training set (the news-words-as-extra-
// samples baseline).
SignClassifier train_base(const std::vector<IsolatedSample>& train,
                          const std::vector<IsolatedSample>& val,
                          const GlossVocabulary& vocab, const ModelDims& dims,
                          const TrainConfig& cfg, TrainReport* report = nullptr,
                          const CandidateSet* extra_news = nullptr);

// Stage 2: fresh classifier jointly trained on isolated signs and extracted
// news windows, aligning the two domains in feature space.
SignClassifier train_joint(const std::vector<IsolatedSample>& train,
                           const CandidateSet& candidates,
                           const std::vector<IsolatedSample>& val,
                           const GlossVocabulary& vocab, const ModelDims& dims,
                           const TrainConfig& cfg, TrainReport* report = nullptr);

// Stage 3: memory-augmented model end to end; the memory stays frozen.
FullModel train_full(const std::vector<IsolatedSample>& train,
                     const PrototypeMemory& memory, const SignClassifier& base,
                     const std::vector<IsolatedSample>& val, const ModelDims& dims,
                     const TrainConfig& cfg, TrainReport* report = nullptr);

// Mean L2 distance between isolated and news centroids of the same class in
// the model's pooled feature space; classes lacking either side are skipped.
double interdomain_centroid_distance(const SignClassifier& model,
                                     const std::vector<IsolatedSample>& isolated,
                                     const CandidateSet& candidates);

void write_train_report(const std::filesystem::path& path, const TrainReport& report);

}  // namespace signxfer

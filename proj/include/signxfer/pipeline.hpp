#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "signxfer/backbone.hpp"
#include "signxfer/corpus.hpp"
#include "signxfer/eval.hpp"
#include "signxfer/extraction.hpp"
#include "signxfer/memory.hpp"
#include "signxfer/model.hpp"
#include "signxfer/training.hpp"

namespace signxfer {

// Everything a run needs, resolved from defaults, a JSON config file, and
// dotted-path overrides (override > file > default). Unknown keys anywhere
// are rejected.
struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string dataset_dir = "data";
  std::string output_dir = "out";

  std::size_t feature_dim = 32;     // encoder width d
  std::size_t descriptor_dim = 16;  // common space d'
  std::size_t attention_dim = 8;    // attention bottleneck d''
  std::size_t downsample = 4;

  SynthConfig synth;
  ExtractionConfig extraction;
  TrainConfig train_base;
  bool base_include_news = false;   // add extracted windows to the base training set
  TrainConfig train_joint;
  TrainConfig train_full;
  MemorySource memory_source = MemorySource::kNewsAligned;
  bool memory_fallback_to_isolated = false;

  std::vector<double> tiou_thresholds = {0.1, 0.3, 0.5, 0.7};
  LocalizeConfig localize;

  std::string config_hash;  // hex digest of the effective config JSON
};

// Loads and validates a config. `path` may be empty (defaults only).
PipelineConfig load_pipeline_config(const std::string& path,
                                    const std::vector<std::string>& overrides);
std::string default_config_text();

// Canonical artifact locations under the config's directories.
struct ArtifactPaths {
  explicit ArtifactPaths(const PipelineConfig& cfg);

  std::filesystem::path dataset;
  std::filesystem::path output;
  std::filesystem::path base_checkpoint;
  std::filesystem::path base_news_checkpoint;
  std::filesystem::path aligned_checkpoint;
  std::filesystem::path full_checkpoint;
  std::filesystem::path candidates;
  std::filesystem::path windows_dir;
  std::filesystem::path memory;
  std::filesystem::path logs_dir;
  std::filesystem::path manifests_dir;
  std::filesystem::path attention_dir;

  std::filesystem::path eval_report(const std::string& model) const;
  std::filesystem::path detections(const std::string& model) const;
  std::filesystem::path localization_report(const std::string& model) const;
  std::filesystem::path embeddings(const std::string& model) const;
  std::filesystem::path train_log(const std::string& stage) const;
  std::filesystem::path manifest(const std::string& command) const;
};

// Stage drivers; each checks its inputs, writes its artifacts, and records a
// manifest with the config hash, seed, and input/output file hashes.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  const PipelineConfig& config() const { return cfg_; }
  const ArtifactPaths& paths() const { return paths_; }

  void gen();
  void train_base_stage(bool with_news);
  void extract_stage();
  void align_stage();
  void build_memory_stage();
  void train_full_stage();
  EvalReport eval_stage(const std::string& model);      // full | base | base-news
  EvalReport localize_stage(const std::string& model);  // full | base
  void dump_attention_stage(const std::string& split, std::size_t limit);
  void dump_embeddings_stage(const std::string& model);  // base | aligned
  void run_all();

  // Loaded views for tooling and experiments.
  const Corpus& corpus();
  CandidateSet load_candidates();

 private:
  std::vector<IsolatedSample> split_samples(Split split);
  ModelDims dims();
  std::uint64_t stage_seed(const std::string& stage) const;
  void write_manifest(const std::string& command,
                      const std::vector<std::filesystem::path>& inputs,
                      const std::vector<std::filesystem::path>& outputs);
  void require_artifact(const std::filesystem::path& path, const std::string& producer);

  PipelineConfig cfg_;
  ArtifactPaths paths_;
  std::optional<Corpus> corpus_;
};

std::string hash_file_hex(const std::filesystem::path& path);

}  // namespace signxfer

#include "signxfer/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "signxfer/errors.hpp"
#include "signxfer/rng.hpp"

namespace signxfer {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json default_config_json() {
  json j;
  j["seed"] = 1;
  j["dataset_dir"] = "data";
  j["output_dir"] = "out";
  j["model"] = {
      {"feature_dim", 32}, {"descriptor_dim", 16}, {"attention_dim", 8}, {"downsample", 4}};
  j["synth"] = {{"classes", 20},
                {"train_per_class", 15},
                {"val_per_class", 3},
                {"test_per_class", 5},
                {"streams", 40},
                {"input_dim", 16},
                {"iso_mean_length", 64},
                {"news_length_min", 9},
                {"news_length_max", 16},
                {"gesture_length_min", 10},
                {"gesture_length_max", 16},
                {"stream_length_min", 280},
                {"stream_length_max", 320},
                {"signs_per_stream_min", 3},
                {"signs_per_stream_max", 6},
                {"min_instances_per_class", 2},
                {"iso_noise", 0.25},
                {"news_noise", 0.05},
                {"background_amplitude", 0.4},
                {"template_common_amplitude", 0.6},
                {"burst_amplitude", 1.2},
                {"domain_shift_strength", 0.35},
                {"distractor_token_rate", 0.1},
                {"distractor_tokens_per_stream", 12}};
  j["extraction"] = {
      {"window_min", 9}, {"window_max", 16}, {"stride", 1}, {"epsilon", 0.3}};
  const json train_common = {{"epochs", 40},
                             {"batch_size", 8},
                             {"learning_rate", 1e-3},
                             {"weight_decay", 1e-7},
                             {"target_length", 64}};
  j["train_base"] = train_common;
  j["train_base"]["include_news_windows"] = false;
  j["train_joint"] = train_common;
  j["train_full"] = train_common;
  j["train_full"]["init_from_base"] = true;
  j["train_full"]["freeze_encoder"] = false;
  j["memory"] = {{"source", "news-aligned"}, {"fallback_to_isolated", false}};
  j["eval"] = {{"tiou_thresholds", {0.1, 0.3, 0.5, 0.7}},
               {"probability_gate", 0.2},
               {"nms", true},
               {"nms_tiou", 0.5}};
  return j;
}

void validate_keys(const json& provided, const json& schema, const std::string& prefix) {
  if (!provided.is_object()) {
    throw ConfigError("config: expected object at '" + (prefix.empty() ? "." : prefix) + "'");
  }
  for (const auto& [key, value] : provided.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) {
      throw ConfigError("config: unknown key '" + path + "'");
    }
    const json& expected = schema.at(key);
    if (expected.is_object()) {
      validate_keys(value, expected, path);
    } else if (expected.is_number() && !value.is_number()) {
      throw ConfigError("config: '" + path + "' must be a number");
    } else if (expected.is_boolean() && !value.is_boolean()) {
      throw ConfigError("config: '" + path + "' must be a boolean");
    } else if (expected.is_string() && !value.is_string()) {
      throw ConfigError("config: '" + path + "' must be a string");
    } else if (expected.is_array() && !value.is_array()) {
      throw ConfigError("config: '" + path + "' must be an array");
    }
  }
}

void apply_override(json& merged, const json& schema, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + spec + "' must look like key.path=value");
  }
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  std::vector<std::string> keys;
  std::size_t begin = 0;
  while (begin <= path.size()) {
    std::size_t end = path.find('.', begin);
    if (end == std::string::npos) end = path.size();
    keys.push_back(path.substr(begin, end - begin));
    begin = end + 1;
  }

  const json* schema_node = &schema;
  json* node = &merged;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!schema_node->contains(keys[i])) {
      throw ConfigError("config: unknown key '" + path + "'");
    }
    schema_node = &schema_node->at(keys[i]);
    if (i + 1 == keys.size()) {
      json value;
      try {
        value = json::parse(raw);
      } catch (const json::exception&) {
        value = raw;  // bare strings need no quotes
      }
      json probe;
      probe[keys[i]] = value;
      json single_schema;
      single_schema[keys[i]] = *schema_node;
      validate_keys(probe, single_schema,
                    keys.size() > 1 ? path.substr(0, path.rfind('.')) : "");
      (*node)[keys[i]] = value;
    } else {
      node = &(*node)[keys[i]];
    }
  }
}

TrainConfig parse_train(const json& j, TrainStage stage) {
  TrainConfig cfg;
  cfg.stage = stage;
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.target_length = j.at("target_length").get<std::size_t>();
  if (stage == TrainStage::kFull) {
    cfg.init_from_base = j.at("init_from_base").get<bool>();
    cfg.freeze_encoder = j.at("freeze_encoder").get<bool>();
  }
  if (cfg.epochs == 0 || cfg.batch_size == 0 || cfg.target_length == 0) {
    throw ConfigError("config: training counts must be positive");
  }
  return cfg;
}

PipelineConfig parse_config(const json& j) {
  PipelineConfig cfg;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.dataset_dir = j.at("dataset_dir").get<std::string>();
  cfg.output_dir = j.at("output_dir").get<std::string>();

  const json& model = j.at("model");
  cfg.feature_dim = model.at("feature_dim").get<std::size_t>();
  cfg.descriptor_dim = model.at("descriptor_dim").get<std::size_t>();
  cfg.attention_dim = model.at("attention_dim").get<std::size_t>();
  cfg.downsample = model.at("downsample").get<std::size_t>();
  if (cfg.attention_dim >= cfg.feature_dim) {
    throw ConfigError("config: model.attention_dim must be < model.feature_dim");
  }
  if (cfg.downsample == 0) throw ConfigError("config: model.downsample must be >= 1");

  const json& synth = j.at("synth");
  cfg.synth.classes = synth.at("classes").get<std::size_t>();
  cfg.synth.train_per_class = synth.at("train_per_class").get<std::size_t>();
  cfg.synth.val_per_class = synth.at("val_per_class").get<std::size_t>();
  cfg.synth.test_per_class = synth.at("test_per_class").get<std::size_t>();
  cfg.synth.streams = synth.at("streams").get<std::size_t>();
  cfg.synth.input_dim = synth.at("input_dim").get<std::size_t>();
  cfg.synth.iso_mean_length = synth.at("iso_mean_length").get<std::size_t>();
  cfg.synth.news_length_min = synth.at("news_length_min").get<int>();
  cfg.synth.news_length_max = synth.at("news_length_max").get<int>();
  cfg.synth.gesture_length_min = synth.at("gesture_length_min").get<int>();
  cfg.synth.gesture_length_max = synth.at("gesture_length_max").get<int>();
  cfg.synth.stream_length_min = synth.at("stream_length_min").get<std::size_t>();
  cfg.synth.stream_length_max = synth.at("stream_length_max").get<std::size_t>();
  cfg.synth.signs_per_stream_min = synth.at("signs_per_stream_min").get<std::size_t>();
  cfg.synth.signs_per_stream_max = synth.at("signs_per_stream_max").get<std::size_t>();
  cfg.synth.min_instances_per_class = synth.at("min_instances_per_class").get<std::size_t>();
  cfg.synth.iso_noise = synth.at("iso_noise").get<double>();
  cfg.synth.news_noise = synth.at("news_noise").get<double>();
  cfg.synth.background_amplitude = synth.at("background_amplitude").get<double>();
  cfg.synth.template_common_amplitude =
      synth.at("template_common_amplitude").get<double>();
  cfg.synth.burst_amplitude = synth.at("burst_amplitude").get<double>();
  cfg.synth.domain_shift_strength = synth.at("domain_shift_strength").get<double>();
  cfg.synth.distractor_token_rate = synth.at("distractor_token_rate").get<double>();
  cfg.synth.distractor_tokens_per_stream =
      synth.at("distractor_tokens_per_stream").get<std::size_t>();
  cfg.synth.seed = cfg.seed;
  if (cfg.synth.iso_noise < 0 || cfg.synth.news_noise < 0) {
    throw ConfigError("config: noise levels must be >= 0");
  }

  const json& extraction = j.at("extraction");
  cfg.extraction.window_min = extraction.at("window_min").get<int>();
  cfg.extraction.window_max = extraction.at("window_max").get<int>();
  cfg.extraction.stride = extraction.at("stride").get<int>();
  cfg.extraction.epsilon = extraction.at("epsilon").get<double>();
  if (cfg.extraction.window_min < 1 || cfg.extraction.window_max < cfg.extraction.window_min) {
    throw ConfigError("config: extraction window sizes must satisfy 1 <= min <= max");
  }
  if (cfg.extraction.epsilon <= 0.0 || cfg.extraction.epsilon >= 1.0) {
    throw ConfigError("config: extraction.epsilon must lie in (0,1)");
  }
  if (cfg.extraction.stride < 1) throw ConfigError("config: extraction.stride must be >= 1");

  cfg.train_base = parse_train(j.at("train_base"), TrainStage::kBase);
  cfg.base_include_news = j.at("train_base").at("include_news_windows").get<bool>();
  cfg.train_joint = parse_train(j.at("train_joint"), TrainStage::kJoint);
  cfg.train_full = parse_train(j.at("train_full"), TrainStage::kFull);

  cfg.memory_source = memory_source_from_string(j.at("memory").at("source").get<std::string>());
  cfg.memory_fallback_to_isolated = j.at("memory").at("fallback_to_isolated").get<bool>();

  const json& eval = j.at("eval");
  cfg.tiou_thresholds = eval.at("tiou_thresholds").get<std::vector<double>>();
  cfg.localize.window_min = cfg.extraction.window_min;
  cfg.localize.window_max = cfg.extraction.window_max;
  cfg.localize.stride = cfg.extraction.stride;
  cfg.localize.probability_gate = eval.at("probability_gate").get<double>();
  cfg.localize.nms = eval.at("nms").get<bool>();
  cfg.localize.nms_tiou = eval.at("nms_tiou").get<double>();
  return cfg;
}

}  // namespace

std::string default_config_text() { return default_config_json().dump(2) + "\n"; }

PipelineConfig load_pipeline_config(const std::string& path,
                                    const std::vector<std::string>& overrides) {
  const json schema = default_config_json();
  json merged = schema;
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    json provided;
    try {
      provided = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path + ": " + e.what());
    }
    validate_keys(provided, schema, "");
    merged.merge_patch(provided);
  }
  for (const std::string& spec : overrides) {
    apply_override(merged, schema, spec);
  }
  PipelineConfig cfg = parse_config(merged);
  const std::string dump = merged.dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump)));
  cfg.config_hash = buf;
  return cfg;
}

ArtifactPaths::ArtifactPaths(const PipelineConfig& cfg)
    : dataset(cfg.dataset_dir),
      output(cfg.output_dir),
      base_checkpoint(output / "base.ckpt"),
      base_news_checkpoint(output / "base_news.ckpt"),
      aligned_checkpoint(output / "aligned.ckpt"),
      full_checkpoint(output / "full.ckpt"),
      candidates(output / "candidates.tsv"),
      windows_dir(output / "windows"),
      memory(output / "memory.txt"),
      logs_dir(output / "logs"),
      manifests_dir(output / "manifests"),
      attention_dir(output / "attention") {}

fs::path ArtifactPaths::eval_report(const std::string& model) const {
  return output / ("eval_" + model + ".tsv");
}
fs::path ArtifactPaths::detections(const std::string& model) const {
  return output / ("detections_" + model + ".tsv");
}
fs::path ArtifactPaths::localization_report(const std::string& model) const {
  return output / ("localization_" + model + ".tsv");
}
fs::path ArtifactPaths::embeddings(const std::string& model) const {
  return output / ("embeddings_" + model + ".tsv");
}
fs::path ArtifactPaths::train_log(const std::string& stage) const {
  return logs_dir / ("train_" + stage + ".tsv");
}
fs::path ArtifactPaths::manifest(const std::string& command) const {
  return manifests_dir / (command + ".json");
}

std::string hash_file_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace {

std::uint64_t hash_tree(const fs::path& path) {
  if (fs::is_regular_file(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    return fnv1a64(bytes.data(), bytes.size());
  }
  std::vector<fs::path> entries;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file()) entries.push_back(entry.path());
  }
  std::sort(entries.begin(), entries.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const fs::path& p : entries) {
    const std::string rel = fs::relative(p, path).generic_string();
    h = fnv1a64(rel.data(), rel.size(), h);
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    h = fnv1a64(bytes.data(), bytes.size(), h);
  }
  return h;
}

std::string hash_tree_hex(const fs::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash_tree(path)));
  return buf;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)), paths_(cfg_) {}

const Corpus& Pipeline::corpus() {
  if (!corpus_) {
    corpus_ = read_dataset(paths_.dataset);
  }
  return *corpus_;
}

std::vector<IsolatedSample> Pipeline::split_samples(Split split) {
  std::vector<IsolatedSample> out;
  for (const IsolatedSample& s : corpus().isolated) {
    if (s.split == split) out.push_back(s);
  }
  return out;
}

ModelDims Pipeline::dims() {
  ModelDims dims;
  const Corpus& data = corpus();
  dims.input_dim = data.isolated.empty() ? cfg_.synth.input_dim
                                         : data.isolated.front().frames.cols();
  dims.feature_dim = cfg_.feature_dim;
  dims.descriptor_dim = cfg_.descriptor_dim;
  dims.attention_dim = cfg_.attention_dim;
  dims.classes = data.vocab.size();
  dims.downsample = cfg_.downsample;
  return dims;
}

std::uint64_t Pipeline::stage_seed(const std::string& stage) const {
  return fnv1a64(stage.data(), stage.size(), cfg_.seed ^ 0x9e3779b97f4a7c15ull);
}

void Pipeline::require_artifact(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw DataError("missing artifact " + path.string() + " (run '" + producer +
                    "' first)");
  }
}

void Pipeline::write_manifest(const std::string& command,
                              const std::vector<fs::path>& inputs,
                              const std::vector<fs::path>& outputs) {
  fs::create_directories(paths_.manifests_dir);
  json manifest;
  manifest["command"] = command;
  manifest["seed"] = cfg_.seed;
  manifest["config_hash"] = cfg_.config_hash;
  manifest["inputs"] = json::object();
  for (const fs::path& p : inputs) {
    manifest["inputs"][p.generic_string()] = hash_tree_hex(p);
  }
  manifest["outputs"] = json::object();
  for (const fs::path& p : outputs) {
    manifest["outputs"][p.generic_string()] = hash_tree_hex(p);
  }
  std::ofstream out(paths_.manifest(command), std::ios::binary);
  out << manifest.dump(2) << '\n';
}

void Pipeline::gen() {
  Corpus generated = generate_corpus(cfg_.synth);
  write_dataset(paths_.dataset, generated);
  corpus_ = std::move(generated);
  write_manifest("gen", {}, {paths_.dataset});
}

void Pipeline::train_base_stage(bool with_news) {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  fs::create_directories(paths_.logs_dir);
  fs::create_directories(paths_.output);

  TrainConfig train_cfg = cfg_.train_base;
  const std::string variant = with_news ? "base_news" : "base";
  train_cfg.seed = stage_seed("train-" + variant);

  CandidateSet candidates;
  std::vector<fs::path> inputs = {paths_.dataset};
  if (with_news) {
    require_artifact(paths_.candidates, "extract");
    candidates = load_candidates();
    inputs.push_back(paths_.candidates);
  }

  TrainReport report;
  SignClassifier model =
      train_base(split_samples(Split::kTrain), split_samples(Split::kVal),
                 corpus().vocab, dims(), train_cfg, &report,
                 with_news ? &candidates : nullptr);

  const fs::path ckpt =
      with_news ? paths_.base_news_checkpoint : paths_.base_checkpoint;
  save_classifier(ckpt, model);
  report.checkpoint_path = ckpt.generic_string();
  write_train_report(paths_.train_log(variant), report);
  write_manifest("train-" + variant, inputs, {ckpt, paths_.train_log(variant)});
}

void Pipeline::extract_stage() {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  require_artifact(paths_.base_checkpoint, "train-base");
  const SignClassifier model = load_classifier(paths_.base_checkpoint);

  const CandidateSet candidates =
      extract_candidates(corpus().streams, corpus().vocab, model, cfg_.extraction);
  write_candidates_tsv(paths_.candidates, candidates);

  // extracted windows as a dataset of labeled clips
  Corpus windows;
  windows.vocab = corpus().vocab;
  for (const Candidate& c : candidates.items) {
    IsolatedSample sample;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "win-c%03d-%s", c.cls, c.stream_id.c_str());
    sample.id = buf;
    sample.frames = c.frames;
    sample.label = c.cls;
    sample.split = Split::kTrain;
    windows.isolated.push_back(std::move(sample));
  }
  fs::remove_all(paths_.windows_dir);
  write_dataset(paths_.windows_dir, windows);
  write_manifest("extract", {paths_.dataset, paths_.base_checkpoint},
                 {paths_.candidates, paths_.windows_dir});
}

CandidateSet Pipeline::load_candidates() {
  require_artifact(paths_.candidates, "extract");
  return read_candidates_tsv(paths_.candidates, corpus().streams);
}

void Pipeline::align_stage() {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  const CandidateSet candidates = load_candidates();

  TrainConfig train_cfg = cfg_.train_joint;
  train_cfg.seed = stage_seed("train-joint");
  TrainReport report;
  SignClassifier model =
      train_joint(split_samples(Split::kTrain), candidates, split_samples(Split::kVal),
                  corpus().vocab, dims(), train_cfg, &report);
  save_classifier(paths_.aligned_checkpoint, model);
  report.checkpoint_path = paths_.aligned_checkpoint.generic_string();
  write_train_report(paths_.train_log("joint"), report);

  // domain-gap summary on stderr: the joint model should sit below the base
  if (fs::exists(paths_.base_checkpoint)) {
    const SignClassifier base = load_classifier(paths_.base_checkpoint);
    const auto train = split_samples(Split::kTrain);
    std::cerr << "inter-domain centroid distance: base="
              << interdomain_centroid_distance(base, train, candidates)
              << " aligned=" << interdomain_centroid_distance(model, train, candidates)
              << '\n';
  }
  write_manifest("align", {paths_.dataset, paths_.candidates},
                 {paths_.aligned_checkpoint, paths_.train_log("joint")});
}

void Pipeline::build_memory_stage() {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  SignClassifier base, aligned;
  std::vector<fs::path> inputs = {paths_.dataset, paths_.candidates};
  if (cfg_.memory_source == MemorySource::kIsoBase) {
    require_artifact(paths_.base_checkpoint, "train-base");
    base = load_classifier(paths_.base_checkpoint);
    inputs.push_back(paths_.base_checkpoint);
  } else {
    require_artifact(paths_.aligned_checkpoint, "align");
    aligned = load_classifier(paths_.aligned_checkpoint);
    inputs.push_back(paths_.aligned_checkpoint);
  }
  const CandidateSet candidates = load_candidates();

  std::vector<int> fallback;
  const PrototypeMemory memory = build_memory(
      cfg_.memory_source, corpus().vocab, base, aligned, split_samples(Split::kTrain),
      candidates, cfg_.memory_fallback_to_isolated, &fallback);
  for (int cls : fallback) {
    std::cerr << "memory: class " << corpus().vocab.glosses[static_cast<std::size_t>(cls)]
              << " (" << cls << ") fell back to isolated features\n";
  }
  save_memory(paths_.memory, memory);
  write_manifest("build-memory", inputs, {paths_.memory});
}

void Pipeline::train_full_stage() {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  require_artifact(paths_.memory, "build-memory");
  require_artifact(paths_.base_checkpoint, "train-base");
  const PrototypeMemory memory = load_memory(paths_.memory);
  const SignClassifier base = load_classifier(paths_.base_checkpoint);

  TrainConfig train_cfg = cfg_.train_full;
  train_cfg.seed = stage_seed("train-full");
  TrainReport report;
  FullModel model = train_full(split_samples(Split::kTrain), memory, base,
                               split_samples(Split::kVal), dims(), train_cfg, &report);
  save_full_model(paths_.full_checkpoint, model);
  report.checkpoint_path = paths_.full_checkpoint.generic_string();
  write_train_report(paths_.train_log("full"), report);
  write_manifest("train-full",
                 {paths_.dataset, paths_.memory, paths_.base_checkpoint},
                 {paths_.full_checkpoint, paths_.train_log("full")});
}

EvalReport Pipeline::eval_stage(const std::string& model_name) {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  std::function<Matrix(const Matrix&)> logits_fn;
  std::vector<fs::path> inputs = {paths_.dataset};
  if (model_name == "full") {
    require_artifact(paths_.full_checkpoint, "train-full");
    require_artifact(paths_.memory, "build-memory");
    auto model = std::make_shared<FullModel>(load_full_model(paths_.full_checkpoint));
    auto memory = std::make_shared<PrototypeMemory>(load_memory(paths_.memory));
    logits_fn = [model, memory](const Matrix& frames) {
      return forward_full(*model, *memory, frames).logits;
    };
    inputs.push_back(paths_.full_checkpoint);
    inputs.push_back(paths_.memory);
  } else if (model_name == "base" || model_name == "base-news") {
    const fs::path ckpt = model_name == "base" ? paths_.base_checkpoint
                                               : paths_.base_news_checkpoint;
    require_artifact(ckpt, model_name == "base" ? "train-base" : "train-base --with-news");
    auto model = std::make_shared<SignClassifier>(load_classifier(ckpt));
    logits_fn = [model](const Matrix& frames) {
      return classifier_logits(*model, frames);
    };
    inputs.push_back(ckpt);
  } else {
    throw ConfigError("eval: unknown model '" + model_name + "'");
  }

  const std::vector<IsolatedSample> test = split_samples(Split::kTest);
  if (test.empty()) throw DataError("eval: dataset has no test split");
  Matrix logits(test.size(), corpus().vocab.size());
  std::vector<int> labels(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Matrix row = logits_fn(test[i].frames);
    for (std::size_t c = 0; c < row.cols(); ++c) logits.at(i, c) = row.at(0, c);
    labels[i] = test[i].label;
  }
  EvalReport report = evaluate_recognition(logits, labels, corpus().vocab);
  fs::create_directories(paths_.output);
  write_eval_report(paths_.eval_report(model_name), report);
  std::cout << "model: " << model_name << '\n' << format_eval_table(report);
  write_manifest("eval-" + model_name, inputs, {paths_.eval_report(model_name)});
  return report;
}

EvalReport Pipeline::localize_stage(const std::string& model_name) {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  std::function<Matrix(const Matrix&)> scorer;
  std::vector<fs::path> inputs = {paths_.dataset};
  if (model_name == "full") {
    require_artifact(paths_.full_checkpoint, "train-full");
    require_artifact(paths_.memory, "build-memory");
    auto model = std::make_shared<FullModel>(load_full_model(paths_.full_checkpoint));
    auto memory = std::make_shared<PrototypeMemory>(load_memory(paths_.memory));
    scorer = [model, memory](const Matrix& frames) {
      return full_probabilities(*model, *memory, frames);
    };
    inputs.push_back(paths_.full_checkpoint);
    inputs.push_back(paths_.memory);
  } else if (model_name == "base") {
    require_artifact(paths_.base_checkpoint, "train-base");
    auto model = std::make_shared<SignClassifier>(load_classifier(paths_.base_checkpoint));
    scorer = [model](const Matrix& frames) {
      return classifier_probabilities(*model, frames);
    };
    inputs.push_back(paths_.base_checkpoint);
  } else {
    throw ConfigError("localize: unknown model '" + model_name + "'");
  }

  std::vector<LocalizedSpan> detections;
  std::vector<LocalizedSpan> ground_truth;
  for (const NewsStream& stream : corpus().streams) {
    for (const Span& span : localize(stream, scorer, cfg_.localize)) {
      detections.push_back({stream.id, span});
    }
    for (const SignSpan& span : stream.true_spans) {
      ground_truth.push_back({stream.id, {span.cls, span.start, span.end, 1.0}});
    }
  }
  std::sort(detections.begin(), detections.end(),
            [](const LocalizedSpan& a, const LocalizedSpan& b) {
              if (a.span.score != b.span.score) return a.span.score > b.span.score;
              if (a.span.cls != b.span.cls) return a.span.cls < b.span.cls;
              if (a.stream_id != b.stream_id) return a.stream_id < b.stream_id;
              return a.span.start < b.span.start;
            });

  fs::create_directories(paths_.output);
  write_detections_tsv(paths_.detections(model_name), detections);

  EvalReport report;
  std::vector<fs::path> outputs = {paths_.detections(model_name)};
  if (!ground_truth.empty()) {
    report.localization_map = map_at_tiou(detections, ground_truth, cfg_.tiou_thresholds);
    std::ofstream out(paths_.localization_report(model_name), std::ios::binary);
    for (const auto& [threshold, value] : report.localization_map) {
      out << format_double(threshold) << '\t' << format_double(value) << '\n';
    }
    outputs.push_back(paths_.localization_report(model_name));
    std::cout << "model: " << model_name << '\n' << format_eval_table(report);
  }
  write_manifest("localize-" + model_name, inputs, outputs);
  return report;
}

void Pipeline::dump_attention_stage(const std::string& split, std::size_t limit) {
  require_artifact(paths_.full_checkpoint, "train-full");
  require_artifact(paths_.memory, "build-memory");
  const FullModel model = load_full_model(paths_.full_checkpoint);
  const PrototypeMemory memory = load_memory(paths_.memory);

  fs::create_directories(paths_.attention_dir);
  std::ofstream signatures(paths_.attention_dir / "signatures.tsv", std::ios::binary);
  std::size_t count = 0;
  for (const IsolatedSample& sample : split_samples(split_from_string(split))) {
    if (limit && count >= limit) break;
    const ForwardTrace trace = forward_full(model, memory, sample.frames);
    write_trace_csv(paths_.attention_dir / (sample.id + ".csv"), trace);
    const SignSignature sig = sign_signature(trace, model.encoder.downsample);
    signatures << sample.id << '\t' << sig.feature_index << '\t' << sig.raw_start << '\t'
               << sig.raw_end << '\n';
    ++count;
  }
  signatures.close();
  write_manifest("dump-attention",
                 {paths_.dataset, paths_.full_checkpoint, paths_.memory},
                 {paths_.attention_dir});
}

void Pipeline::dump_embeddings_stage(const std::string& model_name) {
  require_artifact(paths_.dataset / "index.tsv", "gen");
  fs::path ckpt;
  if (model_name == "base") {
    ckpt = paths_.base_checkpoint;
    require_artifact(ckpt, "train-base");
  } else if (model_name == "aligned") {
    ckpt = paths_.aligned_checkpoint;
    require_artifact(ckpt, "align");
  } else {
    throw ConfigError("dump-embeddings: unknown model '" + model_name + "'");
  }
  const SignClassifier model = load_classifier(ckpt);
  const CandidateSet candidates = load_candidates();

  fs::create_directories(paths_.output);
  std::ofstream out(paths_.embeddings(model_name), std::ios::binary);
  auto write_row = [&out](const std::string& id, const char* domain, int cls,
                          const Matrix& embedding) {
    out << id << '\t' << domain << '\t' << cls;
    for (std::size_t c = 0; c < embedding.cols(); ++c) {
      out << '\t' << format_double(embedding.at(0, c));
    }
    out << '\n';
  };
  for (const IsolatedSample& sample : split_samples(Split::kTrain)) {
    write_row(sample.id, "iso", sample.label, clip_embedding(sample.frames, model.encoder));
  }
  for (const Candidate& c : candidates.items) {
    write_row(c.stream_id + ":" + std::to_string(c.start), "news", c.cls,
              clip_embedding(c.frames, model.encoder));
  }
  out.close();
  write_manifest("dump-embeddings-" + model_name,
                 {paths_.dataset, ckpt, paths_.candidates},
                 {paths_.embeddings(model_name)});
}

void Pipeline::run_all() {
  gen();
  train_base_stage(false);
  extract_stage();
  train_base_stage(true);
  align_stage();
  build_memory_stage();
  train_full_stage();
  eval_stage("base");
  eval_stage("base-news");
  eval_stage("full");
  localize_stage("base");
  localize_stage("full");
  dump_attention_stage("test", 0);
  dump_embeddings_stage("base");
  dump_embeddings_stage("aligned");
}

}  // namespace signxfer

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "signxfer/errors.hpp"
#include "signxfer/training.hpp"

using namespace signxfer;

namespace {

SynthConfig toy_synth() {
  SynthConfig cfg;
  cfg.classes = 3;
  cfg.train_per_class = 4;
  cfg.val_per_class = 1;
  cfg.test_per_class = 1;
  cfg.streams = 6;
  cfg.input_dim = 6;
  cfg.stream_length_min = 60;
  cfg.stream_length_max = 80;
  cfg.signs_per_stream_min = 2;
  cfg.signs_per_stream_max = 2;
  cfg.min_instances_per_class = 2;
  cfg.seed = 21;
  return cfg;
}

ModelDims toy_dims() {
  ModelDims dims;
  dims.input_dim = 6;
  dims.feature_dim = 12;
  dims.descriptor_dim = 6;
  dims.attention_dim = 3;
  dims.classes = 3;
  dims.downsample = 4;
  return dims;
}

struct ToyData {
  Corpus corpus;
  std::vector<IsolatedSample> train;
  std::vector<IsolatedSample> val;
  CandidateSet candidates;
};

ToyData make_toy() {
  ToyData data;
  data.corpus = generate_corpus(toy_synth());
  for (const IsolatedSample& s : data.corpus.isolated) {
    if (s.split == Split::kTrain) data.train.push_back(s);
    if (s.split == Split::kVal) data.val.push_back(s);
  }
  // synthetic candidates straight from the ground truth, one per span
  for (const NewsStream& stream : data.corpus.streams) {
    for (const SignSpan& span : stream.true_spans) {
      Candidate c;
      c.cls = span.cls;
      c.stream_id = stream.id;
      c.start = span.start;
      c.end = span.end;
      c.score = 0.9;
      c.frames = Matrix(static_cast<std::size_t>(span.end - span.start), 6);
      for (int r = span.start; r < span.end; ++r)
        for (std::size_t col = 0; col < 6; ++col)
          c.frames.at(static_cast<std::size_t>(r - span.start), col) =
              stream.frames.at(static_cast<std::size_t>(r), col);
      bool duplicate = false;
      for (const Candidate& existing : data.candidates.items) {
        if (existing.cls == c.cls && existing.stream_id == c.stream_id) duplicate = true;
      }
      if (!duplicate) data.candidates.items.push_back(std::move(c));
    }
  }
  return data;
}

}  // namespace

TEST_CASE("temporal_augment crops or cycles to the target length") {
  Rng rng(1);
  Matrix three(3, 2);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) three.at(r, c) = static_cast<double>(r);
  Matrix out = temporal_augment(three, 7, rng);
  REQUIRE(out.rows() == 7);
  const double expected[] = {0, 1, 2, 0, 1, 2, 0};
  for (std::size_t r = 0; r < 7; ++r) CHECK(out.at(r, 0) == expected[r]);

  Matrix exact(5, 2);
  for (std::size_t r = 0; r < 5; ++r) exact.at(r, 0) = static_cast<double>(r);
  Matrix same = temporal_augment(exact, 5, rng);
  CHECK(same == exact);

  Matrix hundred(100, 1);
  for (std::size_t r = 0; r < 100; ++r) hundred.at(r, 0) = static_cast<double>(r);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix crop = temporal_augment(hundred, 64, rng);
    REQUIRE(crop.rows() == 64);
    const double start = crop.at(0, 0);
    CHECK(start >= 0);
    CHECK(start <= 36);
    for (std::size_t r = 1; r < 64; ++r) {
      CHECK(crop.at(r, 0) == start + static_cast<double>(r));
    }
  }
}

TEST_CASE("train_base reduces the loss on a toy set and is seed-deterministic") {
  ToyData data = make_toy();
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.seed = 2;
  cfg.stage = TrainStage::kBase;

  TrainReport report;
  SignClassifier model =
      train_base(data.train, data.val, data.corpus.vocab, toy_dims(), cfg, &report);
  REQUIRE(report.epoch_loss.size() == 5);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  CHECK(report.has_validation);
  CHECK(report.sample_count == data.train.size());

  SignClassifier again =
      train_base(data.train, data.val, data.corpus.vocab, toy_dims(), cfg);
  CHECK(again.encoder.w == model.encoder.w);
  CHECK(again.head.w == model.head.w);
}

TEST_CASE("zero learning rate leaves parameters at initialization") {
  ToyData data = make_toy();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 0.0;
  cfg.weight_decay = 0.0;
  cfg.seed = 3;

  SignClassifier trained =
      train_base(data.train, data.val, data.corpus.vocab, toy_dims(), cfg);
  Rng init_rng = Rng(cfg.seed).substream("base-init");
  SignClassifier init = SignClassifier::init(toy_dims(), init_rng);
  CHECK(trained.encoder.w == init.encoder.w);
  CHECK(trained.head.w == init.head.w);
}

TEST_CASE("missing classes in the training data are an error") {
  ToyData data = make_toy();
  std::vector<IsolatedSample> missing;
  for (const IsolatedSample& s : data.train) {
    if (s.label != 1) missing.push_back(s);
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train_base(missing, {}, data.corpus.vocab, toy_dims(), cfg), DataError);
}

TEST_CASE("train_joint needs candidates and counts both sources") {
  ToyData data = make_toy();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 4;
  cfg.stage = TrainStage::kJoint;

  CHECK_THROWS_AS(
      train_joint(data.train, CandidateSet{}, data.val, data.corpus.vocab, toy_dims(), cfg),
      DataError);

  TrainReport report;
  SignClassifier aligned = train_joint(data.train, data.candidates, data.val,
                                       data.corpus.vocab, toy_dims(), cfg, &report);
  CHECK(report.sample_count == data.train.size() + data.candidates.size());

  // fresh weights, not a continuation of the base initialization
  Rng base_rng = Rng(cfg.seed).substream("base-init");
  SignClassifier base_init = SignClassifier::init(toy_dims(), base_rng);
  CHECK(aligned.encoder.w != base_init.encoder.w);
}

TEST_CASE("train_full freezes the memory and moves the perturbation off zero") {
  ToyData data = make_toy();
  TrainConfig base_cfg;
  base_cfg.epochs = 3;
  base_cfg.batch_size = 4;
  base_cfg.seed = 5;
  SignClassifier base =
      train_base(data.train, data.val, data.corpus.vocab, toy_dims(), base_cfg);
  SignClassifier aligned = train_joint(data.train, data.candidates, data.val,
                                       data.corpus.vocab, toy_dims(), base_cfg);

  PrototypeMemory memory = build_memory(MemorySource::kNewsAligned, data.corpus.vocab,
                                        base, aligned, data.train, data.candidates);
  const Matrix memory_before = memory.centroids;

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.seed = 6;
  cfg.stage = TrainStage::kFull;
  TrainReport report;
  FullModel model =
      train_full(data.train, memory, base, data.val, toy_dims(), cfg, &report);

  CHECK(memory.centroids == memory_before);
  bool moved = false;
  for (double v : model.attention.perturbation.values()) {
    if (v != 0.0) moved = true;
  }
  CHECK(moved);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());

  // encoder fine-tunes away from the base weights by default
  CHECK(model.encoder.w != base.encoder.w);

  TrainConfig frozen = cfg;
  frozen.freeze_encoder = true;
  FullModel fixed = train_full(data.train, memory, base, data.val, toy_dims(), frozen);
  CHECK(fixed.encoder.w == base.encoder.w);
  CHECK(fixed.encoder.b == base.encoder.b);
}

TEST_CASE("interdomain_centroid_distance averages over covered classes") {
  ToyData data = make_toy();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 7;
  SignClassifier base =
      train_base(data.train, data.val, data.corpus.vocab, toy_dims(), cfg);

  const double gap = interdomain_centroid_distance(base, data.train, data.candidates);
  CHECK(gap > 0.0);
  CHECK(std::isfinite(gap));

  // classes without news features are skipped; none covered is an error
  CandidateSet only_class0;
  for (const Candidate& c : data.candidates.items) {
    if (c.cls == 0) only_class0.items.push_back(c);
  }
  const double gap0 = interdomain_centroid_distance(base, data.train, only_class0);
  CHECK(std::isfinite(gap0));
  CHECK_THROWS_AS(interdomain_centroid_distance(base, data.train, CandidateSet{}),
                  DataError);
}

TEST_CASE("train reports serialize with config echo and epochs") {
  ToyData data = make_toy();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 8;
  TrainReport report;
  train_base(data.train, data.val, data.corpus.vocab, toy_dims(), cfg, &report);
  report.checkpoint_path = "out/base.ckpt";

  const auto path = std::filesystem::temp_directory_path() / "signxfer-report.tsv";
  write_train_report(path, report);
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("#stage\tbase") != std::string::npos);
  CHECK(content.find("#checkpoint\tout/base.ckpt") != std::string::npos);
  CHECK(content.find("epochs=2") != std::string::npos);
  CHECK(content.find("\n1\t") != std::string::npos);
  std::filesystem::remove(path);
}

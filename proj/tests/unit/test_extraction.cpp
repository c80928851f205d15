#include <doctest.h>

#include <filesystem>
#include <set>

#include "signxfer/extraction.hpp"
#include "signxfer/rng.hpp"
#include "signxfer/training.hpp"

using namespace signxfer;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-1, 1);
  return m;
}

SignClassifier tiny_model(Rng& rng, std::size_t d_in, std::size_t classes) {
  ModelDims dims;
  dims.input_dim = d_in;
  dims.feature_dim = 6;
  dims.classes = classes;
  dims.downsample = 4;
  return SignClassifier::init(dims, rng);
}

NewsStream stream_with_tokens(Rng& rng, std::size_t frames, std::size_t d_in,
                              std::vector<std::string> tokens) {
  NewsStream s;
  s.id = "news-000";
  s.frames = random_matrix(rng, frames, d_in);
  s.tokens = std::move(tokens);
  return s;
}

}  // namespace

TEST_CASE("window counts follow the sliding rule") {
  Rng rng(1);
  SignClassifier model = tiny_model(rng, 4, 3);
  ExtractionConfig cfg;

  NewsStream nine = stream_with_tokens(rng, 9, 4, {});
  CHECK(score_windows(nine, model, cfg).size() == 1);

  ExtractionConfig only9;
  only9.window_min = 9;
  only9.window_max = 9;
  NewsStream twenty = stream_with_tokens(rng, 20, 4, {});
  CHECK(score_windows(twenty, model, only9).size() == 12);

  NewsStream tiny = stream_with_tokens(rng, 5, 4, {});
  CHECK(score_windows(tiny, model, cfg).empty());
}

TEST_CASE("window scores reproduce direct classify(encode(.)) calls bit-exactly") {
  Rng rng(2);
  SignClassifier model = tiny_model(rng, 4, 3);
  ExtractionConfig cfg;
  cfg.window_max = 10;
  NewsStream stream = stream_with_tokens(rng, 30, 4, {});
  for (const ScoredWindow& w : score_windows(stream, model, cfg)) {
    Matrix window(static_cast<std::size_t>(w.end - w.start), 4);
    for (int r = w.start; r < w.end; ++r)
      for (std::size_t c = 0; c < 4; ++c)
        window.at(static_cast<std::size_t>(r - w.start), c) =
            stream.frames.at(static_cast<std::size_t>(r), c);
    CHECK(w.probabilities == classifier_probabilities(model, window));
  }
}

TEST_CASE("extract_best_window takes the argmax and breaks ties deterministically") {
  GlossVocabulary vocab = make_vocabulary(2);
  NewsStream stream;
  stream.id = "s";
  stream.tokens = {vocab.glosses[0]};

  std::vector<ScoredWindow> windows;
  auto make = [](int start, int end, double score) {
    ScoredWindow w;
    w.start = start;
    w.end = end;
    w.probabilities = Matrix::from_rows({{score, 0.0}});
    return w;
  };

  SUBCASE("single window wins") {
    windows.push_back(make(0, 9, 0.4));
    stream.frames = Matrix(20, 1);
    auto c = extract_best_window(stream, vocab, 0, windows);
    REQUIRE(c.has_value());
    CHECK(c->start == 0);
    CHECK(c->score == 0.4);
  }

  SUBCASE("argmax over scores") {
    windows.push_back(make(0, 9, 0.1));
    windows.push_back(make(1, 10, 0.9));
    windows.push_back(make(2, 11, 0.4));
    stream.frames = Matrix(20, 1);
    auto c = extract_best_window(stream, vocab, 0, windows);
    REQUIRE(c.has_value());
    CHECK(c->start == 1);
  }

  SUBCASE("ties break to the earliest start, then the smallest window") {
    windows.push_back(make(5, 14, 0.7));
    windows.push_back(make(3, 12, 0.7));
    windows.push_back(make(3, 13, 0.7));
    stream.frames = Matrix(20, 1);
    auto c = extract_best_window(stream, vocab, 0, windows);
    REQUIRE(c.has_value());
    CHECK(c->start == 3);
    CHECK(c->end == 12);
  }

  SUBCASE("absent lemma skips the class") {
    windows.push_back(make(0, 9, 0.99));
    stream.frames = Matrix(20, 1);
    auto c = extract_best_window(stream, vocab, 1, windows);
    CHECK_FALSE(c.has_value());
  }
}

TEST_CASE("threshold filtering is strict") {
  std::vector<Candidate> raw;
  for (double score : {0.29, 0.30, 0.31}) {
    Candidate c;
    c.cls = 0;
    c.stream_id = "s" + format_double(score);
    c.score = score;
    raw.push_back(c);
  }
  CandidateSet kept = filter_by_threshold(raw, 0.3);
  REQUIRE(kept.size() == 1);
  CHECK(kept.items[0].score == 0.31);

  CHECK(filter_by_threshold(raw, 0.0).size() == 3);
  CHECK(filter_by_threshold({}, 0.3).empty());
}

TEST_CASE("raising the threshold never adds candidates") {
  Rng rng(3);
  std::vector<Candidate> raw;
  for (int i = 0; i < 40; ++i) {
    Candidate c;
    c.cls = static_cast<int>(rng.below(4));
    c.stream_id = "s" + std::to_string(i);
    c.score = rng.uniform();
    raw.push_back(c);
  }
  for (int trial = 0; trial < 20; ++trial) {
    double lo = rng.uniform();
    double hi = rng.uniform();
    if (lo > hi) std::swap(lo, hi);
    CandidateSet at_lo = filter_by_threshold(raw, lo);
    CandidateSet at_hi = filter_by_threshold(raw, hi);
    CHECK(at_hi.size() <= at_lo.size());
    for (const Candidate& c : at_hi.items) {
      bool found = false;
      for (const Candidate& d : at_lo.items) {
        if (d.stream_id == c.stream_id && d.cls == c.cls) found = true;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("full extraction yields at most one candidate per stream and class") {
  SynthConfig synth;
  synth.classes = 4;
  synth.train_per_class = 3;
  synth.val_per_class = 0;
  synth.test_per_class = 0;
  synth.streams = 5;
  synth.input_dim = 6;
  synth.stream_length_min = 60;
  synth.stream_length_max = 80;
  synth.signs_per_stream_min = 2;
  synth.signs_per_stream_max = 3;
  synth.min_instances_per_class = 1;
  synth.seed = 5;
  Corpus corpus = generate_corpus(synth);

  Rng rng(6);
  SignClassifier model = tiny_model(rng, 6, 4);
  ExtractionConfig cfg;
  cfg.epsilon = 0.05;  // untrained model; keep plenty
  CandidateSet set = extract_candidates(corpus.streams, corpus.vocab, model, cfg);

  std::set<std::pair<int, std::string>> seen;
  for (const Candidate& c : set.items) {
    CHECK(seen.insert({c.cls, c.stream_id}).second);
    CHECK(c.end - c.start >= cfg.window_min);
    CHECK(c.end - c.start <= cfg.window_max);
    CHECK(c.start >= 0);
    CHECK(c.score > cfg.epsilon);
  }
}

TEST_CASE("candidate TSV round-trips through the streams") {
  SynthConfig synth;
  synth.classes = 3;
  synth.train_per_class = 2;
  synth.val_per_class = 0;
  synth.test_per_class = 0;
  synth.streams = 3;
  synth.input_dim = 5;
  synth.stream_length_min = 50;
  synth.stream_length_max = 60;
  synth.signs_per_stream_min = 1;
  synth.signs_per_stream_max = 2;
  synth.min_instances_per_class = 1;
  synth.seed = 7;
  Corpus corpus = generate_corpus(synth);

  Rng rng(8);
  SignClassifier model = tiny_model(rng, 5, 3);
  ExtractionConfig cfg;
  cfg.epsilon = 0.01;
  CandidateSet set = extract_candidates(corpus.streams, corpus.vocab, model, cfg);

  const auto path = std::filesystem::temp_directory_path() / "signxfer-cands.tsv";
  write_candidates_tsv(path, set);
  CandidateSet back = read_candidates_tsv(path, corpus.streams);
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back.items[i].cls == set.items[i].cls);
    CHECK(back.items[i].stream_id == set.items[i].stream_id);
    CHECK(back.items[i].start == set.items[i].start);
    CHECK(back.items[i].end == set.items[i].end);
    CHECK(back.items[i].score == set.items[i].score);
    CHECK(back.items[i].frames == set.items[i].frames);
  }
  std::filesystem::remove(path);
}

TEST_CASE("a trained model recovers strongly planted signs") {
  // one short, low-noise sign per stream; after base training the argmax
  // window midpoint should land within +-2 frames of the truth almost always
  SynthConfig synth;
  synth.classes = 4;
  synth.train_per_class = 12;
  synth.val_per_class = 0;
  synth.test_per_class = 0;
  synth.streams = 100;
  synth.input_dim = 8;
  synth.iso_noise = 0.05;
  synth.news_noise = 0.02;
  synth.domain_shift_strength = 0.05;
  synth.background_amplitude = 0.2;
  synth.stream_length_min = 80;
  synth.stream_length_max = 100;
  synth.signs_per_stream_min = 1;
  synth.signs_per_stream_max = 1;
  synth.news_length_min = 9;
  synth.news_length_max = 11;
  synth.gesture_length_min = 8;
  synth.gesture_length_max = 12;
  synth.min_instances_per_class = 1;
  synth.distractor_token_rate = 0.0;
  synth.seed = 11;
  Corpus corpus = generate_corpus(synth);

  ModelDims dims;
  dims.input_dim = 8;
  dims.feature_dim = 16;
  dims.descriptor_dim = 8;
  dims.attention_dim = 4;
  dims.classes = 4;
  dims.downsample = 1;

  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 8;
  tc.learning_rate = 3e-3;
  tc.seed = 12;
  tc.stage = TrainStage::kBase;
  std::vector<IsolatedSample> train;
  for (const IsolatedSample& s : corpus.isolated) {
    if (s.split == Split::kTrain) train.push_back(s);
  }
  SignClassifier model = train_base(train, {}, corpus.vocab, dims, tc);

  ExtractionConfig cfg;
  cfg.epsilon = 0.3;
  std::size_t trials = 0;
  std::size_t hits = 0;
  for (const NewsStream& stream : corpus.streams) {
    if (trials >= 100) break;
    const auto windows = score_windows(stream, model, cfg);
    REQUIRE(stream.true_spans.size() == 1);
    const SignSpan& span = stream.true_spans.front();
    auto candidate = extract_best_window(stream, corpus.vocab, span.cls, windows);
    ++trials;
    if (!candidate) continue;
    const double mid = 0.5 * (candidate->start + candidate->end);
    const double true_mid = 0.5 * (span.start + span.end);
    if (std::abs(mid - true_mid) <= 2.0) ++hits;
  }
  REQUIRE(trials == 100);
  CHECK(hits >= 90);
}

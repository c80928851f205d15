#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "signxfer/backbone.hpp"
#include "signxfer/errors.hpp"
#include "signxfer/rng.hpp"

using namespace signxfer;
namespace fs = std::filesystem;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-1, 1);
  return m;
}

EncoderParams random_encoder(Rng& rng, std::size_t d_in, std::size_t d, std::size_t rho) {
  EncoderParams enc;
  enc.w = random_matrix(rng, d_in, d);
  enc.b = random_matrix(rng, 1, d);
  enc.downsample = rho;
  return enc;
}

}  // namespace

TEST_CASE("encode output length is the ceiling of t_raw over rho") {
  Rng rng(1);
  EncoderParams enc = random_encoder(rng, 5, 7, 4);
  CHECK(encode(random_matrix(rng, 8, 5), enc).rows() == 2);
  CHECK(encode(random_matrix(rng, 9, 5), enc).rows() == 3);
  CHECK(encode(random_matrix(rng, 1, 5), enc).rows() == 1);
}

TEST_CASE("constant frames give identical encoded rows") {
  Rng rng(2);
  EncoderParams enc = random_encoder(rng, 4, 6, 2);
  Matrix frames(10, 4);
  for (std::size_t c = 0; c < 4; ++c) {
    const double v = rng.uniform(-1, 1);
    for (std::size_t r = 0; r < 10; ++r) frames.at(r, c) = v;
  }
  Matrix x = encode(frames, enc);
  for (std::size_t r = 1; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      CHECK(x.at(r, c) == doctest::Approx(x.at(0, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("permuting frames inside one pooling window leaves the encoding nearly fixed") {
  Rng rng(3);
  EncoderParams enc = random_encoder(rng, 4, 6, 3);
  Matrix frames = random_matrix(rng, 9, 4);
  Matrix swapped = frames;
  for (std::size_t c = 0; c < 4; ++c) {
    std::swap(swapped.at(3, c), swapped.at(5, c));  // inside window [3,6)
  }
  Matrix a = encode(frames, enc);
  Matrix b = encode(swapped, enc);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a.values()[i] - b.values()[i]) < 1e-12);
  }
}

TEST_CASE("encode rejects mismatched input width") {
  Rng rng(4);
  EncoderParams enc = random_encoder(rng, 5, 7, 4);
  CHECK_THROWS_AS(encode(random_matrix(rng, 8, 6), enc), ShapeError);
}

TEST_CASE("classify with zero weights gives one half everywhere") {
  HeadParams head;
  head.w = Matrix(6, 4);
  head.b = Matrix(1, 4);
  Rng rng(5);
  Matrix probs = classify(random_matrix(rng, 3, 6), head);
  for (double v : probs.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  HeadParams single;
  single.w = Matrix(6, 1);
  single.b = Matrix(1, 1);
  CHECK(classify(random_matrix(rng, 2, 6), single).at(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("classify matches a hand-composed pool-affine-sigmoid oracle") {
  Rng rng(6);
  HeadParams head;
  head.w = random_matrix(rng, 6, 3);
  head.b = random_matrix(rng, 1, 3);
  Matrix features = random_matrix(rng, 5, 6);
  Matrix got = classify(features, head);

  for (std::size_t j = 0; j < 3; ++j) {
    double logit = head.b.at(0, j);
    for (std::size_t c = 0; c < 6; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < 5; ++r) mean += features.at(r, c);
      mean /= 5.0;
      logit += mean * head.w.at(c, j);
    }
    const double expected = 1.0 / (1.0 + std::exp(-logit));
    CHECK(std::abs(got.at(0, j) - expected) < 1e-12);
  }
}

TEST_CASE("classify is invariant to temporal permutation and stays in (0,1)") {
  Rng rng(7);
  HeadParams head;
  head.w = random_matrix(rng, 6, 3);
  head.b = random_matrix(rng, 1, 3);
  Matrix features = random_matrix(rng, 6, 6);
  Matrix permuted(6, 6);
  const std::size_t order[] = {5, 2, 0, 4, 1, 3};
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) permuted.at(r, c) = features.at(order[r], c);
  Matrix a = classify(features, head);
  Matrix b = classify(permuted, head);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a.values()[i] - b.values()[i]) < 1e-12);
    CHECK(a.values()[i] > 0.0);
    CHECK(a.values()[i] < 1.0);
  }
}

TEST_CASE("graph and numeric classifier forwards agree bit for bit") {
  Rng rng(8);
  ModelDims dims;
  dims.input_dim = 5;
  dims.feature_dim = 8;
  dims.classes = 4;
  dims.downsample = 3;
  SignClassifier model = SignClassifier::init(dims, rng);
  Matrix frames = random_matrix(rng, 11, 5);

  ad::Graph g;
  BoundEncoder enc = bind_encoder(g, model.encoder);
  BoundHead head = bind_head(g, model.head);
  ad::Value logits = classifier_logits_graph(g, enc, head, frames);
  CHECK(logits.value() == classifier_logits(model, frames));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Rng rng(9);
  ModelDims dims;
  dims.input_dim = 5;
  dims.feature_dim = 8;
  dims.classes = 4;
  SignClassifier model = SignClassifier::init(dims, rng);

  const fs::path path = fs::temp_directory_path() / "signxfer-ckpt-test.ckpt";
  save_classifier(path, model);
  SignClassifier back = load_classifier(path);
  CHECK(back.encoder.w == model.encoder.w);
  CHECK(back.encoder.b == model.encoder.b);
  CHECK(back.encoder.downsample == model.encoder.downsample);
  CHECK(back.head.w == model.head.w);
  CHECK(back.head.b == model.head.b);
  fs::remove(path);
}

TEST_CASE("loading a missing checkpoint names the path") {
  CHECK_THROWS_WITH_AS(load_classifier("/nonexistent/nowhere.ckpt"),
                       doctest::Contains("nowhere.ckpt"), DataError);
}

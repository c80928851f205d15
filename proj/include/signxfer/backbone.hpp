#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "signxfer/autodiff.hpp"
#include "signxfer/matrix.hpp"
#include "signxfer/params.hpp"

namespace signxfer {

struct ModelDims {
  std::size_t input_dim = 16;      // raw frame-vector width
  std::size_t feature_dim = 32;    // encoder output width d
  std::size_t descriptor_dim = 16; // common embedding width d' (default d/2)
  std::size_t attention_dim = 8;   // attention bottleneck d'' (default d/4)
  std::size_t classes = 20;
  std::size_t downsample = 4;      // temporal pooling factor rho
};

struct EncoderParams {
  Matrix w;  // d_in x d
  Matrix b;  // 1 x d
  std::size_t downsample = 4;
};

struct HeadParams {
  Matrix w;  // d x K
  Matrix b;  // 1 x K
};

// The stand-in backbone: per-frame affine + tanh, temporal mean pooling,
// then a pooled sigmoid classification head.
struct SignClassifier {
  EncoderParams encoder;
  HeadParams head;

  static SignClassifier init(const ModelDims& dims, Rng& rng);
  std::vector<ParamRef> params();
};

// frames t_raw x d_in -> features ceil(t_raw/rho) x d.
Matrix encode(const Matrix& frames, const EncoderParams& enc);

// Per-class probabilities in (0,1); mean pool over time, affine, sigmoid.
// Not normalized across classes.
Matrix classify(const Matrix& features, const HeadParams& head);
Matrix classify_logits(const Matrix& features, const HeadParams& head);

Matrix classifier_probabilities(const SignClassifier& model, const Matrix& frames);
Matrix classifier_logits(const SignClassifier& model, const Matrix& frames);

// Pooled clip embedding (1 x d): temporal mean of the encoder output. Used
// for prototypes and the domain-gap measurements.
Matrix clip_embedding(const Matrix& frames, const EncoderParams& enc);

// Graph twins of the numeric forward; they invoke the same kernels in the
// same order, so values agree bit for bit.
struct BoundEncoder {
  ad::Value w;
  ad::Value b;
  std::size_t downsample = 4;
};

struct BoundHead {
  ad::Value w;
  ad::Value b;
};

BoundEncoder bind_encoder(ad::Graph& g, EncoderParams& enc);
BoundHead bind_head(ad::Graph& g, HeadParams& head);
ad::Value encode_graph(ad::Graph& g, const BoundEncoder& enc, const Matrix& frames);
ad::Value classifier_logits_graph(ad::Graph& g, const BoundEncoder& enc,
                                  const BoundHead& head, const Matrix& frames);

// Checkpoints: sections of "#name rows cols" followed by CSV rows; values
// round-trip bit-exactly.
using NamedMatrices = std::vector<std::pair<std::string, Matrix>>;
void write_checkpoint(const std::filesystem::path& path, const NamedMatrices& sections);
NamedMatrices read_checkpoint(const std::filesystem::path& path);

void save_classifier(const std::filesystem::path& path, const SignClassifier& model);
SignClassifier load_classifier(const std::filesystem::path& path);

}  // namespace signxfer

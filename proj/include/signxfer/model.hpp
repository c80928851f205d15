#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "signxfer/autodiff.hpp"
#include "signxfer/backbone.hpp"
#include "signxfer/matrix.hpp"
#include "signxfer/memory.hpp"

namespace signxfer {

// Projection matrices of the descriptor and attention stages. The
// perturbation matrix starts at zero so training begins with no
// alignment-error compensation.
struct AttentionParams {
  Matrix to_common_clip;    // W_X: d x d'
  Matrix to_common_memory;  // W_M: d x d'
  Matrix perturbation;      // W_delta: d x d'
  Matrix to_input;          // W_u: d' x d
  Matrix query_descriptor;  // W_P: d x d''
  Matrix query_clip;        // W_Q: d x d''
  Matrix value_down;        // W_V: d x d''
  Matrix value_up;          // W_O: d'' x d

  static AttentionParams init(const ModelDims& dims, Rng& rng);
};

// Every intermediate of one clip's forward pass.
struct ForwardTrace {
  Matrix correlation;  // r: t x K, rows sum to 1
  Matrix reweighted;   // U: t x d'
  Matrix residual;     // Z: t x d
  Matrix descriptor;   // P: 1 x d
  Matrix similarity;   // S: 1 x t
  Matrix attention;    // A: 1 x t, sums to 1
  Matrix attended;     // V: 1 x d
  Matrix fused;        // P + V: 1 x d
  Matrix logits;       // 1 x K
};

struct FullModel {
  EncoderParams encoder;
  AttentionParams attention;
  HeadParams head;

  static FullModel init(const ModelDims& dims, Rng& rng);
  std::vector<ParamRef> params();
};

// Softmax-normalized similarity of each clip frame against each memory cell
// in the common embedding space.
Matrix correlation(const Matrix& clip, const Matrix& memory, const AttentionParams& p);

// Memory rows recombined by correlation, projected with the perturbed map.
Matrix reweight_memory(const Matrix& corr, const Matrix& memory, const AttentionParams& p);

// Back to input space as a residual of the clip, then temporal maxpool:
// returns {residual Z, descriptor P}.
std::pair<Matrix, Matrix> domain_invariant_descriptor(const Matrix& reweighted,
                                                      const Matrix& clip,
                                                      const AttentionParams& p);

// 1 x t attention over temporal positions from descriptor/frame similarity.
Matrix temporal_attention(const Matrix& descriptor, const Matrix& clip,
                          const AttentionParams& p);

// Attention-weighted channel summary lifted back to input width.
Matrix attend(const Matrix& attention, const Matrix& clip, const AttentionParams& p);

// Full pass over already-encoded features X (t x d).
ForwardTrace forward_features(const FullModel& model, const Matrix& memory,
                              const Matrix& features);

// encode + forward_features. Memory row count must match the head width.
ForwardTrace forward_full(const FullModel& model, const PrototypeMemory& memory,
                          const Matrix& frames);

Matrix full_probabilities(const FullModel& model, const PrototypeMemory& memory,
                          const Matrix& frames);

// Graph twin for training; mirrors the numeric kernels call for call.
struct BoundAttention {
  ad::Value to_common_clip, to_common_memory, perturbation, to_input;
  ad::Value query_descriptor, query_clip, value_down, value_up;
};

struct BoundFullModel {
  BoundEncoder encoder;
  BoundAttention attention;
  BoundHead head;
  ad::Value memory;  // constant input; no update path
};

BoundFullModel bind_full_model(ad::Graph& g, FullModel& model, const Matrix& memory);
ad::Value full_logits_graph(ad::Graph& g, const BoundFullModel& bound,
                            const Matrix& frames);

void save_full_model(const std::filesystem::path& path, const FullModel& model);
FullModel load_full_model(const std::filesystem::path& path);

// Attention/correlation dump for one clip: "#attention t" section with
// frame-index,weight rows, then "#correlation t K" with CSV rows.
void write_trace_csv(const std::filesystem::path& path, const ForwardTrace& trace);

}  // namespace signxfer

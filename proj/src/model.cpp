#include "signxfer/model.hpp"

#include <fstream>

#include "signxfer/errors.hpp"

namespace signxfer {

namespace fs = std::filesystem;

AttentionParams AttentionParams::init(const ModelDims& dims, Rng& rng) {
  if (dims.attention_dim >= dims.feature_dim) {
    throw ShapeError("AttentionParams: attention_dim must be < feature_dim, got " +
                     std::to_string(dims.attention_dim) + " vs " +
                     std::to_string(dims.feature_dim));
  }
  AttentionParams p;
  p.to_common_clip = uniform_init(dims.feature_dim, dims.descriptor_dim, rng);
  p.to_common_memory = uniform_init(dims.feature_dim, dims.descriptor_dim, rng);
  p.perturbation = Matrix(dims.feature_dim, dims.descriptor_dim);
  p.to_input = uniform_init(dims.descriptor_dim, dims.feature_dim, rng);
  p.query_descriptor = uniform_init(dims.feature_dim, dims.attention_dim, rng);
  p.query_clip = uniform_init(dims.feature_dim, dims.attention_dim, rng);
  p.value_down = uniform_init(dims.feature_dim, dims.attention_dim, rng);
  p.value_up = uniform_init(dims.attention_dim, dims.feature_dim, rng);
  return p;
}

FullModel FullModel::init(const ModelDims& dims, Rng& rng) {
  FullModel model;
  model.encoder.w = uniform_init(dims.input_dim, dims.feature_dim, rng);
  model.encoder.b = Matrix(1, dims.feature_dim);
  model.encoder.downsample = dims.downsample;
  model.attention = AttentionParams::init(dims, rng);
  model.head.w = uniform_init(dims.feature_dim, dims.classes, rng);
  model.head.b = Matrix(1, dims.classes);
  return model;
}

std::vector<ParamRef> FullModel::params() {
  return {
      {"encoder.w", &encoder.w},
      {"encoder.b", &encoder.b},
      {"attn.w_x", &attention.to_common_clip},
      {"attn.w_m", &attention.to_common_memory},
      {"attn.w_delta", &attention.perturbation},
      {"attn.w_u", &attention.to_input},
      {"attn.w_p", &attention.query_descriptor},
      {"attn.w_q", &attention.query_clip},
      {"attn.w_v", &attention.value_down},
      {"attn.w_o", &attention.value_up},
      {"head.w", &head.w},
      {"head.b", &head.b},
  };
}

Matrix correlation(const Matrix& clip, const Matrix& memory, const AttentionParams& p) {
  return row_softmax(
      matmul(matmul(clip, p.to_common_clip), transpose(matmul(memory, p.to_common_memory))));
}

Matrix reweight_memory(const Matrix& corr, const Matrix& memory, const AttentionParams& p) {
  return matmul(matmul(corr, memory), add(p.to_common_memory, p.perturbation));
}

std::pair<Matrix, Matrix> domain_invariant_descriptor(const Matrix& reweighted,
                                                      const Matrix& clip,
                                                      const AttentionParams& p) {
  Matrix residual = add(matmul(reweighted, p.to_input), clip);
  Matrix descriptor = temporal_maxpool(residual);
  return {std::move(residual), std::move(descriptor)};
}

Matrix temporal_attention(const Matrix& descriptor, const Matrix& clip,
                          const AttentionParams& p) {
  return row_softmax(matmul(matmul(descriptor, p.query_descriptor),
                            transpose(matmul(clip, p.query_clip))));
}

Matrix attend(const Matrix& attention, const Matrix& clip, const AttentionParams& p) {
  return matmul(attention, matmul(matmul(clip, p.value_down), p.value_up));
}

ForwardTrace forward_features(const FullModel& model, const Matrix& memory,
                              const Matrix& features) {
  if (memory.cols() != features.cols()) {
    throw ShapeError("forward_features: memory " + memory.shape_str() +
                     " vs features " + features.shape_str());
  }
  if (memory.rows() != model.head.w.cols()) {
    throw ShapeError("forward_features: memory has " + std::to_string(memory.rows()) +
                     " classes, head expects " + std::to_string(model.head.w.cols()));
  }
  ForwardTrace trace;
  trace.correlation = correlation(features, memory, model.attention);
  trace.reweighted = reweight_memory(trace.correlation, memory, model.attention);
  // the similarity matrix is recomputed here rather than taken from
  // temporal_attention so the trace keeps the pre-softmax values
  auto [residual, descriptor] =
      domain_invariant_descriptor(trace.reweighted, features, model.attention);
  trace.residual = std::move(residual);
  trace.descriptor = std::move(descriptor);
  trace.similarity = matmul(matmul(trace.descriptor, model.attention.query_descriptor),
                            transpose(matmul(features, model.attention.query_clip)));
  trace.attention = row_softmax(trace.similarity);
  trace.attended = attend(trace.attention, features, model.attention);
  trace.fused = add(trace.descriptor, trace.attended);
  trace.logits = add(matmul(trace.fused, model.head.w), model.head.b);
  return trace;
}

ForwardTrace forward_full(const FullModel& model, const PrototypeMemory& memory,
                          const Matrix& frames) {
  return forward_features(model, memory.centroids, encode(frames, model.encoder));
}

Matrix full_probabilities(const FullModel& model, const PrototypeMemory& memory,
                          const Matrix& frames) {
  return sigmoid_map(forward_full(model, memory, frames).logits);
}

BoundFullModel bind_full_model(ad::Graph& g, FullModel& model, const Matrix& memory) {
  BoundFullModel bound;
  bound.encoder = bind_encoder(g, model.encoder);
  bound.attention.to_common_clip = g.param(model.attention.to_common_clip);
  bound.attention.to_common_memory = g.param(model.attention.to_common_memory);
  bound.attention.perturbation = g.param(model.attention.perturbation);
  bound.attention.to_input = g.param(model.attention.to_input);
  bound.attention.query_descriptor = g.param(model.attention.query_descriptor);
  bound.attention.query_clip = g.param(model.attention.query_clip);
  bound.attention.value_down = g.param(model.attention.value_down);
  bound.attention.value_up = g.param(model.attention.value_up);
  bound.head = bind_head(g, model.head);
  bound.memory = g.input(memory);
  return bound;
}

ad::Value full_logits_graph(ad::Graph& g, const BoundFullModel& bound,
                            const Matrix& frames) {
  const BoundAttention& p = bound.attention;
  ad::Value features = encode_graph(g, bound.encoder, frames);
  ad::Value corr = g.row_softmax(g.matmul(
      g.matmul(features, p.to_common_clip),
      g.transpose(g.matmul(bound.memory, p.to_common_memory))));
  ad::Value reweighted = g.matmul(g.matmul(corr, bound.memory),
                                  g.add(p.to_common_memory, p.perturbation));
  ad::Value residual = g.add(g.matmul(reweighted, p.to_input), features);
  ad::Value descriptor = g.temporal_maxpool(residual);
  ad::Value similarity = g.matmul(g.matmul(descriptor, p.query_descriptor),
                                  g.transpose(g.matmul(features, p.query_clip)));
  ad::Value attention = g.row_softmax(similarity);
  ad::Value attended =
      g.matmul(attention, g.matmul(g.matmul(features, p.value_down), p.value_up));
  ad::Value fused = g.add(descriptor, attended);
  return g.add(g.matmul(fused, bound.head.w), bound.head.b);
}

void save_full_model(const fs::path& path, const FullModel& model) {
  NamedMatrices sections;
  sections.emplace_back("encoder.w", model.encoder.w);
  sections.emplace_back("encoder.b", model.encoder.b);
  sections.emplace_back("encoder.rho",
                        Matrix(1, 1, static_cast<double>(model.encoder.downsample)));
  sections.emplace_back("attn.w_x", model.attention.to_common_clip);
  sections.emplace_back("attn.w_m", model.attention.to_common_memory);
  sections.emplace_back("attn.w_delta", model.attention.perturbation);
  sections.emplace_back("attn.w_u", model.attention.to_input);
  sections.emplace_back("attn.w_p", model.attention.query_descriptor);
  sections.emplace_back("attn.w_q", model.attention.query_clip);
  sections.emplace_back("attn.w_v", model.attention.value_down);
  sections.emplace_back("attn.w_o", model.attention.value_up);
  sections.emplace_back("head.w", model.head.w);
  sections.emplace_back("head.b", model.head.b);
  write_checkpoint(path, sections);
}

namespace {

const Matrix& section(const NamedMatrices& sections, const std::string& name,
                      const fs::path& path) {
  for (const auto& [n, m] : sections) {
    if (n == name) return m;
  }
  throw DataError("checkpoint " + path.string() + " has no section '" + name + "'");
}

}  // namespace

FullModel load_full_model(const fs::path& path) {
  const NamedMatrices sections = read_checkpoint(path);
  FullModel model;
  model.encoder.w = section(sections, "encoder.w", path);
  model.encoder.b = section(sections, "encoder.b", path);
  model.encoder.downsample =
      static_cast<std::size_t>(section(sections, "encoder.rho", path).at(0, 0));
  model.attention.to_common_clip = section(sections, "attn.w_x", path);
  model.attention.to_common_memory = section(sections, "attn.w_m", path);
  model.attention.perturbation = section(sections, "attn.w_delta", path);
  model.attention.to_input = section(sections, "attn.w_u", path);
  model.attention.query_descriptor = section(sections, "attn.w_p", path);
  model.attention.query_clip = section(sections, "attn.w_q", path);
  model.attention.value_down = section(sections, "attn.w_v", path);
  model.attention.value_up = section(sections, "attn.w_o", path);
  model.head.w = section(sections, "head.w", path);
  model.head.b = section(sections, "head.b", path);
  return model;
}

void write_trace_csv(const fs::path& path, const ForwardTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace: " + path.string());
  out << "#attention " << trace.attention.cols() << '\n';
  for (std::size_t i = 0; i < trace.attention.cols(); ++i) {
    out << i << ',' << format_double(trace.attention.at(0, i)) << '\n';
  }
  out << "#correlation " << trace.correlation.rows() << ' ' << trace.correlation.cols()
      << '\n';
  for (std::size_t r = 0; r < trace.correlation.rows(); ++r) {
    for (std::size_t c = 0; c < trace.correlation.cols(); ++c) {
      if (c) out << ',';
      out << format_double(trace.correlation.at(r, c));
    }
    out << '\n';
  }
}

}  // namespace signxfer

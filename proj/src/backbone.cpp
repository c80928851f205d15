#include "signxfer/backbone.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "signxfer/errors.hpp"

namespace signxfer {

namespace fs = std::filesystem;

Matrix uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

SignClassifier SignClassifier::init(const ModelDims& dims, Rng& rng) {
  SignClassifier model;
  model.encoder.w = uniform_init(dims.input_dim, dims.feature_dim, rng);
  model.encoder.b = Matrix(1, dims.feature_dim);
  model.encoder.downsample = dims.downsample;
  model.head.w = uniform_init(dims.feature_dim, dims.classes, rng);
  model.head.b = Matrix(1, dims.classes);
  return model;
}

std::vector<ParamRef> SignClassifier::params() {
  return {
      {"encoder.w", &encoder.w},
      {"encoder.b", &encoder.b},
      {"head.w", &head.w},
      {"head.b", &head.b},
  };
}

Matrix encode(const Matrix& frames, const EncoderParams& enc) {
  if (frames.cols() != enc.w.rows()) {
    throw ShapeError("encode: frames " + frames.shape_str() + " vs encoder " +
                     enc.w.shape_str());
  }
  Matrix hidden = tanh_map(add_row_bias(matmul(frames, enc.w), enc.b));
  return pool_mean_rows(hidden, enc.downsample);
}

Matrix classify_logits(const Matrix& features, const HeadParams& head) {
  return add(matmul(mean_rows(features), head.w), head.b);
}

Matrix classify(const Matrix& features, const HeadParams& head) {
  return sigmoid_map(classify_logits(features, head));
}

Matrix classifier_probabilities(const SignClassifier& model, const Matrix& frames) {
  return classify(encode(frames, model.encoder), model.head);
}

Matrix classifier_logits(const SignClassifier& model, const Matrix& frames) {
  return classify_logits(encode(frames, model.encoder), model.head);
}

Matrix clip_embedding(const Matrix& frames, const EncoderParams& enc) {
  return mean_rows(encode(frames, enc));
}

BoundEncoder bind_encoder(ad::Graph& g, EncoderParams& enc) {
  return {g.param(enc.w), g.param(enc.b), enc.downsample};
}

BoundHead bind_head(ad::Graph& g, HeadParams& head) {
  return {g.param(head.w), g.param(head.b)};
}

ad::Value encode_graph(ad::Graph& g, const BoundEncoder& enc, const Matrix& frames) {
  ad::Value input = g.input(frames);
  ad::Value hidden = g.tanh(g.add_row_bias(g.matmul(input, enc.w), enc.b));
  return g.pool_mean_rows(hidden, enc.downsample);
}

ad::Value classifier_logits_graph(ad::Graph& g, const BoundEncoder& enc,
                                  const BoundHead& head, const Matrix& frames) {
  ad::Value features = encode_graph(g, enc, frames);
  return g.add(g.matmul(g.mean_rows(features), head.w), head.b);
}

void write_checkpoint(const fs::path& path, const NamedMatrices& sections) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  for (const auto& [name, m] : sections) {
    out << '#' << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        out << format_double(m.at(r, c));
      }
      out << '\n';
    }
  }
}

NamedMatrices read_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint: " + path.string());
  NamedMatrices sections;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] != '#') {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected section header");
    }
    std::istringstream header(line.substr(1));
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(header >> name >> rows >> cols)) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": malformed section header '" + line + "'");
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) {
        throw ParseError(path.string() + ": section " + name + " truncated at row " +
                         std::to_string(r));
      }
      ++lineno;
      std::size_t c = 0;
      std::size_t begin = 0;
      while (begin <= line.size()) {
        std::size_t end = line.find(',', begin);
        if (end == std::string::npos) end = line.size();
        if (c >= cols) {
          throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": too many values in section " + name);
        }
        m.at(r, c++) = parse_double(line.substr(begin, end - begin));
        begin = end + 1;
      }
      if (c != cols) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(cols) + " values in section " + name + ", got " +
                         std::to_string(c));
      }
    }
    sections.emplace_back(name, std::move(m));
  }
  return sections;
}

namespace {

const Matrix& find_section(const NamedMatrices& sections, const std::string& name,
                           const fs::path& path) {
  for (const auto& [n, m] : sections) {
    if (n == name) return m;
  }
  throw DataError("checkpoint " + path.string() + " has no section '" + name + "'");
}

}  // namespace

void save_classifier(const fs::path& path, const SignClassifier& model) {
  NamedMatrices sections;
  sections.emplace_back("encoder.w", model.encoder.w);
  sections.emplace_back("encoder.b", model.encoder.b);
  sections.emplace_back("encoder.rho",
                        Matrix(1, 1, static_cast<double>(model.encoder.downsample)));
  sections.emplace_back("head.w", model.head.w);
  sections.emplace_back("head.b", model.head.b);
  write_checkpoint(path, sections);
}

SignClassifier load_classifier(const fs::path& path) {
  const NamedMatrices sections = read_checkpoint(path);
  SignClassifier model;
  model.encoder.w = find_section(sections, "encoder.w", path);
  model.encoder.b = find_section(sections, "encoder.b", path);
  model.encoder.downsample =
      static_cast<std::size_t>(find_section(sections, "encoder.rho", path).at(0, 0));
  model.head.w = find_section(sections, "head.w", path);
  model.head.b = find_section(sections, "head.b", path);
  return model;
}

}  // namespace signxfer

#include "signxfer/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "signxfer/errors.hpp"
#include "signxfer/rng.hpp"

namespace signxfer {

namespace fs = std::filesystem;

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split '" + s + "'");
}

int GlossVocabulary::index_of(const std::string& gloss) const {
  for (std::size_t i = 0; i < glosses.size(); ++i) {
    if (glosses[i] == gloss) return static_cast<int>(i);
  }
  return -1;
}

namespace {

const char* kWordList[] = {
    "book",    "drink",   "computer", "before", "chair",  "go",       "clothes",
    "who",     "candy",   "cousin",   "deaf",   "fine",   "help",     "thin",
    "walk",    "year",    "yes",      "all",    "black",  "cool",     "finish",
    "hot",     "like",    "many",     "mother", "now",    "orange",   "table",
    "what",    "woman",   "bed",      "blue",   "bowling","dog",      "family",
    "fish",    "graduate","hat",      "hearing","kiss",   "language", "later",
    "man",     "shirt",   "study",    "tall",   "white",  "wrong",    "accident",
    "apple",   "bird",    "change",   "color",  "corn",   "cow",      "dance",
    "dark",    "doctor",  "eat",      "enjoy",  "forget", "give",     "last",
    "meet",    "pink",    "pizza",    "play",   "school", "secretary","short",
    "time",    "want",    "work",     "thank",  "paper",  "house",    "water",
};

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Piecewise-linear curve through `points` control points, evaluated at
// `length` uniformly spaced parameters.
Matrix polyline(const std::vector<Matrix>& points, int length) {
  const std::size_t dim = points.front().cols();
  Matrix out(static_cast<std::size_t>(length), dim);
  const int segments = static_cast<int>(points.size()) - 1;
  for (int i = 0; i < length; ++i) {
    const double u = length == 1 ? 0.0 : static_cast<double>(i) / (length - 1);
    double pos = u * segments;
    int seg = std::min(static_cast<int>(pos), segments - 1);
    const double frac = pos - seg;
    for (std::size_t c = 0; c < dim; ++c) {
      out.at(static_cast<std::size_t>(i), c) =
          (1.0 - frac) * points[seg].at(0, c) + frac * points[seg + 1].at(0, c);
    }
  }
  return out;
}

Matrix random_point(Rng& rng, std::size_t dim, double amplitude) {
  Matrix p(1, dim);
  for (std::size_t c = 0; c < dim; ++c) p.at(0, c) = amplitude * rng.normal();
  return p;
}

// Every class rides the same slow meander; what identifies a class is a
// short burst toward a class-specific direction at a class-specific phase.
// Classes come in pairs that share a burst direction but sign it at
// different speeds: one tall narrow burst, one low wide burst with the same
// time integral. Averaged over the clip the pair is nearly identical, so
// trajectories must be read temporally to be told apart.
struct TemplateSpec {
  std::vector<Matrix> shared_controls;
  Matrix burst_direction;
  double burst_center;
  double burst_width;
  double burst_peak;
};

TemplateSpec template_spec(const SynthConfig& cfg, int cls) {
  TemplateSpec spec;
  Rng shared_rng = Rng(cfg.seed).substream("template-shared");
  for (int i = 0; i < 4; ++i) {
    spec.shared_controls.push_back(
        random_point(shared_rng, cfg.input_dim, cfg.template_common_amplitude));
  }
  Rng pair_rng = Rng(cfg.seed).substream("burst-pair:" + std::to_string(cls / 2));
  spec.burst_direction = random_point(pair_rng, cfg.input_dim, cfg.burst_amplitude);
  Rng rng = Rng(cfg.seed).substream("template:" + std::to_string(cls));
  // a small unique component keeps pair members from coinciding exactly
  const Matrix unique = random_point(rng, cfg.input_dim, 0.12 * cfg.burst_amplitude);
  for (std::size_t c = 0; c < cfg.input_dim; ++c) {
    spec.burst_direction.at(0, c) += unique.at(0, c);
  }
  spec.burst_center = rng.uniform(0.25, 0.75);
  if (cls % 2 == 0) {
    spec.burst_peak = 1.5;
    spec.burst_width = 0.14;
  } else {
    spec.burst_peak = 0.75;
    spec.burst_width = 0.28;
  }
  return spec;
}

struct GesturePoses {
  Matrix rest;
  Matrix raised;
};

GesturePoses gesture_poses(const SynthConfig& cfg) {
  Rng rng = Rng(cfg.seed).substream("gesture");
  GesturePoses g;
  g.rest = random_point(rng, cfg.input_dim, 0.6);
  g.raised = random_point(rng, cfg.input_dim, 0.9);
  return g;
}

void add_noise(Matrix& m, Rng& rng, double sigma) {
  if (sigma <= 0.0) return;
  for (double& v : m.values()) v += sigma * rng.normal();
}

void append_rows(std::vector<std::vector<double>>& rows, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] = m.at(r, c);
    rows.push_back(std::move(row));
  }
}

std::string inflect(const std::string& gloss, Rng& rng) {
  static const char* kSuffixes[] = {"", "s", "ed", "ing"};
  return gloss + kSuffixes[rng.below(4)];
}

const char* kDistractors[] = {
    "the",     "a",     "of",      "in",     "report", "today",  "weather",
    "local",   "from",  "morning", "update", "city",   "nation", "story",
    "evening", "first", "during",  "against","between","council",
};

}  // namespace

GlossVocabulary make_vocabulary(std::size_t k) {
  GlossVocabulary vocab;
  const std::size_t listed = sizeof(kWordList) / sizeof(kWordList[0]);
  for (std::size_t i = 0; i < k; ++i) {
    if (i < listed) {
      vocab.glosses.push_back(kWordList[i]);
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "gloss%03zu", i);
      vocab.glosses.push_back(buf);
    }
  }
  for (const std::string& g : vocab.glosses) {
    vocab.lemma_table[g + "s"] = g;
    vocab.lemma_table[g + "ed"] = g;
    vocab.lemma_table[g + "ing"] = g;
  }
  return vocab;
}

Matrix sample_gesture_template(const SynthConfig& cfg, int cls, int length) {
  const TemplateSpec spec = template_spec(cfg, cls);
  Matrix out = polyline(spec.shared_controls, length);
  for (int i = 0; i < length; ++i) {
    const double u = length == 1 ? 0.5 : static_cast<double>(i) / (length - 1);
    const double bump =
        spec.burst_peak *
        std::max(0.0, 1.0 - std::abs(u - spec.burst_center) / spec.burst_width);
    if (bump == 0.0) continue;
    for (std::size_t c = 0; c < cfg.input_dim; ++c) {
      out.at(static_cast<std::size_t>(i), c) += bump * spec.burst_direction.at(0, c);
    }
  }
  return out;
}

std::vector<std::string> lemmatize_tokens(const std::vector<std::string>& tokens,
                                          const GlossVocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const std::string& token : tokens) {
    std::string lower = lowercase(token);
    auto it = vocab.lemma_table.find(lower);
    out.push_back(it == vocab.lemma_table.end() ? lower : it->second);
  }
  return out;
}

namespace {

IsolatedSample make_isolated(const SynthConfig& cfg, const GesturePoses& poses, int cls,
                             Split split, std::size_t index) {
  IsolatedSample sample;
  sample.label = cls;
  sample.split = split;
  {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "iso-c%03d-%s-%03zu", cls, to_string(split).c_str(), index);
    sample.id = buf;
  }
  Rng rng = Rng(cfg.seed).substream("iso:" + sample.id);

  const long mean = static_cast<long>(cfg.iso_mean_length);
  long total = rng.int_range(mean - 8, mean + 8);
  long pre = rng.int_range(cfg.gesture_length_min, cfg.gesture_length_max);
  long suf = rng.int_range(cfg.gesture_length_min, cfg.gesture_length_max);
  long core = std::max<long>(total - pre - suf, 3);

  std::vector<std::vector<double>> rows;
  std::vector<Matrix> up = {poses.rest, poses.raised};
  std::vector<Matrix> down = {poses.raised, poses.rest};
  append_rows(rows, polyline(up, static_cast<int>(pre)));
  append_rows(rows, sample_gesture_template(cfg, cls, static_cast<int>(core)));
  append_rows(rows, polyline(down, static_cast<int>(suf)));
  sample.frames = Matrix::from_rows(rows);
  add_noise(sample.frames, rng, cfg.iso_noise);
  return sample;
}

struct DomainShift {
  Matrix map;     // d_in x d_in
  Matrix offset;  // 1 x d_in
};

DomainShift domain_shift(const SynthConfig& cfg) {
  DomainShift shift;
  if (!cfg.domain_shift_matrix.empty()) {
    shift.map = cfg.domain_shift_matrix;
    shift.offset = cfg.domain_shift_offset.empty() ? Matrix(1, cfg.input_dim)
                                                   : cfg.domain_shift_offset;
    return shift;
  }
  const std::size_t d = cfg.input_dim;
  shift.map = Matrix(d, d);
  shift.offset = Matrix(1, d);
  for (std::size_t i = 0; i < d; ++i) shift.map.at(i, i) = 1.0;
  if (cfg.domain_shift_strength != 0.0) {
    Rng rng = Rng(cfg.seed).substream("domain-shift");
    const double s = cfg.domain_shift_strength / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) shift.map.at(i, j) += s * rng.normal();
    for (std::size_t j = 0; j < d; ++j)
      shift.offset.at(0, j) = 0.5 * cfg.domain_shift_strength * rng.normal();
  }
  return shift;
}

}  // namespace

Corpus generate_corpus(const SynthConfig& cfg) {
  if (cfg.classes < 2) throw DataError("generate_corpus: need at least 2 classes");
  if (cfg.input_dim < 1 || cfg.streams < 1) {
    throw DataError("generate_corpus: counts must be positive");
  }

  Corpus corpus;
  corpus.vocab = make_vocabulary(cfg.classes);
  const GesturePoses poses = gesture_poses(cfg);

  const std::pair<Split, std::size_t> splits[] = {
      {Split::kTrain, cfg.train_per_class},
      {Split::kVal, cfg.val_per_class},
      {Split::kTest, cfg.test_per_class},
  };
  for (const auto& [split, count] : splits) {
    for (std::size_t cls = 0; cls < cfg.classes; ++cls) {
      for (std::size_t i = 0; i < count; ++i) {
        corpus.isolated.push_back(make_isolated(cfg, poses, static_cast<int>(cls), split, i));
      }
    }
  }

  // Decide how many instances each stream carries, then assign classes so
  // that every class is planted at least min_instances_per_class times.
  std::vector<std::size_t> signs_per_stream(cfg.streams);
  std::size_t total_instances = 0;
  for (std::size_t s = 0; s < cfg.streams; ++s) {
    Rng rng = Rng(cfg.seed).substream("stream-count:" + std::to_string(s));
    signs_per_stream[s] = static_cast<std::size_t>(
        rng.int_range(static_cast<long>(cfg.signs_per_stream_min),
                      static_cast<long>(cfg.signs_per_stream_max)));
    total_instances += signs_per_stream[s];
  }
  std::vector<int> instance_classes;
  for (std::size_t copy = 0; copy < cfg.min_instances_per_class; ++copy)
    for (std::size_t cls = 0; cls < cfg.classes; ++cls)
      instance_classes.push_back(static_cast<int>(cls));
  {
    Rng rng = Rng(cfg.seed).substream("assign");
    while (instance_classes.size() < total_instances)
      instance_classes.push_back(static_cast<int>(rng.below(cfg.classes)));
    instance_classes.resize(total_instances);
    rng.shuffle(instance_classes);
  }

  const DomainShift shift = domain_shift(cfg);
  std::size_t next_instance = 0;
  for (std::size_t s = 0; s < cfg.streams; ++s) {
    NewsStream stream;
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "news-%03zu", s);
      stream.id = buf;
    }
    Rng rng = Rng(cfg.seed).substream("news:" + stream.id);
    const long T = rng.int_range(static_cast<long>(cfg.stream_length_min),
                                 static_cast<long>(cfg.stream_length_max));

    std::vector<Matrix> bg_controls;
    for (int i = 0; i < 6; ++i)
      bg_controls.push_back(random_point(rng, cfg.input_dim, cfg.background_amplitude));
    stream.frames = polyline(bg_controls, static_cast<int>(T));
    add_noise(stream.frames, rng, cfg.news_noise);

    for (std::size_t k = 0; k < signs_per_stream[s]; ++k) {
      const int cls = instance_classes[next_instance++];
      const long len = rng.int_range(cfg.news_length_min, cfg.news_length_max);
      long start = -1;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const long candidate = rng.int_range(0, T - len);
        bool clear = true;
        for (const SignSpan& span : stream.true_spans) {
          if (candidate < span.end + 1 && span.start < candidate + len + 1) {
            clear = false;
            break;
          }
        }
        if (clear) {
          start = candidate;
          break;
        }
      }
      if (start < 0) continue;  // stream too crowded; drop this instance

      Matrix instance = sample_gesture_template(cfg, cls, static_cast<int>(len));
      instance = add_row_bias(matmul(instance, shift.map), shift.offset);
      add_noise(instance, rng, cfg.news_noise);
      for (long r = 0; r < len; ++r)
        for (std::size_t c = 0; c < cfg.input_dim; ++c)
          stream.frames.at(static_cast<std::size_t>(start + r), c) =
              instance.at(static_cast<std::size_t>(r), c);
      stream.true_spans.push_back(
          {cls, static_cast<int>(start), static_cast<int>(start + len)});
    }
    std::sort(stream.true_spans.begin(), stream.true_spans.end(),
              [](const SignSpan& a, const SignSpan& b) { return a.start < b.start; });

    for (const SignSpan& span : stream.true_spans)
      stream.tokens.push_back(inflect(corpus.vocab.glosses[span.cls], rng));
    if (rng.uniform() < cfg.distractor_token_rate) {
      // weak-label noise: a gloss mentioned in the subtitles but never signed
      stream.tokens.push_back(inflect(corpus.vocab.glosses[rng.below(cfg.classes)], rng));
    }
    const std::size_t pool = sizeof(kDistractors) / sizeof(kDistractors[0]);
    for (std::size_t k = 0; k < cfg.distractor_tokens_per_stream; ++k)
      stream.tokens.push_back(kDistractors[rng.below(pool)]);
    rng.shuffle(stream.tokens);

    corpus.streams.push_back(std::move(stream));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Dataset directory I/O

namespace {

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == sep) {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

long parse_long(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(context + ": not an integer: '" + s + "'");
  }
}

}  // namespace

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::string out;
  out.reserve(m.size() * 20);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out.push_back(',');
      out += format_double(m.at(r, c));
    }
    out.push_back('\n');
  }
  write_text_file(path, out);
}

Matrix read_matrix_csv(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing matrix file: " + path.string());
  const std::vector<std::string> lines = split_lines(read_text_file(path));
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> fields = split_on(lines[i], ',');
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw ParseError(path.string() + ": row " + std::to_string(i) + ": expected " +
                       std::to_string(cols) + " values, got " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(cols);
    for (const std::string& f : fields) {
      try {
        row.push_back(parse_double(f));
      } catch (const ParseError&) {
        throw ParseError(path.string() + ": row " + std::to_string(i) +
                         ": not a number: '" + f + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return Matrix::from_rows(rows);
}

void write_dataset(const fs::path& dir, const Corpus& corpus) {
  fs::create_directories(dir / "frames");
  const bool has_news = !corpus.streams.empty();
  if (has_news) {
    fs::create_directories(dir / "subtitles");
    fs::create_directories(dir / "spans");
  }

  std::string index;
  auto index_row = [&index](const std::string& id, const char* kind,
                            const std::string& cls, const std::string& split,
                            const std::string& path, std::size_t t, std::size_t d) {
    index += id;
    index += '\t';
    index += kind;
    index += '\t';
    index += cls;
    index += '\t';
    index += split;
    index += '\t';
    index += path;
    index += '\t';
    index += std::to_string(t);
    index += '\t';
    index += std::to_string(d);
    index += '\n';
  };

  for (const IsolatedSample& sample : corpus.isolated) {
    const std::string rel = "frames/" + sample.id + ".csv";
    write_matrix_csv(dir / rel, sample.frames);
    index_row(sample.id, "iso", std::to_string(sample.label), to_string(sample.split),
              rel, sample.frames.rows(), sample.frames.cols());
  }
  for (const NewsStream& stream : corpus.streams) {
    const std::string rel = "frames/" + stream.id + ".csv";
    write_matrix_csv(dir / rel, stream.frames);
    index_row(stream.id, "news", "-", "-", rel, stream.frames.rows(),
              stream.frames.cols());

    std::string tokens;
    for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
      if (i) tokens.push_back(' ');
      tokens += stream.tokens[i];
    }
    tokens.push_back('\n');
    write_text_file(dir / "subtitles" / (stream.id + ".txt"), tokens);

    std::string spans;
    for (const SignSpan& span : stream.true_spans) {
      spans += std::to_string(span.cls);
      spans += '\t';
      spans += std::to_string(span.start);
      spans += '\t';
      spans += std::to_string(span.end);
      spans += '\n';
    }
    write_text_file(dir / "spans" / (stream.id + ".tsv"), spans);
  }
  write_text_file(dir / "index.tsv", index);

  std::string vocab;
  for (const std::string& g : corpus.vocab.glosses) {
    vocab += g;
    vocab.push_back('\n');
  }
  write_text_file(dir / "vocab.txt", vocab);

  if (!corpus.vocab.lemma_table.empty()) {
    std::string lemmas;
    for (const auto& [surface, lemma] : corpus.vocab.lemma_table) {
      lemmas += surface;
      lemmas += '\t';
      lemmas += lemma;
      lemmas += '\n';
    }
    write_text_file(dir / "lemmas.tsv", lemmas);
  }
}

Corpus read_dataset(const fs::path& dir) {
  const fs::path index_path = dir / "index.tsv";
  if (!fs::exists(index_path)) {
    throw DataError("missing index file: " + index_path.string());
  }

  Corpus corpus;
  {
    const fs::path vocab_path = dir / "vocab.txt";
    if (!fs::exists(vocab_path)) throw DataError("missing vocab file: " + vocab_path.string());
    for (const std::string& line : split_lines(read_text_file(vocab_path))) {
      if (!line.empty()) corpus.vocab.glosses.push_back(line);
    }
  }
  const fs::path lemma_path = dir / "lemmas.tsv";
  if (fs::exists(lemma_path)) {
    const std::vector<std::string> lines = split_lines(read_text_file(lemma_path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const std::vector<std::string> fields = split_on(lines[i], '\t');
      if (fields.size() != 2) {
        throw ParseError(lemma_path.string() + ":" + std::to_string(i + 1) +
                         ": expected 2 fields, got " + std::to_string(fields.size()));
      }
      corpus.vocab.lemma_table[fields[0]] = fields[1];
    }
  }

  const std::vector<std::string> lines = split_lines(read_text_file(index_path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string context = index_path.string() + ":" + std::to_string(i + 1);
    const std::vector<std::string> fields = split_on(lines[i], '\t');
    if (fields.size() != 7) {
      throw ParseError(context + ": expected 7 fields, got " +
                       std::to_string(fields.size()));
    }
    const std::string& id = fields[0];
    const std::string& kind = fields[1];
    const long t_raw = parse_long(fields[5], context);
    const long d_in = parse_long(fields[6], context);

    Matrix frames = read_matrix_csv(dir / fields[4]);
    if (frames.rows() != static_cast<std::size_t>(t_raw) ||
        frames.cols() != static_cast<std::size_t>(d_in)) {
      throw ParseError(context + ": " + fields[4] + " has shape " + frames.shape_str() +
                       ", index declares " + std::to_string(t_raw) + "x" +
                       std::to_string(d_in));
    }

    if (kind == "iso") {
      IsolatedSample sample;
      sample.id = id;
      sample.frames = std::move(frames);
      sample.label = static_cast<int>(parse_long(fields[2], context));
      if (sample.label < 0 || static_cast<std::size_t>(sample.label) >= corpus.vocab.size()) {
        throw ParseError(context + ": class " + fields[2] + " out of range");
      }
      sample.split = split_from_string(fields[3]);
      corpus.isolated.push_back(std::move(sample));
    } else if (kind == "news") {
      NewsStream stream;
      stream.id = id;
      stream.frames = std::move(frames);
      const fs::path sub_path = dir / "subtitles" / (id + ".txt");
      if (!fs::exists(sub_path)) throw DataError("missing subtitles: " + sub_path.string());
      std::istringstream tokens(read_text_file(sub_path));
      std::string token;
      while (tokens >> token) stream.tokens.push_back(token);

      const fs::path span_path = dir / "spans" / (id + ".tsv");
      if (fs::exists(span_path)) {
        const std::vector<std::string> span_lines = split_lines(read_text_file(span_path));
        for (std::size_t j = 0; j < span_lines.size(); ++j) {
          if (span_lines[j].empty()) continue;
          const std::string span_context =
              span_path.string() + ":" + std::to_string(j + 1);
          const std::vector<std::string> f = split_on(span_lines[j], '\t');
          if (f.size() != 3) {
            throw ParseError(span_context + ": expected 3 fields, got " +
                             std::to_string(f.size()));
          }
          SignSpan span;
          span.cls = static_cast<int>(parse_long(f[0], span_context));
          span.start = static_cast<int>(parse_long(f[1], span_context));
          span.end = static_cast<int>(parse_long(f[2], span_context));
          stream.true_spans.push_back(span);
        }
      }
      corpus.streams.push_back(std::move(stream));
    } else {
      throw ParseError(context + ": unknown kind '" + kind + "'");
    }
  }
  return corpus;
}

}  // namespace signxfer

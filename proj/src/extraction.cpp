#include "signxfer/extraction.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "signxfer/errors.hpp"

namespace signxfer {

namespace fs = std::filesystem;

std::vector<const Candidate*> CandidateSet::for_class(int cls) const {
  std::vector<const Candidate*> out;
  for (const Candidate& c : items) {
    if (c.cls == cls) out.push_back(&c);
  }
  return out;
}

namespace {

Matrix slice_rows(const Matrix& m, int start, int end) {
  Matrix out(static_cast<std::size_t>(end - start), m.cols());
  for (int r = start; r < end; ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      out.at(static_cast<std::size_t>(r - start), c) = m.at(static_cast<std::size_t>(r), c);
  return out;
}

void sort_candidates(std::vector<Candidate>& items) {
  std::sort(items.begin(), items.end(), [](const Candidate& a, const Candidate& b) {
    if (a.cls != b.cls) return a.cls < b.cls;
    return a.stream_id < b.stream_id;
  });
}

}  // namespace

std::vector<ScoredWindow> score_windows(const NewsStream& stream,
                                        const SignClassifier& model,
                                        const ExtractionConfig& cfg) {
  std::vector<ScoredWindow> out;
  const int total = static_cast<int>(stream.frames.rows());
  for (int size = cfg.window_min; size <= cfg.window_max; ++size) {
    for (int start = 0; start + size <= total; start += cfg.stride) {
      ScoredWindow w;
      w.start = start;
      w.end = start + size;
      w.probabilities =
          classifier_probabilities(model, slice_rows(stream.frames, start, w.end));
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::optional<Candidate> extract_best_window(const NewsStream& stream,
                                             const GlossVocabulary& vocab, int cls,
                                             const std::vector<ScoredWindow>& windows) {
  const std::vector<std::string> lemmas = lemmatize_tokens(stream.tokens, vocab);
  const std::string& gloss = vocab.glosses.at(static_cast<std::size_t>(cls));
  if (std::find(lemmas.begin(), lemmas.end(), gloss) == lemmas.end()) {
    return std::nullopt;  // class not mentioned in the subtitles
  }

  const ScoredWindow* best = nullptr;
  for (const ScoredWindow& w : windows) {
    const double score = w.probabilities.at(0, static_cast<std::size_t>(cls));
    if (!best) {
      best = &w;
      continue;
    }
    const double best_score = best->probabilities.at(0, static_cast<std::size_t>(cls));
    if (score > best_score) {
      best = &w;
    } else if (score == best_score) {
      const int size = w.end - w.start;
      const int best_size = best->end - best->start;
      if (w.start < best->start || (w.start == best->start && size < best_size)) {
        best = &w;
      }
    }
  }
  if (!best) return std::nullopt;

  Candidate c;
  c.cls = cls;
  c.stream_id = stream.id;
  c.start = best->start;
  c.end = best->end;
  c.score = best->probabilities.at(0, static_cast<std::size_t>(cls));
  c.frames = slice_rows(stream.frames, c.start, c.end);
  return c;
}

CandidateSet filter_by_threshold(std::vector<Candidate> candidates, double epsilon) {
  CandidateSet set;
  for (Candidate& c : candidates) {
    if (c.score > epsilon) set.items.push_back(std::move(c));
  }
  sort_candidates(set.items);
  return set;
}

CandidateSet extract_candidates(const std::vector<NewsStream>& streams,
                                const GlossVocabulary& vocab, const SignClassifier& model,
                                const ExtractionConfig& cfg) {
  std::vector<Candidate> raw;
  for (const NewsStream& stream : streams) {
    const std::vector<ScoredWindow> windows = score_windows(stream, model, cfg);
    if (windows.empty()) continue;
    for (std::size_t cls = 0; cls < vocab.size(); ++cls) {
      auto candidate = extract_best_window(stream, vocab, static_cast<int>(cls), windows);
      if (candidate) raw.push_back(std::move(*candidate));
    }
  }
  return filter_by_threshold(std::move(raw), cfg.epsilon);
}

void write_candidates_tsv(const fs::path& path, const CandidateSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write candidates: " + path.string());
  for (const Candidate& c : set.items) {
    out << c.cls << '\t' << c.stream_id << '\t' << c.start << '\t' << c.end << '\t'
        << format_double(c.score) << '\n';
  }
}

CandidateSet read_candidates_tsv(const fs::path& path,
                                 const std::vector<NewsStream>& streams) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read candidates: " + path.string());
  std::map<std::string, const NewsStream*> by_id;
  for (const NewsStream& s : streams) by_id[s.id] = &s;

  CandidateSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (begin <= line.size()) {
      std::size_t end = line.find('\t', begin);
      if (end == std::string::npos) end = line.size();
      fields.push_back(line.substr(begin, end - begin));
      begin = end + 1;
    }
    if (fields.size() != 5) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    Candidate c;
    c.cls = std::stoi(fields[0]);
    c.stream_id = fields[1];
    c.start = std::stoi(fields[2]);
    c.end = std::stoi(fields[3]);
    c.score = parse_double(fields[4]);
    auto it = by_id.find(c.stream_id);
    if (it == by_id.end()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": unknown stream '" + c.stream_id + "'");
    }
    if (c.start < 0 || c.end > static_cast<int>(it->second->frames.rows()) ||
        c.start >= c.end) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": span [" +
                       fields[2] + "," + fields[3] + ") outside stream");
    }
    c.frames = slice_rows(it->second->frames, c.start, c.end);
    set.items.push_back(std::move(c));
  }
  sort_candidates(set.items);
  return set;
}

}  // namespace signxfer

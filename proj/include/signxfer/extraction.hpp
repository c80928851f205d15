#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "signxfer/backbone.hpp"
#include "signxfer/corpus.hpp"
#include "signxfer/matrix.hpp"

namespace signxfer {

struct ExtractionConfig {
  int window_min = 9;
  int window_max = 16;
  int stride = 1;
  double epsilon = 0.3;  // minimum class score, strict
};

struct ScoredWindow {
  int start = 0;
  int end = 0;          // half-open
  Matrix probabilities; // 1 x K
};

// One extracted news sign: the argmax window of a (stream, class) pair.
struct Candidate {
  int cls = 0;
  std::string stream_id;
  int start = 0;
  int end = 0;
  double score = 0.0;
  Matrix frames;  // the extracted raw window
};

struct CandidateSet {
  std::vector<Candidate> items;  // sorted by (class, stream)

  std::vector<const Candidate*> for_class(int cls) const;
  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

// Every (size, start) window of the stream scored with the classifier;
// ordered by size then start. Streams shorter than every window size yield
// an empty list.
std::vector<ScoredWindow> score_windows(const NewsStream& stream,
                                        const SignClassifier& model,
                                        const ExtractionConfig& cfg);

// Argmax window for one subtitle-matched class; nullopt when the class lemma
// is absent from the stream's lemmatized tokens. Ties break to the earliest
// start, then the smallest window.
std::optional<Candidate> extract_best_window(const NewsStream& stream,
                                             const GlossVocabulary& vocab, int cls,
                                             const std::vector<ScoredWindow>& windows);

// Keeps candidates with score strictly greater than epsilon, sorted by
// (class, stream).
CandidateSet filter_by_threshold(std::vector<Candidate> candidates, double epsilon);

// Full mining pass over all streams.
CandidateSet extract_candidates(const std::vector<NewsStream>& streams,
                                const GlossVocabulary& vocab, const SignClassifier& model,
                                const ExtractionConfig& cfg);

// TSV dump: class, stream, start, end, score (one row per candidate).
void write_candidates_tsv(const std::filesystem::path& path, const CandidateSet& set);
// Reads the TSV back, re-slicing windows from the streams.
CandidateSet read_candidates_tsv(const std::filesystem::path& path,
                                 const std::vector<NewsStream>& streams);

}  // namespace signxfer

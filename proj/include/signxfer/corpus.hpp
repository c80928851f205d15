#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "signxfer/matrix.hpp"

namespace signxfer {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

struct GlossVocabulary {
  std::vector<std::string> glosses;                 // row index = class index
  std::map<std::string, std::string> lemma_table;   // surface form -> lemma

  std::size_t size() const { return glosses.size(); }
  // -1 when the gloss is not in the vocabulary.
  int index_of(const std::string& gloss) const;
};

// K glosses from a fixed word list (falling back to gloss### beyond it),
// with s/ed/ing surface forms in the lemma table.
GlossVocabulary make_vocabulary(std::size_t k);

struct IsolatedSample {
  std::string id;
  Matrix frames;  // t_raw x d_in
  int label = 0;
  Split split = Split::kTrain;
};

// Half-open frame interval of one signed word inside a stream.
struct SignSpan {
  int cls = 0;
  int start = 0;
  int end = 0;
};

struct NewsStream {
  std::string id;
  Matrix frames;  // T_raw x d_in
  std::vector<std::string> tokens;
  std::vector<SignSpan> true_spans;  // synthetic ground truth; may be empty
};

struct SynthConfig {
  std::size_t classes = 20;
  std::size_t train_per_class = 15;
  std::size_t val_per_class = 3;
  std::size_t test_per_class = 5;
  std::size_t streams = 40;
  std::size_t input_dim = 16;

  std::size_t iso_mean_length = 64;   // isolated clip length ~ uniform(mean-8, mean+8)
  int news_length_min = 9;            // news instances run at native speed
  int news_length_max = 16;
  int gesture_length_min = 10;        // demonstrating gesture prefix/suffix
  int gesture_length_max = 16;
  std::size_t stream_length_min = 280;
  std::size_t stream_length_max = 320;
  std::size_t signs_per_stream_min = 3;
  std::size_t signs_per_stream_max = 6;
  std::size_t min_instances_per_class = 2;

  double iso_noise = 0.25;
  double news_noise = 0.05;
  double background_amplitude = 0.4;
  double template_common_amplitude = 0.6;  // class-independent meander
  double burst_amplitude = 1.2;            // class-specific excursion

  // News frames pass through x -> x * shift_matrix + shift_offset. When the
  // matrix is left empty both are derived from domain_shift_strength
  // (strength 0 gives the identity map).
  double domain_shift_strength = 0.35;
  Matrix domain_shift_matrix;
  Matrix domain_shift_offset;

  double distractor_token_rate = 0.1;       // P(stream gets a gloss token with no instance)
  std::size_t distractor_tokens_per_stream = 12;

  std::uint64_t seed = 1;
};

struct Corpus {
  GlossVocabulary vocab;
  std::vector<IsolatedSample> isolated;
  std::vector<NewsStream> streams;
};

// The latent gesture of a class evaluated at `length` uniform time steps.
// Every isolated core and news instance of that class is this trajectory at
// some speed, before domain shift and noise.
Matrix sample_gesture_template(const SynthConfig& cfg, int cls, int length);

Corpus generate_corpus(const SynthConfig& cfg);

std::vector<std::string> lemmatize_tokens(const std::vector<std::string>& tokens,
                                          const GlossVocabulary& vocab);

// Dataset directory layout:
//   index.tsv            id, kind (iso|news), class or -, split or -, path, t_raw, d_in
//   vocab.txt            one gloss per line, line number = class index
//   lemmas.tsv           surface <TAB> lemma (written when the table is non-empty)
//   frames/<id>.csv      one frame per row, full-precision decimal values
//   subtitles/<id>.txt   whitespace-separated tokens (news only)
//   spans/<id>.tsv       class <TAB> start <TAB> end (news only)
void write_dataset(const std::filesystem::path& dir, const Corpus& corpus);
Corpus read_dataset(const std::filesystem::path& dir);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace signxfer

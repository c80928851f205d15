#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "signxfer/backbone.hpp"
#include "signxfer/corpus.hpp"
#include "signxfer/extraction.hpp"
#include "signxfer/matrix.hpp"

namespace signxfer {

// Which features fill the memory rows; `kNewsAligned` is the production
// setting, the others exist for ablations.
enum class MemorySource {
  kNewsAligned,  // extracted news windows through the aligned model
  kIsoBase,      // isolated training clips through the base model
  kIsoAligned,   // isolated training clips through the aligned model
  kBothAligned,  // union of both through the aligned model
};

std::string to_string(MemorySource source);
MemorySource memory_source_from_string(const std::string& s);

// K x d array of class centroids. Frozen once built: training never touches
// the rows.
struct PrototypeMemory {
  Matrix centroids;                  // K x d
  std::vector<std::string> glosses;  // row order = class index
  MemorySource source = MemorySource::kNewsAligned;
};

// Arithmetic mean of 1 x d embeddings.
Matrix build_prototype(const std::vector<Matrix>& features);

// Builds the full memory for the chosen source. `base` supplies features in
// kIsoBase mode, `aligned` in every other mode. When `fallback_to_isolated`
// is set, classes with no news candidate fall back to aligned isolated
// features (their indices are appended to `fallback_classes` when given);
// otherwise empty classes raise an error listing all of them.
PrototypeMemory build_memory(MemorySource source, const GlossVocabulary& vocab,
                             const SignClassifier& base, const SignClassifier& aligned,
                             const std::vector<IsolatedSample>& isolated_train,
                             const CandidateSet& candidates,
                             bool fallback_to_isolated = false,
                             std::vector<int>* fallback_classes = nullptr);

// Memory file: "K d source" header, then one "gloss,v1,...,vd" line per
// class. Round-trips bit-exactly.
void save_memory(const std::filesystem::path& path, const PrototypeMemory& memory);
PrototypeMemory load_memory(const std::filesystem::path& path);

}  // namespace signxfer

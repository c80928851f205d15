#include "signxfer/memory.hpp"

#include <fstream>
#include <sstream>

#include "signxfer/errors.hpp"

namespace signxfer {

namespace fs = std::filesystem;

std::string to_string(MemorySource source) {
  switch (source) {
    case MemorySource::kNewsAligned: return "news-aligned";
    case MemorySource::kIsoBase: return "iso-base";
    case MemorySource::kIsoAligned: return "iso-aligned";
    case MemorySource::kBothAligned: return "both-aligned";
  }
  return "news-aligned";
}

MemorySource memory_source_from_string(const std::string& s) {
  if (s == "news-aligned") return MemorySource::kNewsAligned;
  if (s == "iso-base") return MemorySource::kIsoBase;
  if (s == "iso-aligned") return MemorySource::kIsoAligned;
  if (s == "both-aligned") return MemorySource::kBothAligned;
  throw ConfigError("unknown memory source '" + s + "'");
}

Matrix build_prototype(const std::vector<Matrix>& features) {
  if (features.empty()) {
    throw DataError("build_prototype: empty feature set");
  }
  Matrix total = features.front();
  for (std::size_t i = 1; i < features.size(); ++i) {
    total = add(total, features[i]);
  }
  return scale(total, 1.0 / static_cast<double>(features.size()));
}

PrototypeMemory build_memory(MemorySource source, const GlossVocabulary& vocab,
                             const SignClassifier& base, const SignClassifier& aligned,
                             const std::vector<IsolatedSample>& isolated_train,
                             const CandidateSet& candidates, bool fallback_to_isolated,
                             std::vector<int>* fallback_classes) {
  const std::size_t k = vocab.size();
  const bool use_news =
      source == MemorySource::kNewsAligned || source == MemorySource::kBothAligned;
  const bool use_iso =
      source == MemorySource::kIsoBase || source == MemorySource::kIsoAligned ||
      source == MemorySource::kBothAligned;
  const SignClassifier& model = source == MemorySource::kIsoBase ? base : aligned;

  std::vector<std::vector<Matrix>> per_class(k);
  if (use_iso) {
    for (const IsolatedSample& sample : isolated_train) {
      per_class[static_cast<std::size_t>(sample.label)].push_back(
          clip_embedding(sample.frames, model.encoder));
    }
  }
  if (use_news) {
    for (const Candidate& c : candidates.items) {
      per_class[static_cast<std::size_t>(c.cls)].push_back(
          clip_embedding(c.frames, model.encoder));
    }
  }

  std::vector<std::size_t> empty;
  for (std::size_t cls = 0; cls < k; ++cls) {
    if (!per_class[cls].empty()) continue;
    if (fallback_to_isolated && source == MemorySource::kNewsAligned) {
      for (const IsolatedSample& sample : isolated_train) {
        if (static_cast<std::size_t>(sample.label) == cls) {
          per_class[cls].push_back(clip_embedding(sample.frames, aligned.encoder));
        }
      }
      if (!per_class[cls].empty()) {
        if (fallback_classes) fallback_classes->push_back(static_cast<int>(cls));
        continue;
      }
    }
    empty.push_back(cls);
  }
  if (!empty.empty()) {
    std::ostringstream msg;
    msg << "build_memory: no " << to_string(source) << " features for classes:";
    for (std::size_t cls : empty) msg << ' ' << vocab.glosses[cls] << " (" << cls << ")";
    throw DataError(msg.str());
  }

  PrototypeMemory memory;
  memory.source = source;
  memory.glosses = vocab.glosses;
  const std::size_t d = per_class[0][0].cols();
  memory.centroids = Matrix(k, d);
  for (std::size_t cls = 0; cls < k; ++cls) {
    const Matrix proto = build_prototype(per_class[cls]);
    for (std::size_t c = 0; c < d; ++c) memory.centroids.at(cls, c) = proto.at(0, c);
  }
  return memory;
}

void save_memory(const fs::path& path, const PrototypeMemory& memory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write memory: " + path.string());
  out << memory.centroids.rows() << ' ' << memory.centroids.cols() << ' '
      << to_string(memory.source) << '\n';
  for (std::size_t r = 0; r < memory.centroids.rows(); ++r) {
    out << memory.glosses.at(r);
    for (std::size_t c = 0; c < memory.centroids.cols(); ++c) {
      out << ',' << format_double(memory.centroids.at(r, c));
    }
    out << '\n';
  }
}

PrototypeMemory load_memory(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read memory: " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path.string() + ": empty memory file");
  std::istringstream hs(header);
  std::size_t k = 0, d = 0;
  std::string source;
  if (!(hs >> k >> d >> source)) {
    throw ParseError(path.string() + ":1: malformed header '" + header + "'");
  }
  PrototypeMemory memory;
  memory.source = memory_source_from_string(source);
  memory.centroids = Matrix(k, d);
  std::string line;
  for (std::size_t r = 0; r < k; ++r) {
    if (!std::getline(in, line)) {
      throw ParseError(path.string() + ": truncated at class " + std::to_string(r));
    }
    std::size_t begin = 0;
    std::size_t field = 0;
    while (begin <= line.size()) {
      std::size_t end = line.find(',', begin);
      if (end == std::string::npos) end = line.size();
      const std::string token = line.substr(begin, end - begin);
      if (field == 0) {
        memory.glosses.push_back(token);
      } else {
        if (field > d) {
          throw ParseError(path.string() + ":" + std::to_string(r + 2) +
                           ": too many values");
        }
        memory.centroids.at(r, field - 1) = parse_double(token);
      }
      ++field;
      begin = end + 1;
    }
    if (field != d + 1) {
      throw ParseError(path.string() + ":" + std::to_string(r + 2) + ": expected " +
                       std::to_string(d) + " values");
    }
  }
  return memory;
}

}  // namespace signxfer

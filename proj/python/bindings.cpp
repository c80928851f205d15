// Python surface over the pipeline stages, models, and metrics.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "signxfer/errors.hpp"
#include "signxfer/eval.hpp"
#include "signxfer/pipeline.hpp"
#include "signxfer/rng.hpp"
#include "signxfer/training.hpp"

namespace py = pybind11;
using namespace signxfer;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() == 1) {
    Matrix m(1, static_cast<std::size_t>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), m.values().begin());
    return m;
  }
  if (a.ndim() != 2) {
    throw ShapeError("expected a 1-d or 2-d array, got ndim=" + std::to_string(a.ndim()));
  }
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
  return m;
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

using NpArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Span to_span(const py::tuple& t) {
  Span s;
  s.cls = t[0].cast<int>();
  s.start = t[1].cast<int>();
  s.end = t[2].cast<int>();
  if (t.size() > 3) s.score = t[3].cast<double>();
  return s;
}

class ClassifierHandle {
 public:
  explicit ClassifierHandle(const std::string& path) : model_(load_classifier(path)) {}

  py::array_t<double> probabilities(const NpArray& frames) const {
    return to_array(classifier_probabilities(model_, to_matrix(frames)));
  }
  py::array_t<double> logits(const NpArray& frames) const {
    return to_array(classifier_logits(model_, to_matrix(frames)));
  }
  py::array_t<double> embed(const NpArray& frames) const {
    return to_array(clip_embedding(to_matrix(frames), model_.encoder));
  }

 private:
  SignClassifier model_;
};

class FullModelHandle {
 public:
  FullModelHandle(const std::string& checkpoint, const std::string& memory_path)
      : model_(load_full_model(checkpoint)), memory_(load_memory(memory_path)) {}

  py::array_t<double> logits(const NpArray& frames) const {
    return to_array(forward_full(model_, memory_, to_matrix(frames)).logits);
  }
  py::array_t<double> probabilities(const NpArray& frames) const {
    return to_array(full_probabilities(model_, memory_, to_matrix(frames)));
  }
  py::dict trace(const NpArray& frames) const {
    const ForwardTrace t = forward_full(model_, memory_, to_matrix(frames));
    py::dict out;
    out["correlation"] = to_array(t.correlation);
    out["reweighted"] = to_array(t.reweighted);
    out["residual"] = to_array(t.residual);
    out["descriptor"] = to_array(t.descriptor);
    out["similarity"] = to_array(t.similarity);
    out["attention"] = to_array(t.attention);
    out["attended"] = to_array(t.attended);
    out["fused"] = to_array(t.fused);
    out["logits"] = to_array(t.logits);
    return out;
  }
  py::tuple signature(const NpArray& frames) const {
    const ForwardTrace t = forward_full(model_, memory_, to_matrix(frames));
    const SignSignature sig = sign_signature(t, model_.encoder.downsample);
    return py::make_tuple(sig.feature_index, sig.raw_start, sig.raw_end);
  }
  py::array_t<double> memory_matrix() const { return to_array(memory_.centroids); }

 private:
  FullModel model_;
  PrototypeMemory memory_;
};

int run_command(const std::string& command, const std::string& config,
                const std::vector<std::string>& overrides, const std::string& model,
                const std::string& split, std::size_t limit, bool with_news) {
  PipelineConfig cfg = load_pipeline_config(config, overrides);
  Pipeline pipeline(cfg);
  if (command == "gen") {
    pipeline.gen();
  } else if (command == "train-base") {
    pipeline.train_base_stage(with_news);
  } else if (command == "extract") {
    pipeline.extract_stage();
  } else if (command == "align") {
    pipeline.align_stage();
  } else if (command == "build-memory") {
    pipeline.build_memory_stage();
  } else if (command == "train-full") {
    pipeline.train_full_stage();
  } else if (command == "eval") {
    pipeline.eval_stage(model.empty() ? "full" : model);
  } else if (command == "localize") {
    pipeline.localize_stage(model.empty() ? "full" : model);
  } else if (command == "dump-attention") {
    pipeline.dump_attention_stage(split, limit);
  } else if (command == "dump-embeddings") {
    pipeline.dump_embeddings_stage(model.empty() ? "aligned" : model);
  } else if (command == "pipeline") {
    pipeline.run_all();
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return 0;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cross-domain sign recognition: pipeline stages, models, metrics";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<ShapeError>(m, "ShapeError");
  py::register_exception<NumericalError>(m, "NumericalError");

  m.def("run", &run_command, py::arg("command"), py::arg("config") = "",
        py::arg("overrides") = std::vector<std::string>{}, py::arg("model") = "",
        py::arg("split") = "test", py::arg("limit") = 0, py::arg("with_news") = false,
        "run one pipeline stage (gen, train-base, extract, align, build-memory, "
        "train-full, eval, localize, dump-attention, dump-embeddings, pipeline)");
  m.def("default_config", &default_config_text, "default configuration as JSON text");

  m.def("matmul",
        [](const NpArray& a, const NpArray& b) {
          return to_array(matmul(to_matrix(a), to_matrix(b)));
        });
  m.def("row_softmax", [](const NpArray& a) { return to_array(row_softmax(to_matrix(a))); });
  m.def("temporal_maxpool",
        [](const NpArray& a) { return to_array(temporal_maxpool(to_matrix(a))); });
  m.def("bce_loss", [](const NpArray& p, const NpArray& y) {
    return bce_loss(to_matrix(p), to_matrix(y));
  });
  m.def("temporal_augment",
        [](const NpArray& frames, std::size_t length, std::uint64_t seed) {
          Rng rng(seed);
          return to_array(temporal_augment(to_matrix(frames), length, rng));
        },
        py::arg("frames"), py::arg("length") = 64, py::arg("seed") = 0);

  m.def("tiou", [](const py::tuple& a, const py::tuple& b) {
    return tiou(to_span(a), to_span(b));
  });
  m.def("topk_accuracy",
        [](const NpArray& logits, const std::vector<int>& labels, std::size_t k,
           const std::string& mode) {
          return topk_accuracy(to_matrix(logits), labels, k,
                               mode == "macro" ? AccuracyMode::kMacro
                                               : AccuracyMode::kMicro);
        },
        py::arg("logits"), py::arg("labels"), py::arg("k") = 1,
        py::arg("mode") = "micro");
  m.def("map_at_tiou",
        [](const std::vector<py::tuple>& detections,
           const std::vector<py::tuple>& ground_truth, const std::vector<double>& thresholds) {
          std::vector<LocalizedSpan> dets, gts;
          for (const py::tuple& t : detections) {
            dets.push_back({t[0].cast<std::string>(), to_span(
                py::make_tuple(t[1], t[2], t[3], t[4]))});
          }
          for (const py::tuple& t : ground_truth) {
            gts.push_back({t[0].cast<std::string>(), to_span(
                py::make_tuple(t[1], t[2], t[3]))});
          }
          return map_at_tiou(dets, gts, thresholds);
        },
        py::arg("detections"), py::arg("ground_truth"),
        py::arg("thresholds") = std::vector<double>{0.1, 0.3, 0.5, 0.7},
        "detections: (stream, cls, start, end, score); ground_truth: (stream, cls, start, end)");

  py::class_<ClassifierHandle>(m, "Classifier")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def("probabilities", &ClassifierHandle::probabilities)
      .def("logits", &ClassifierHandle::logits)
      .def("embed", &ClassifierHandle::embed);

  py::class_<FullModelHandle>(m, "FullModel")
      .def(py::init<const std::string&, const std::string&>(), py::arg("checkpoint"),
           py::arg("memory"))
      .def("logits", &FullModelHandle::logits)
      .def("probabilities", &FullModelHandle::probabilities)
      .def("trace", &FullModelHandle::trace)
      .def("signature", &FullModelHandle::signature)
      .def("memory_matrix", &FullModelHandle::memory_matrix);
}

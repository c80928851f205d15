#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path out_file = workdir / "cmd-output.txt";
  std::ostringstream cmd;
  cmd << "cd " << workdir << " && " << SIGNXFER_CLI_PATH << " " << args << " > "
      << out_file << " 2>&1";
  const int status = std::system(cmd.str().c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir =
      fs::temp_directory_path() / ("signxfer-cli-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// tiny corpus so the full pipeline runs in seconds
const char* kTinyConfig = R"({
  "seed": 5,
  "synth": {
    "classes": 4,
    "train_per_class": 4,
    "val_per_class": 1,
    "test_per_class": 2,
    "streams": 8,
    "input_dim": 6,
    "stream_length_min": 60,
    "stream_length_max": 80,
    "signs_per_stream_min": 2,
    "signs_per_stream_max": 3,
    "iso_noise": 0.15,
    "domain_shift_strength": 0.15
  },
  "model": {"feature_dim": 12, "descriptor_dim": 6, "attention_dim": 3},
  "extraction": {"epsilon": 0.2},
  "train_base": {"epochs": 6},
  "train_joint": {"epochs": 6},
  "train_full": {"epochs": 6},
  "memory": {"fallback_to_isolated": true}
})";

void write_tiny_config(const fs::path& dir) {
  std::ofstream out(dir / "config.json");
  out << kTinyConfig;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help lists the spec defaults per subcommand") {
  const fs::path dir = fresh_dir("help");

  RunResult top = run_cli("--help", dir);
  CHECK(top.exit_code == 0);
  for (const char* name :
       {"gen", "train-base", "extract", "align", "build-memory", "train-full", "eval",
        "localize", "dump-attention", "dump-embeddings", "pipeline"}) {
    CHECK(top.output.find(name) != std::string::npos);
  }

  RunResult extract_help = run_cli("extract --help", dir);
  CHECK(extract_help.output.find("9..16") != std::string::npos);
  CHECK(extract_help.output.find("0.3") != std::string::npos);

  RunResult train_help = run_cli("train-base --help", dir);
  CHECK(train_help.output.find("0.001") != std::string::npos);
  CHECK(train_help.output.find("1e-07") != std::string::npos);
  CHECK(train_help.output.find("64") != std::string::npos);

  RunResult localize_help = run_cli("localize --help", dir);
  CHECK(localize_help.output.find("0.2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("eval without a checkpoint exits 2 and names the path") {
  const fs::path dir = fresh_dir("nockpt");
  write_tiny_config(dir);
  RunResult gen = run_cli("gen -c config.json", dir);
  REQUIRE(gen.exit_code == 0);
  RunResult eval = run_cli("eval -c config.json --model full", dir);
  CHECK(eval.exit_code == 2);
  CHECK(eval.output.find("full.ckpt") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unknown config keys are rejected with exit 1") {
  const fs::path dir = fresh_dir("badkey");
  {
    std::ofstream out(dir / "config.json");
    out << R"({"seed": 1, "sinth": {"classes": 3}})";
  }
  RunResult result = run_cli("gen -c config.json", dir);
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("sinth") != std::string::npos);

  RunResult bad_override = run_cli("gen --set extraction.epsilonn=0.4", dir);
  CHECK(bad_override.exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("overrides beat the config file") {
  const fs::path dir = fresh_dir("override");
  write_tiny_config(dir);
  RunResult result =
      run_cli("gen -c config.json --set synth.classes=3 --set dataset_dir=alt", dir);
  REQUIRE(result.exit_code == 0);
  std::ifstream vocab(dir / "alt" / "vocab.txt");
  std::string line;
  int count = 0;
  while (std::getline(vocab, line)) {
    if (!line.empty()) ++count;
  }
  CHECK(count == 3);
  fs::remove_all(dir);
}

TEST_CASE("the full pipeline produces every artifact and is rerun-identical") {
  const fs::path dir = fresh_dir("pipeline");
  write_tiny_config(dir);

  RunResult first = run_cli("pipeline -c config.json", dir);
  CAPTURE(first.output);
  REQUIRE(first.exit_code == 0);

  for (const char* artifact :
       {"out/base.ckpt", "out/base_news.ckpt", "out/aligned.ckpt", "out/full.ckpt",
        "out/candidates.tsv", "out/memory.txt", "out/eval_full.tsv", "out/eval_base.tsv",
        "out/eval_base-news.tsv", "out/detections_full.tsv", "out/detections_base.tsv",
        "out/localization_full.tsv", "out/embeddings_base.tsv",
        "out/embeddings_aligned.tsv", "out/logs/train_base.tsv",
        "out/logs/train_full.tsv", "out/manifests/gen.json",
        "out/manifests/train-full.json", "out/windows/index.tsv"}) {
    CAPTURE(artifact);
    CHECK(fs::exists(dir / artifact));
  }

  // eval report parses and holds metrics in [0, 100]
  std::ifstream report(dir / "out/eval_full.tsv");
  std::string line;
  int metric_lines = 0;
  while (std::getline(report, line)) {
    if (line.rfind("micro_", 0) == 0 || line.rfind("macro_", 0) == 0) {
      const double value = std::stod(line.substr(line.find('\t') + 1));
      CHECK(value >= 0.0);
      CHECK(value <= 100.0);
      ++metric_lines;
    }
  }
  CHECK(metric_lines == 4);

  // attention dumps exist for test clips
  bool any_attention = false;
  for (const auto& entry : fs::directory_iterator(dir / "out/attention")) {
    if (entry.path().extension() == ".csv") any_attention = true;
  }
  CHECK(any_attention);

  const std::string manifest_before = read_file(dir / "out/manifests/train-full.json");
  const std::string eval_before = read_file(dir / "out/eval_full.tsv");
  const std::string memory_before = read_file(dir / "out/memory.txt");

  RunResult second = run_cli("pipeline -c config.json", dir);
  REQUIRE(second.exit_code == 0);
  CHECK(read_file(dir / "out/manifests/train-full.json") == manifest_before);
  CHECK(read_file(dir / "out/eval_full.tsv") == eval_before);
  CHECK(read_file(dir / "out/memory.txt") == memory_before);
  fs::remove_all(dir);
}

TEST_CASE("stages fail cleanly when upstream artifacts are missing") {
  const fs::path dir = fresh_dir("missing");
  write_tiny_config(dir);
  RunResult extract = run_cli("extract -c config.json", dir);
  CHECK(extract.exit_code == 2);

  RunResult gen = run_cli("gen -c config.json", dir);
  REQUIRE(gen.exit_code == 0);
  RunResult full = run_cli("train-full -c config.json", dir);
  CHECK(full.exit_code == 2);
  CHECK(full.output.find("memory.txt") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("print-config emits the defaults") {
  const fs::path dir = fresh_dir("printcfg");
  RunResult result = run_cli("print-config", dir);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"epsilon\": 0.3") != std::string::npos);
  CHECK(result.output.find("\"window_min\": 9") != std::string::npos);
  CHECK(result.output.find("\"window_max\": 16") != std::string::npos);
  CHECK(result.output.find("\"probability_gate\": 0.2") != std::string::npos);
  fs::remove_all(dir);
}

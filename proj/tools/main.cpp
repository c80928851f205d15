// Pipeline driver: every stage of the cross-domain sign-recognition workflow
// as a subcommand over one JSON config.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "signxfer/errors.hpp"
#include "signxfer/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON config file");
  cmd->add_option("--set", args.overrides,
                  "dotted-path override, e.g. --set extraction.epsilon=0.3 "
                  "(precedence: override > file > default)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-domain sign recognition pipeline"};
  app.require_subcommand(1);

  CommonArgs args;

  CLI::App* gen = app.add_subcommand("gen", "generate the synthetic two-domain dataset");
  add_common(gen, args);

  CLI::App* train_base = app.add_subcommand(
      "train-base", "train the base classifier on isolated signs "
                    "(defaults: epochs 40, batch 8, lr 0.001, weight decay 1e-07, "
                    "augmentation length 64)");
  add_common(train_base, args);
  bool with_news = false;
  train_base->add_flag("--with-news", with_news,
                       "add extracted news windows directly to the training set");

  CLI::App* extract = app.add_subcommand(
      "extract", "mine news signs with sliding windows "
                 "(defaults: sizes 9..16, stride 1, threshold epsilon 0.3)");
  add_common(extract, args);

  CLI::App* align = app.add_subcommand(
      "align", "jointly train the aligned classifier on both domains "
               "(defaults: epochs 40, batch 8, lr 0.001, weight decay 1e-07)");
  add_common(align, args);

  CLI::App* build_memory = app.add_subcommand(
      "build-memory", "store per-class centroids of extracted news signs "
                      "(default source: news-aligned)");
  add_common(build_memory, args);

  CLI::App* train_full = app.add_subcommand(
      "train-full", "train the memory-augmented model end to end "
                    "(defaults: epochs 40, batch 8, lr 0.001, weight decay 1e-07, "
                    "augmentation length 64)");
  add_common(train_full, args);

  CLI::App* eval = app.add_subcommand("eval", "recognition metrics on the test split");
  add_common(eval, args);
  std::string eval_model = "full";
  eval->add_option("--model", eval_model, "full | base | base-news")
      ->capture_default_str();

  CLI::App* localize = app.add_subcommand(
      "localize", "temporal localization over news streams "
                  "(defaults: windows 9..16, probability gate 0.2, NMS tIoU 0.5, "
                  "mAP thresholds 0.1 0.3 0.5 0.7)");
  add_common(localize, args);
  std::string localize_model = "full";
  localize->add_option("--model", localize_model, "full | base")->capture_default_str();

  CLI::App* dump_attention = app.add_subcommand(
      "dump-attention", "write per-clip attention and correlation traces");
  add_common(dump_attention, args);
  std::string attention_split = "test";
  std::size_t attention_limit = 0;
  dump_attention->add_option("--split", attention_split, "train | val | test")
      ->capture_default_str();
  dump_attention->add_option("--limit", attention_limit, "max clips (0 = all)")
      ->capture_default_str();

  CLI::App* dump_embeddings = app.add_subcommand(
      "dump-embeddings", "write pooled clip embeddings of both domains for "
                         "external projection (t-SNE and friends)");
  add_common(dump_embeddings, args);
  std::string embed_model = "aligned";
  dump_embeddings->add_option("--model", embed_model, "base | aligned")
      ->capture_default_str();

  CLI::App* pipeline_cmd = app.add_subcommand("pipeline", "run every stage in order");
  add_common(pipeline_cmd, args);

  CLI::App* print_config =
      app.add_subcommand("print-config", "print the default config as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_config->parsed()) {
      std::cout << signxfer::default_config_text();
      return kExitOk;
    }
    signxfer::PipelineConfig cfg =
        signxfer::load_pipeline_config(args.config_path, args.overrides);
    signxfer::Pipeline pipeline(cfg);

    if (gen->parsed()) {
      pipeline.gen();
    } else if (train_base->parsed()) {
      pipeline.train_base_stage(with_news);
    } else if (extract->parsed()) {
      pipeline.extract_stage();
    } else if (align->parsed()) {
      pipeline.align_stage();
    } else if (build_memory->parsed()) {
      pipeline.build_memory_stage();
    } else if (train_full->parsed()) {
      pipeline.train_full_stage();
    } else if (eval->parsed()) {
      pipeline.eval_stage(eval_model);
    } else if (localize->parsed()) {
      pipeline.localize_stage(localize_model);
    } else if (dump_attention->parsed()) {
      pipeline.dump_attention_stage(attention_split, attention_limit);
    } else if (dump_embeddings->parsed()) {
      pipeline.dump_embeddings_stage(embed_model);
    } else if (pipeline_cmd->parsed()) {
      pipeline.run_all();
    }
    return kExitOk;
  } catch (const signxfer::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const signxfer::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

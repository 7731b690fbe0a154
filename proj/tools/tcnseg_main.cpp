#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tcnseg/checkpoint.hpp"
#include "tcnseg/error.hpp"
#include "tcnseg/eval.hpp"
#include "tcnseg/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw tcnseg::DataError("cannot open file: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

int run_train(const std::string& config_path, bool seed_set, std::uint64_t seed) {
  tcnseg::TrainConfig config = tcnseg::load_config(config_path);
  if (seed_set) config.seed = seed;
  tcnseg::train(config, std::cout, &std::cerr);
  return kExitOk;
}

int run_segment(const std::string& model_path, const std::string& input_path,
                const std::string& output_path) {
  const tcnseg::Checkpoint ckpt = tcnseg::load_checkpoint(model_path);
  const std::vector<std::string> lines = read_lines(input_path);
  const std::vector<std::string> segmented =
      tcnseg::segment_lines(ckpt.params, ckpt.config.conv, ckpt.vocab, lines);
  std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw tcnseg::DataError("cannot open output file: " + output_path);
  }
  for (const std::string& line : segmented) out << line << "\n";
  return kExitOk;
}

int run_eval(const std::string& gold_path, const std::string& pred_path) {
  const tcnseg::EvalReport report =
      tcnseg::f1_score(read_lines(gold_path), read_lines(pred_path));
  std::cout << tcnseg::human_summary(report) << "\n";
  std::cout << tcnseg::machine_line(report) << "\n";
  return kExitOk;
}

int run_inspect(const std::string& model_path) {
  const tcnseg::Checkpoint ckpt = tcnseg::load_checkpoint(model_path);
  std::cout << "format version: " << int(tcnseg::kCheckpointVersion) << "\n";
  std::cout << "config:\n";
  std::istringstream config_lines(tcnseg::serialize_config(ckpt.config));
  std::string line;
  while (std::getline(config_lines, line)) std::cout << "  " << line << "\n";
  std::cout << "vocabulary size: " << ckpt.vocab.size() << "\n";
  std::cout << "tensors:\n";
  std::size_t total = 0;
  for (const auto& [name, tensor] : tcnseg::named_tensors(ckpt.params)) {
    std::cout << "  " << name << " " << tcnseg::shape_string(*tensor) << " ("
              << tensor->size() << ")\n";
    total += tensor->size();
  }
  std::cout << "total parameters: " << total << "\n";
  std::cout << "adam step: " << ckpt.adam.step << "\n";
  std::cout << "epoch: " << ckpt.epoch << "\n";
  if (ckpt.has_best_dev_f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", ckpt.best_dev_f);
    std::cout << "best dev F: " << buf << "\n";
  } else {
    std::cout << "best dev F: none\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-convolutional word segmenter with CRF training"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  CLI::App* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config_path, "Path to key = value config file")->required();
  CLI::Option* seed_opt = train->add_option("--seed", seed, "Override the config seed");

  std::string model_path, input_path, output_path;
  CLI::App* segment = app.add_subcommand("segment", "Segment text with a trained model");
  segment->add_option("--model", model_path, "Checkpoint file")->required();
  segment->add_option("--input", input_path, "Input text, one sentence per line")->required();
  segment->add_option("--output", output_path, "Output file for segmented text")->required();

  std::string gold_path, pred_path;
  CLI::App* eval = app.add_subcommand("eval", "Score a segmentation against gold");
  eval->add_option("--gold", gold_path, "Gold segmented file")->required();
  eval->add_option("--pred", pred_path, "Predicted segmented file")->required();

  std::string inspect_model;
  CLI::App* inspect = app.add_subcommand("inspect", "Describe a checkpoint");
  inspect->add_option("--model", inspect_model, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return run_train(config_path, seed_opt->count() > 0, seed);
    if (*segment) return run_segment(model_path, input_path, output_path);
    if (*eval) return run_eval(gold_path, pred_path);
    if (*inspect) return run_inspect(inspect_model);
  } catch (const tcnseg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const tcnseg::TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const tcnseg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cw/dataset.h"
#include "cw/harness.h"
#include "cw/report.h"

namespace fs = std::filesystem;

namespace {

cw::Dataset data_for(const fs::path& dir, std::uint64_t seed) {
  if (fs::exists(dir / "classes.txt")) return cw::load_dataset(dir);
  cw::Dataset data = cw::make_prototype_dataset(cw::PrototypeSpec{}, seed);
  cw::save_dataset(dir, data);
  return data;
}

void print_matrix(const cw::ResultTable& table) {
  const auto cells = cw::summarize(table);
  std::map<std::string, std::vector<std::string>> by_method;
  for (const cw::ResultRow& r : table.rows) {
    auto& keys = by_method[cw::method_name(r.method)];
    const std::string key = cw::cell_key(r.sub_model, r.target_model, r.method);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      keys.push_back(key);
    }
  }
  std::printf("%-34s %6s %8s %9s %9s %8s\n", "cell", "n", "success",
              "median", "average", "queries");
  for (const auto& [method, keys] : by_method) {
    for (const std::string& k : keys) {
      const cw::CellStats& s = cells.at(k);
      std::printf("%-34s %6zu %8.3f %9.4f %9.4f %8.1f\n", k.c_str(), s.count,
                  s.success_rate(), s.median, s.average, s.mean_queries);
    }
  }
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("no sweep values given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box transfer attacks against a small model zoo"};
  app.require_subcommand(1);

  fs::path zoo_out;
  fs::path zoo_data;
  std::uint64_t zoo_seed = 1;
  int epochs = cw::TrainOptions{}.epochs;
  bool adversarial = false;
  auto* train_cmd = app.add_subcommand("train-zoo", "train the model zoo");
  train_cmd->add_option("--out", zoo_out, "zoo directory")->required();
  train_cmd->add_option("--seed", zoo_seed, "training and dataset seed");
  train_cmd->add_option("--data", zoo_data,
                        "dataset directory (generated if missing; default "
                        "OUT/data)");
  train_cmd->add_option("--epochs", epochs, "training epochs");
  train_cmd->add_flag("--adversarial", adversarial,
                      "also train FGSM-hardened copies");

  fs::path config_path;
  fs::path zoo_dir;
  fs::path data_dir;
  fs::path out_dir;
  int threads = 0;
  auto* attack_cmd = app.add_subcommand("attack", "run the attack matrix");
  attack_cmd->add_option("--config", config_path, "INI config file");
  attack_cmd->add_option("--zoo", zoo_dir, "zoo directory")->required();
  attack_cmd->add_option("--data", data_dir, "dataset directory")->required();
  attack_cmd->add_option("--out", out_dir, "report directory")->required();
  attack_cmd->add_option("--threads", threads, "worker count (default CW_THREADS)");

  std::string param;
  std::string values;
  std::string method = "curlswhey";
  std::string sub = "mlp";
  std::string target = "conv";
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one parameter");
  sweep_cmd->add_option("--param", param, "T, s, bs, T0, T1, T2, delta or eps0")
      ->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")
      ->required();
  sweep_cmd->add_option("--config", config_path, "INI config file");
  sweep_cmd->add_option("--zoo", zoo_dir, "zoo directory")->required();
  sweep_cmd->add_option("--data", data_dir, "dataset directory")->required();
  sweep_cmd->add_option("--out", out_dir, "report directory")->required();
  sweep_cmd->add_option("--method", method, "attack method");
  sweep_cmd->add_option("--sub", sub, "substitute model id");
  sweep_cmd->add_option("--target", target, "target model spec");
  sweep_cmd->add_option("--threads", threads, "worker count");

  fs::path in_dir;
  auto* report_cmd = app.add_subcommand("report", "summarize a report");
  report_cmd->add_option("--in", in_dir, "report directory")->required();
  report_cmd->add_option("--zoo", zoo_dir, "zoo directory, to re-verify");
  report_cmd->add_option("--data", data_dir, "dataset directory, to re-verify");

  app.add_subcommand("config", "print the default config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      if (zoo_data.empty()) zoo_data = zoo_out / "data";
      const cw::Dataset data = data_for(zoo_data, zoo_seed);
      cw::ZooOptions opts;
      opts.seed = zoo_seed;
      opts.training.epochs = epochs;
      opts.adversarial = adversarial;
      const cw::Zoo zoo = cw::train_zoo(data, opts);
      cw::save_zoo(zoo_out, zoo);
      for (const cw::ZooEntry& e : zoo.entries()) {
        std::printf("%-12s test accuracy %.4f\n", e.id.c_str(),
                    e.test_accuracy);
      }
      return 0;
    }
    if (app.got_subcommand("config")) {
      std::cout << cw::format_config(cw::AttackConfig{});
      return 0;
    }
    if (*report_cmd) {
      const cw::ResultTable table = cw::read_results(in_dir / "results.csv");
      print_matrix(table);
      if (!zoo_dir.empty() && !data_dir.empty()) {
        const cw::VerifyReport rep = cw::verify_report(
            in_dir, cw::load_zoo(zoo_dir), cw::load_dataset(data_dir));
        std::printf("re-verified %zu stored adversarials, %zu mismatched\n",
                    rep.checked, rep.mismatched);
        for (const std::string& p : rep.problems) {
          std::fprintf(stderr, "  %s\n", p.c_str());
        }
        return rep.mismatched ? 1 : 0;
      }
      return 0;
    }

    const cw::AttackConfig cfg =
        config_path.empty() ? cw::AttackConfig{} : cw::load_config(config_path);
    const cw::Zoo zoo = cw::load_zoo(zoo_dir);
    const cw::Dataset data = cw::load_dataset(data_dir);
    if (*attack_cmd) {
      const cw::ResultTable table = cw::run_matrix(zoo, data, cfg, threads);
      cw::emit_report(table, out_dir);
      print_matrix(table);
      return 0;
    }
    if (*sweep_cmd) {
      const cw::SweepResult s =
          cw::run_sweep(zoo, data, cfg, param, parse_values(values),
                        cw::parse_method(method), sub, target, threads);
      cw::emit_report(cw::ResultTable{}, out_dir, {s});
      for (const cw::SweepPoint& p : s.points) {
        std::printf("%s=%-8g median %.4f average %.4f success %.3f\n",
                    param.c_str(), p.value, p.stats.median, p.stats.average,
                    p.stats.success_rate());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

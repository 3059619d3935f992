// Copyright 2026 The BBC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "bbc/attack.hpp"
#include "bbc/checkpoint.hpp"
#include "bbc/csv.hpp"
#include "bbc/experiment.hpp"

namespace {

using namespace bbc;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

Config load_config(const CommonArgs& args) {
  Config cfg = args.config_path.empty() ? Config()
                                        : Config::parse_file(args.config_path);
  for (const std::string& o : args.overrides) cfg.set_entry(o);
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path,
                  "experiment config file (key = value sections)");
  cmd->add_option("--set", args.overrides,
                  "override a config entry, section.key=value");
}

Dataset resolve_dataset(const ExperimentSpec& spec,
                        const std::string& data_file) {
  if (!data_file.empty()) return load_dataset(data_file);
  return spec_dataset(spec);
}

int cmd_gen_data(const ExperimentSpec& spec, const std::string& out) {
  Dataset ds = spec_dataset(spec);
  save_dataset(ds, out);
  if (ds.skeleton) {
    ds.skeleton->save(out + ".skeleton");
  }
  std::cout << "wrote " << out << " (" << ds.data.size() << " samples, "
            << ds.data.num_classes << " classes)\n";
  return 0;
}

int cmd_train_victim(const ExperimentSpec& spec, const std::string& data_file,
                     const std::string& out) {
  Dataset ds = resolve_dataset(spec, data_file);
  VictimClassifier victim = freeze(train_spec_victim(spec, ds.data));
  save_victim(victim, out);
  BbcEnsemble probe = make_ensemble(victim, 1, spec.seed);
  std::cout << "victim clean accuracy " << bma_accuracy(probe, ds.data)
            << ", checksum " << victim.checksum() << ", wrote " << out << "\n";
  return 0;
}

int cmd_bbc_train(const ExperimentSpec& spec, const std::string& data_file,
                  const std::string& victim_path, const std::string& out) {
  Dataset ds = resolve_dataset(spec, data_file);
  VictimClassifier victim = load_victim(victim_path);
  victim.freeze();
  BbcEnsemble ens =
      make_ensemble(victim, spec.n_heads, spec.bbc.seed, spec.skip_input);
  DistanceFn distance = build_distance(spec, ds);
  BbcTrainConfig cfg = spec.bbc;
  cfg.sgld_data.box = ds.data.box;
  cfg.sgld_data.clip_to_box = true;
  cfg.sgld_adv.box = ds.data.box;
  train(ens, ds.data, cfg, distance);
  save_ensemble(ens, out);
  std::cout << "bbc clean accuracy " << bma_accuracy(ens, ds.data)
            << ", victim checksum " << ens.victim.checksum() << ", wrote "
            << out << "\n";
  return 0;
}

int cmd_attack(const ExperimentSpec& spec, const std::string& data_file,
               const std::string& ensemble_path, const std::string& out_dir) {
  Dataset ds = resolve_dataset(spec, data_file);
  BbcEnsemble ens = load_ensemble(ensemble_path);
  if (spec.threats.empty()) {
    throw ConfigError("no [attack.*] sections configured");
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/attacks.csv");
  if (!out) throw IoError("cannot write attacks.csv");
  out << "sample_id,attack,norm,epsilon,iterations,success,queries,l2_dist,"
         "linf_dist\n";
  for (const auto& threat : spec.threats) {
    ThreatModel tm = threat.tm;
    tm.box = ds.data.box;
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < ds.data.size(); ++i) {
      ThreatModel per = tm;
      per.seed = stream_seed(tm.seed, "attack-sample",
                             static_cast<std::uint64_t>(i));
      AttackResult r =
          run_attack(threat.kind, ens, ds.data.sample(i),
                     ds.data.labels[static_cast<std::size_t>(i)], per);
      if (!r.success) ++correct;
      out << i << "," << threat.name << "," << to_string(tm.norm) << ","
          << format_double(tm.epsilon) << "," << tm.iterations << ","
          << (r.success ? 1 : 0) << "," << r.queries << ","
          << format_double(r.l2_dist) << "," << format_double(r.linf_dist)
          << "\n";
    }
    std::cout << threat.name << " robust accuracy "
              << static_cast<double>(correct) /
                     static_cast<double>(ds.data.size())
              << "\n";
  }
  return 0;
}

int cmd_evaluate(const ExperimentSpec& spec) {
  ExperimentReport report = run_experiment(spec);
  for (const auto& [name, value] : report.metrics) {
    std::cout << name << " = " << value << "\n";
  }
  std::cout << "reports in " << spec.output_dir << "\n";
  return 0;
}

int cmd_detect(const ExperimentSpec& spec, const std::string& data_file,
               const std::string& ensemble_path, const std::string& out_dir) {
  Dataset ds = resolve_dataset(spec, data_file);
  BbcEnsemble ens = load_ensemble(ensemble_path);
  DetectionReport report = run_detection(spec, ens, ds, out_dir);
  std::cout << "tpr " << report.metrics.tpr << ", fpr " << report.metrics.fpr
            << ", auroc " << report.metrics.auroc << "\n";
  return 0;
}

int cmd_grad_stats(const ExperimentSpec& spec, const std::string& data_file,
                   const std::string& ensemble_path, const std::string& out) {
  Dataset ds = resolve_dataset(spec, data_file);
  BbcEnsemble ens = load_ensemble(ensemble_path);
  write_gradstats(spec, ens, ds, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian boundary correction: a post-train black-box defense"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string out = "out";
  std::string data_file, victim_path, ensemble_path;

  auto* gen = app.add_subcommand("gen-data", "generate a toy dataset file");
  add_common(gen, args);
  gen->add_option("-o,--out", out, "output dataset file")->required();

  auto* tv = app.add_subcommand("train-victim", "train and freeze a victim");
  add_common(tv, args);
  tv->add_option("--data", data_file, "dataset file (generated if omitted)");
  tv->add_option("-o,--out", out, "output checkpoint")->required();
  std::string mode;
  tv->add_option("--mode", mode, "standard | jem");

  auto* bt = app.add_subcommand("bbc-train", "train the appended heads");
  add_common(bt, args);
  bt->add_option("--data", data_file, "dataset file (generated if omitted)");
  bt->add_option("--victim", victim_path, "victim checkpoint")->required();
  bt->add_option("-o,--out", out, "output ensemble checkpoint")->required();

  auto* at = app.add_subcommand("attack", "run configured attacks");
  add_common(at, args);
  at->add_option("--data", data_file, "dataset file (generated if omitted)");
  at->add_option("--ensemble", ensemble_path, "ensemble checkpoint")
      ->required();
  at->add_option("-o,--out-dir", out, "report directory");

  auto* ev = app.add_subcommand("evaluate", "full pipeline with reports");
  add_common(ev, args);

  auto* de = app.add_subcommand("detect", "noise-disagreement detection sweep");
  add_common(de, args);
  de->add_option("--data", data_file, "dataset file (generated if omitted)");
  de->add_option("--ensemble", ensemble_path, "ensemble checkpoint")
      ->required();
  de->add_option("-o,--out-dir", out, "report directory");

  auto* gs = app.add_subcommand("grad-stats", "expected-gradient percentiles");
  add_common(gs, args);
  gs->add_option("--data", data_file, "dataset file (generated if omitted)");
  gs->add_option("--ensemble", ensemble_path, "ensemble checkpoint")
      ->required();
  gs->add_option("-o,--out", out, "output csv path");

  try {
    app.parse(argc, argv);
    Config cfg = load_config(args);
    if (tv->parsed() && !mode.empty()) cfg.set("victim", "mode", mode);
    bbc::ExperimentSpec spec = bbc::load_experiment_spec(cfg);
    if (gen->parsed()) return cmd_gen_data(spec, out);
    if (tv->parsed()) return cmd_train_victim(spec, data_file, out);
    if (bt->parsed()) return cmd_bbc_train(spec, data_file, victim_path, out);
    if (at->parsed()) return cmd_attack(spec, data_file, ensemble_path, out);
    if (ev->parsed()) return cmd_evaluate(spec);
    if (de->parsed()) return cmd_detect(spec, data_file, ensemble_path, out);
    if (gs->parsed()) return cmd_grad_stats(spec, data_file, ensemble_path, out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const bbc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const bbc::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

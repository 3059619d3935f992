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

#include "bbc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "bbc/attack.hpp"
#include "bbc/csv.hpp"

namespace bbc {

namespace fs = std::filesystem;

Dataset spec_dataset(const ExperimentSpec& spec) {
  if (!spec.dataset_file.empty()) return load_dataset(spec.dataset_file);
  return gen_data(spec.dataset_kind, spec.dataset_params, spec.dataset_seed);
}

std::vector<LayerSpec> build_arch(const std::vector<Eigen::Index>& hidden,
                                  Activation act, Eigen::Index input_dim,
                                  Eigen::Index num_classes) {
  std::vector<LayerSpec> arch;
  Eigen::Index in = input_dim;
  for (Eigen::Index h : hidden) {
    arch.push_back({in, h, act});
    in = h;
  }
  arch.push_back({in, num_classes, Activation::kIdentity});
  return arch;
}

VictimClassifier train_spec_victim(const ExperimentSpec& spec,
                                   const LabeledData& data) {
  auto arch = build_arch(spec.victim_hidden, spec.victim_activation,
                         data.dim(), data.num_classes);
  SgldConfig sampler = spec.victim_jem_sampler;
  sampler.box = data.box;
  return train_victim(data, spec.victim_train, sampler, arch);
}

DistanceFn build_distance(const ExperimentSpec& spec, const Dataset& ds) {
  switch (spec.distance) {
    case DistanceKind::kEuclideanSq:
      return DistanceFn::euclidean_sq();
    case DistanceKind::kPerceptual: {
      // Desk-scale stand-in for a pretrained perceptual net: a small
      // classifier trained on the same data, tapped at its hidden layers.
      TrainConfig cfg;
      cfg.epochs = 40;
      cfg.batch_size = 32;
      cfg.learning_rate = 0.1;
      cfg.seed = stream_seed(spec.seed, "feature-extractor");
      auto arch = build_arch({32, 32}, Activation::kTanh, ds.data.dim(),
                             ds.data.num_classes);
      VictimClassifier net = train_standard(ds.data, cfg, arch);
      FeatureExtractor fe;
      fe.arch = net.arch();
      fe.params = net.params();
      fe.tap_layers = {0, 1};
      return DistanceFn::perceptual(std::move(fe));
    }
    case DistanceKind::kMotionManifold: {
      if (!ds.skeleton) {
        throw ConfigError("motion_manifold distance needs a motion dataset");
      }
      return DistanceFn::motion_manifold(*ds.skeleton);
    }
  }
  throw ContractError("unknown distance kind");
}

namespace {

void write_lines(const std::string& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path);
  for (const std::string& l : lines) out << l << "\n";
  if (!out) throw IoError("failed writing: " + path);
}

std::vector<double> abs_grad_components(const BbcEnsemble& ens,
                                        const LabeledData& data,
                                        Eigen::Index samples) {
  std::vector<double> comp;
  const Eigen::Index n = std::min<Eigen::Index>(samples, data.size());
  comp.reserve(static_cast<std::size_t>(n * data.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    Tensor g = expected_input_gradient(ens, data.sample(i),
                                       data.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      comp.push_back(std::abs(g[j]));
    }
  }
  return comp;
}

double quantile(std::vector<double>& sorted, double q) {
  const auto n = static_cast<double>(sorted.size());
  const auto idx = static_cast<std::size_t>(
      std::min(n - 1.0, std::max(0.0, q * (n - 1.0))));
  return sorted[idx];
}

}  // namespace

void write_gradstats(const ExperimentSpec& spec, const BbcEnsemble& ens,
                     const Dataset& ds, const std::string& path) {
  std::vector<std::string> lines = {
      "n_heads,p10,p25,p50,p75,p90,frac_below_1e-10"};
  for (std::size_t k = 1; k <= ens.heads.size(); ++k) {
    BbcEnsemble sub;
    sub.victim = ens.victim;
    sub.skip_input = ens.skip_input;
    sub.heads.assign(ens.heads.begin(),
                     ens.heads.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<double> comp =
        abs_grad_components(sub, ds.data, spec.gradstat_samples);
    std::sort(comp.begin(), comp.end());
    double tiny = 0;
    for (double c : comp) {
      if (c < 1e-10) tiny += 1.0;
    }
    tiny /= static_cast<double>(comp.size());
    lines.push_back(std::to_string(k) + "," + format_double(quantile(comp, 0.10)) +
                    "," + format_double(quantile(comp, 0.25)) + "," +
                    format_double(quantile(comp, 0.50)) + "," +
                    format_double(quantile(comp, 0.75)) + "," +
                    format_double(quantile(comp, 0.90)) + "," +
                    format_double(tiny));
  }
  write_lines(path, lines);
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  const std::string dir = spec.output_dir;

  Dataset ds = spec_dataset(spec);
  VictimClassifier victim = freeze(train_spec_victim(spec, ds.data));
  save_victim(victim, dir + "/victim.bbc1");

  // one zero-initialized head reproduces the bare victim
  BbcEnsemble undefended = make_ensemble(victim, 1, spec.seed);

  BbcEnsemble ens =
      make_ensemble(victim, spec.n_heads, spec.bbc.seed, spec.skip_input);
  DistanceFn distance = build_distance(spec, ds);
  BbcTrainConfig bbc_cfg = spec.bbc;
  bbc_cfg.sgld_data.box = ds.data.box;
  bbc_cfg.sgld_data.clip_to_box = true;
  bbc_cfg.sgld_adv.box = ds.data.box;
  train(ens, ds.data, bbc_cfg, distance);
  save_ensemble(ens, dir + "/ensemble.bbc1");

  ExperimentReport report;
  std::vector<std::pair<std::string, double>> metrics;
  metrics.emplace_back("clean_accuracy_victim",
                       bma_accuracy(undefended, ds.data));
  metrics.emplace_back("clean_accuracy_bbc", bma_accuracy(ens, ds.data));

  std::vector<std::string> attack_rows = {
      "sample_id,attack,norm,epsilon,iterations,success,queries,l2_dist,"
      "linf_dist"};
  for (const auto& threat : spec.threats) {
    ThreatModel tm = threat.tm;
    tm.box = ds.data.box;
    Eigen::Index bbc_correct = 0;
    for (Eigen::Index i = 0; i < ds.data.size(); ++i) {
      ThreatModel per = tm;
      per.seed = stream_seed(tm.seed, "attack-sample",
                             static_cast<std::uint64_t>(i));
      AttackResult r =
          run_attack(threat.kind, ens, ds.data.sample(i),
                     ds.data.labels[static_cast<std::size_t>(i)], per);
      if (!r.success) ++bbc_correct;
      attack_rows.push_back(
          std::to_string(i) + "," + threat.name + "," + to_string(tm.norm) +
          "," + format_double(tm.epsilon) + "," +
          std::to_string(tm.iterations) + "," + (r.success ? "1" : "0") + "," +
          std::to_string(r.queries) + "," + format_double(r.l2_dist) + "," +
          format_double(r.linf_dist));
    }
    metrics.emplace_back("robust_" + threat.name + "_bbc",
                         static_cast<double>(bbc_correct) /
                             static_cast<double>(ds.data.size()));
    metrics.emplace_back("robust_" + threat.name + "_victim",
                         robust_accuracy(threat.kind, undefended, ds.data, tm));
  }

  std::vector<std::string> metric_rows = {"name,value"};
  for (const auto& [name, value] : metrics) {
    metric_rows.push_back(name + "," + format_double(value));
    report.metrics[name] = value;
  }
  report.metrics_path = dir + "/metrics.csv";
  report.attacks_path = dir + "/attacks.csv";
  report.gradstats_path = dir + "/gradstats.csv";
  report.manifest_path = dir + "/manifest.txt";
  write_lines(report.metrics_path, metric_rows);
  write_lines(report.attacks_path, attack_rows);
  write_gradstats(spec, ens, ds, report.gradstats_path);

  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(now).count();
  write_lines(report.manifest_path,
              {"config_hash=" + std::to_string(spec.config_hash),
               "seed=" + std::to_string(spec.seed),
               "energy=" + std::string(spec.energy ==
                                               EnergyConvention::kMeanLogit
                                           ? "mean"
                                           : "logsumexp"),
               "timestamp_unix=" + std::to_string(secs),
               "files=metrics.csv,attacks.csv,gradstats.csv,victim.bbc1,"
               "ensemble.bbc1"});
  return report;
}

DetectionReport run_detection(const ExperimentSpec& spec,
                              const BbcEnsemble& ens, const Dataset& ds,
                              const std::string& out_dir) {
  fs::create_directories(out_dir);
  if (spec.threats.empty()) {
    throw ConfigError("detection needs at least one attack section");
  }
  const auto& threat = spec.threats.front();
  ThreatModel tm = threat.tm;
  tm.box = ds.data.box;

  RngStream rng(spec.detector.seed, "detector");
  std::vector<std::string> rows = {"sample_id,is_adversarial_truth,score,flagged"};
  std::vector<double> clean_scores, adv_scores;
  for (Eigen::Index i = 0; i < ds.data.size(); ++i) {
    const int y = ds.data.labels[static_cast<std::size_t>(i)];
    Tensor x = ds.data.sample(i);
    DetectResult clean = detect(ens, x, spec.detector, rng);
    clean_scores.push_back(clean.score);
    rows.push_back(std::to_string(i) + ",0," + format_double(clean.score) +
                   "," + (clean.flagged ? "1" : "0"));

    ThreatModel per = tm;
    per.seed = stream_seed(tm.seed, "attack-sample",
                           static_cast<std::uint64_t>(i));
    AttackResult r = run_attack(threat.kind, ens, x, y, per);
    DetectResult adv = detect(ens, r.x_adv, spec.detector, rng);
    adv_scores.push_back(adv.score);
    rows.push_back(std::to_string(i) + ",1," + format_double(adv.score) + "," +
                   (adv.flagged ? "1" : "0"));
  }

  DetectionReport report;
  report.metrics =
      roc_metrics(clean_scores, adv_scores, spec.detector.threshold);
  report.report_path = out_dir + "/detect.csv";
  report.summary_path = out_dir + "/detect_metrics.csv";
  write_lines(report.report_path, rows);
  write_lines(report.summary_path,
              {"name,value", "tpr," + format_double(report.metrics.tpr),
               "fpr," + format_double(report.metrics.fpr),
               "auroc," + format_double(report.metrics.auroc)});
  return report;
}

}  // namespace bbc

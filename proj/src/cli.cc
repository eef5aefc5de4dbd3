/* Copyright 2026 The TSA Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tsa/cli.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "tsa/data.h"
#include "tsa/snapshot.h"
#include "tsa/trainer.h"

namespace tsa {
namespace {

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write '" + path + "'");
  out << text;
}

std::string Fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct RunResult {
  double mean_single = 0.0;
  double ensemble = 0.0;
  double kl = 0.0;
};

std::pair<double, double> MeanStd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

int CmdTrain(const std::string& config_path, const std::vector<std::string>& sets,
             std::string metrics_path, std::string summary_path, std::string snapshot_path,
             bool quiet, std::ostream& out) {
  const RunConfig cfg = LoadRunConfig(config_path, sets);
  if (metrics_path.empty()) metrics_path = cfg.metrics_path;
  if (summary_path.empty()) summary_path = cfg.summary_path;
  if (snapshot_path.empty()) snapshot_path = cfg.snapshot_path;
  const auto [train, test] = LoadData(cfg.data);
  TreeNetwork net = Instantiate(BuildTopology(cfg.network, cfg.tree), cfg.train.seed);
  if (!quiet) {
    out << "tree " << FormatNested(net.spec) << ": " << net.num_leaves() << " leaves, "
        << ParamCount(net) << " training parameters, " << CountParams(cfg.network)
        << " deployed\n";
  }
  const Metrics metrics = Train(net, train, test, cfg.train, [&](const EpochMetrics& m) {
    if (quiet) return;
    out << "epoch " << m.epoch << "/" << cfg.train.epochs << " lr=" << m.lr
        << " loss=" << m.train_loss << " ce=" << m.train_ce << " kl=" << m.mean_pairwise_kl
        << " ensemble_acc=" << m.ensemble_accuracy << '\n';
  });
  WriteText(metrics_path, MetricsToJsonLines(metrics));
  WriteText(summary_path, SummaryCsv(net, metrics));
  SaveSnapshot(net, cfg.train.seed, snapshot_path);
  if (!quiet) {
    out << "wrote " << metrics_path << ", " << summary_path << ", " << snapshot_path << '\n';
  }
  return kExitOk;
}

int CmdEval(const std::string& snapshot_path, const std::string& data_path,
            std::size_t branch, bool ensemble, const std::string& ensemble_mode,
            std::ostream& out) {
  Snapshot snap = LoadSnapshot(snapshot_path);
  const Dataset data = LoadDataset(data_path);
  if (data.feature_shape != snap.net.spec.base.input_shape) {
    throw DataError(DataError::Kind::kMalformedHeader,
                    "dataset features " + ShapeString(data.feature_shape) +
                        " do not match network input " +
                        ShapeString(snap.net.spec.base.input_shape));
  }
  if (ensemble) {
    EnsembleMode mode = EnsembleMode::kProbabilities;
    if (ensemble_mode == "logits") {
      mode = EnsembleMode::kLogits;
    } else if (ensemble_mode != "probs") {
      throw ConfigError("--ensemble expects probs or logits, got '" + ensemble_mode + "'");
    }
    const Evaluation ev = Evaluate(snap.net, data, mode);
    out << "ensemble (" << ensemble_mode << ", " << snap.net.num_leaves()
        << " leaves) accuracy=" << Fmt(ev.ensemble_accuracy) << '\n';
    return kExitOk;
  }
  if (branch < 1 || branch > snap.net.num_leaves()) {
    throw ConfigError("--branch must lie in 1.." + std::to_string(snap.net.num_leaves()));
  }
  Network pruned = PruneToBranch(snap.net, snap.net.leaf_order[branch - 1]);
  out << "branch " << branch << " (" << CountParams(pruned.spec)
      << " parameters) accuracy=" << Fmt(Evaluate(pruned, data)) << '\n';
  return kExitOk;
}

int CmdCompare(const std::string& config_path, const std::vector<std::string>& sets,
               const std::string& methods_csv, std::size_t seeds, std::size_t threads,
               const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = LoadRunConfig(config_path, sets);
  std::vector<std::string> names;
  {
    std::istringstream is(methods_csv);
    std::string m;
    while (std::getline(is, m, ',')) names.push_back(m);
  }
  const auto methods = MethodTopologies(cfg.network, cfg.tree, names);
  if (seeds < 1) throw ConfigError("--seeds must be at least 1");
  const auto [train, test] = LoadData(cfg.data);

  std::vector<RunResult> results(methods.size() * seeds);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> diverged{false};
  std::string divergence;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t job = next++; job < results.size(); job = next++) {
      const auto& method = methods[job / seeds];
      TrainConfig tc = cfg.train;
      tc.seed = cfg.train.seed + job % seeds;
      try {
        TreeNetwork net = Instantiate(method.spec, tc.seed);
        const Metrics m = Train(net, train, test, tc);
        const EpochMetrics& last = m.back();
        double s = 0.0;
        for (double a : last.branch_accuracy) s += a;
        results[job] = {s / static_cast<double>(last.branch_accuracy.size()),
                        last.ensemble_accuracy, last.mean_pairwise_kl};
      } catch (const DivergenceError& e) {
        std::lock_guard lock(mu);
        diverged = true;
        divergence = method.name + ": " + e.what();
      }
    }
  };
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min(threads, results.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (diverged) throw DivergenceError(divergence);

  std::ostringstream csv;
  csv << "# seeds=";
  for (std::size_t s = 0; s < seeds; ++s) csv << (s ? "," : "") << cfg.train.seed + s;
  csv << "\n# data=" << cfg.data.kind << " generator_seed=" << cfg.data.generator_seed
      << " train=" << train.size() << " test=" << test.size() << '\n';
  csv << "method,leaves,params,mean_single_acc,std_single_acc,mean_ensemble_acc,"
         "std_ensemble_acc,mean_pairwise_kl\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<double> single, ens, kl;
    for (std::size_t s = 0; s < seeds; ++s) {
      const RunResult& r = results[m * seeds + s];
      single.push_back(r.mean_single);
      ens.push_back(r.ensemble);
      kl.push_back(r.kl);
    }
    const auto [sm, ss] = MeanStd(single);
    const auto [em, es] = MeanStd(ens);
    csv << methods[m].name << ',' << LeafCount(methods[m].spec) << ','
        << ParamCount(methods[m].spec) << ',' << Fmt(sm) << ',' << Fmt(ss) << ',' << Fmt(em)
        << ',' << Fmt(es) << ',' << Fmt(MeanStd(kl).first) << '\n';
  }
  out << csv.str();
  if (!out_path.empty()) WriteText(out_path, csv.str());
  return kExitOk;
}

int CmdParams(const std::string& config_path, const std::vector<std::string>& sets,
              std::ostream& out) {
  const RunConfig cfg = LoadRunConfig(config_path, sets);
  const auto methods = MethodTopologies(cfg.network, cfg.tree,
                                        {"baseline", "one_style", "tsa", "full_dup"});
  out << "method,leaves,training_params,deployed_params\n";
  for (const auto& m : methods) {
    out << m.name << ',' << LeafCount(m.spec) << ',' << ParamCount(m.spec) << ','
        << CountParams(cfg.network) << '\n';
  }
  out << "# per-block:";
  for (std::size_t b = 0; b < cfg.network.blocks.size(); ++b) {
    out << " p" << b + 1 << '=' << CountParams(cfg.network.blocks[b]);
  }
  out << '\n';
  return kExitOk;
}

int CmdGenData(const std::string& kind, const std::string& out_path, std::size_t n,
               std::size_t classes, double noise, double turns, std::size_t dim,
               double separation, std::uint64_t seed, std::ostream& out) {
  Dataset ds;
  if (kind == "spirals") {
    ds = GenSpirals(n, classes, noise, seed, turns);
  } else if (kind == "blobs") {
    ds = GenBlobs(n, classes, dim, separation, seed);
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "' (expected spirals or blobs)");
  }
  const bool csv = out_path.size() >= 4 && out_path.substr(out_path.size() - 4) == ".csv";
  if (csv) {
    SaveCsv(ds, out_path);
  } else {
    SaveRaw(ds, out_path);
  }
  out << "wrote " << ds.size() << " samples (" << ds.num_classes << " classes) to "
      << out_path << '\n';
  return kExitOk;
}

}  // namespace

std::vector<MethodTopology> MethodTopologies(const NetworkSpec& base,
                                             const std::string& tsa_tree,
                                             const std::vector<std::string>& methods) {
  const TreeSpec tsa = BuildTopology(base, tsa_tree);
  const std::size_t k = LeafCount(tsa);
  std::vector<MethodTopology> out;
  for (const std::string& name : methods) {
    if (name == "baseline") {
      out.push_back({name, BuildFromBranching(base, std::vector<std::size_t>(base.depth(), 1))});
    } else if (name == "tsa") {
      out.push_back({name, tsa});
    } else if (name == "one_style") {
      std::vector<std::size_t> b(base.depth(), 1);
      b.back() = k;
      out.push_back({name, BuildFromBranching(base, b)});
    } else if (name == "full_dup") {
      out.push_back({name, BuildFullDuplication(base, k)});
    } else {
      throw ConfigError("unknown method '" + name +
                        "' (expected baseline, tsa, one_style, full_dup)");
    }
  }
  return out;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tree-structured auxiliary online distillation: train, evaluate and compare "
               "multi-branch networks",
               "tsa"};
  app.require_subcommand(1);
  const std::string keys = ConfigKeyHelp();

  std::string config, metrics, summary, snapshot_out;
  std::vector<std::string> sets;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train a tree network from a config file");
  train->add_option("config", config, "config file")->required();
  train->add_option("--set", sets, "override a config key (section.key=value)")
      ->allow_extra_args(false);
  train->add_option("--metrics", metrics, "per-epoch metrics output (JSON lines)");
  train->add_option("--summary", summary, "final summary output (CSV)");
  train->add_option("--snapshot", snapshot_out, "model snapshot output");
  train->add_flag("-q,--quiet", quiet, "suppress progress output");
  train->footer(keys);

  std::string snap_in, data_in, ensemble_mode = "probs";
  std::size_t branch = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a snapshot on a dataset file");
  eval->add_option("snapshot", snap_in, "model snapshot")->required();
  eval->add_option("dataset", data_in, "dataset file (CSV or TSAD raw)")->required();
  auto* branch_opt = eval->add_option("--branch", branch, "1-based branch to prune to");
  auto* ens_opt = eval->add_option("--ensemble", ensemble_mode,
                                   "average all leaves: probs (default) or logits")
                      ->expected(0, 1)
                      ->default_str("probs");
  branch_opt->excludes(ens_opt);
  ens_opt->excludes(branch_opt);

  std::string methods = "baseline,tsa,one_style,full_dup", compare_out;
  std::size_t seeds = 5;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  auto* compare = app.add_subcommand("compare", "train several topologies over several seeds");
  compare->add_option("config", config, "config file")->required();
  compare->add_option("--set", sets, "override a config key (section.key=value)")
      ->allow_extra_args(false);
  compare->add_option("--methods", methods, "comma-separated: baseline,tsa,one_style,full_dup");
  compare->add_option("--seeds", seeds, "number of seeds, counting up from train.seed");
  compare->add_option("--threads", threads, "parallel training runs");
  compare->add_option("--out", compare_out, "also write the CSV table here");
  compare->footer(keys);

  auto* params = app.add_subcommand("params", "training-time parameter count per method");
  params->add_option("config", config, "config file")->required();
  params->add_option("--set", sets, "override a config key (section.key=value)")
      ->allow_extra_args(false);
  params->footer(keys);

  std::string kind, gen_out;
  std::size_t n_per_class = 500, classes = 3, dim = 2;
  double noise = 0.1, turns = 1.0, separation = 3.0;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset (.csv or TSAD raw)");
  gen->add_option("kind", kind, "spirals | blobs")->required();
  gen->add_option("out", gen_out, "output path; .csv selects CSV, anything else TSAD raw")
      ->required();
  gen->add_option("--n-per-class", n_per_class, "points per class");
  gen->add_option("--classes", classes, "number of classes");
  gen->add_option("--noise", noise, "spiral coordinate noise std");
  gen->add_option("--turns", turns, "spiral turns");
  gen->add_option("--dim", dim, "blob dimensionality");
  gen->add_option("--separation", separation, "blob center distance");
  gen->add_option("--seed", gen_seed, "generator seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return CmdTrain(config, sets, metrics, summary, snapshot_out, quiet, out);
    if (*eval) {
      if (!*branch_opt && !*ens_opt) {
        err << "eval: pass --branch K or --ensemble\n";
        return kExitUsage;
      }
      return CmdEval(snap_in, data_in, branch, static_cast<bool>(*ens_opt), ensemble_mode, out);
    }
    if (*compare) return CmdCompare(config, sets, methods, seeds, threads, compare_out, out);
    if (*params) return CmdParams(config, sets, out);
    if (*gen) {
      return CmdGenData(kind, gen_out, n_per_class, classes, noise, turns, dim, separation,
                        gen_seed, out);
    }
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tsa

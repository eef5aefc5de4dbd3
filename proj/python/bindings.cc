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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tsa/cli.h"
#include "tsa/config.h"
#include "tsa/data.h"
#include "tsa/distill.h"
#include "tsa/trainer.h"
#include "tsa/tree.h"

namespace py = pybind11;

namespace tsa {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor ToTensor(const Array& a) {
  if (a.ndim() == 0) throw ShapeError("expected an array with at least one axis");
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array ToArray(const Tensor& t) {
  Array a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

py::tuple DatasetArrays(const Dataset& ds) {
  Shape shape{ds.size()};
  shape.insert(shape.end(), ds.feature_shape.begin(), ds.feature_shape.end());
  Array x(std::vector<py::ssize_t>(shape.begin(), shape.end()));
  std::copy(ds.features.begin(), ds.features.end(), x.mutable_data());
  py::array_t<std::int64_t> y(static_cast<py::ssize_t>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) y.mutable_data()[i] = ds.labels[i];
  return py::make_tuple(x, y);
}

std::vector<Tensor> ToTensors(const std::vector<Array>& arrays) {
  std::vector<Tensor> out;
  for (const Array& a : arrays) out.push_back(ToTensor(a));
  return out;
}

py::list LeafArrays(const std::vector<Tensor>& leaves) {
  py::list out;
  for (const Tensor& t : leaves) out.append(ToArray(t));
  return out;
}

py::dict MetricsDict(const EpochMetrics& m) {
  py::dict d;
  d["epoch"] = m.epoch;
  d["lr"] = m.lr;
  d["train_loss"] = m.train_loss;
  d["train_ce"] = m.train_ce;
  d["train_distill"] = m.train_distill;
  d["mean_pairwise_kl"] = m.mean_pairwise_kl;
  d["branch_accuracy"] = m.branch_accuracy;
  d["ensemble_accuracy"] = m.ensemble_accuracy;
  return d;
}

EnsembleMode ParseMode(const std::string& mode) {
  if (mode == "probs") return EnsembleMode::kProbabilities;
  if (mode == "logits") return EnsembleMode::kLogits;
  throw std::invalid_argument("ensemble mode must be 'probs' or 'logits'");
}

}  // namespace
}  // namespace tsa

PYBIND11_MODULE(_core, m) {
  using namespace tsa;
  m.doc() = "Tree-structured auxiliary training: core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def(py::init([](std::vector<std::size_t> input_shape, std::vector<std::string> blocks) {
             NetworkSpec s;
             s.input_shape = std::move(input_shape);
             for (const auto& b : blocks) s.blocks.push_back(ParseBlock(b));
             ValidateNetwork(s);
             return s;
           }),
           py::arg("input_shape"), py::arg("blocks"))
      .def_property_readonly("depth", &NetworkSpec::depth)
      .def_property_readonly("num_classes", &NetworkSpec::num_classes)
      .def_property_readonly("blocks",
                             [](const NetworkSpec& s) {
                               std::vector<std::string> out;
                               for (const auto& b : s.blocks) out.push_back(FormatBlock(b));
                               return out;
                             })
      .def("param_count", [](const NetworkSpec& s) { return CountParams(s); })
      .def("block_param_counts", [](const NetworkSpec& s) {
        std::vector<std::size_t> out;
        for (const auto& b : s.blocks) out.push_back(CountParams(b));
        return out;
      });

  py::class_<TreeSpec>(m, "TreeSpec")
      .def_property_readonly("leaf_count", [](const TreeSpec& s) { return LeafCount(s); })
      .def_property_readonly("node_count", [](const TreeSpec& s) { return s.nodes.size(); })
      .def("param_count", [](const TreeSpec& s) { return ParamCount(s); })
      .def("nested", &FormatNested)
      .def("branches", [](const TreeSpec& s) {
        std::vector<BranchId> out;
        for (std::size_t k = 0; k < LeafCount(s); ++k) out.push_back(BranchOfLeaf(s, k));
        return out;
      });

  m.def("build_topology", &BuildTopology, py::arg("network"), py::arg("tree"),
        "Tree from 'balanced M H', 'branching b1,b2,...' or 'explicit (...)'.");

  py::class_<Network>(m, "Network")
      .def("param_count", [](const Network& n) { return CountParams(n.spec); })
      .def("logits", [](Network& n, const Array& x) { return ToArray(NetworkLogits(n, ToTensor(x))); })
      .def("accuracy", [](Network& n, const Array& x, const std::vector<std::size_t>& y) {
        return Accuracy(NetworkLogits(n, ToTensor(x)), y);
      });

  py::class_<TreeNetwork>(m, "TreeNetwork")
      .def_property_readonly("num_leaves", &TreeNetwork::num_leaves)
      .def_property_readonly("spec", [](const TreeNetwork& n) { return n.spec; })
      .def("param_count", [](const TreeNetwork& n) { return ParamCount(n); })
      .def("leaf_logits",
           [](TreeNetwork& n, const Array& x) { return LeafArrays(TreeLogits(n, ToTensor(x))); })
      .def(
          "ensemble_predict",
          [](TreeNetwork& n, const Array& x, const std::string& mode) {
            return ToArray(EnsemblePredict(n, ToTensor(x), ParseMode(mode)));
          },
          py::arg("x"), py::arg("mode") = "probs")
      .def("prune", [](const TreeNetwork& n, std::size_t leaf) {
        if (leaf >= n.num_leaves()) throw py::index_error("leaf index out of range");
        return PruneToBranch(n, n.leaf_order[leaf]);
      });

  m.def("instantiate", &Instantiate, py::arg("spec"), py::arg("seed") = 0);

  m.def(
      "gen_spirals",
      [](std::size_t n, std::size_t classes, double noise, std::uint64_t seed, double turns) {
        return DatasetArrays(GenSpirals(n, classes, noise, seed, turns));
      },
      py::arg("n_per_class"), py::arg("classes") = 3, py::arg("noise") = 0.1,
      py::arg("seed") = 0, py::arg("turns") = 1.0,
      "Returns (features[N, 2], labels[N]) with 0-based labels.");
  m.def(
      "gen_blobs",
      [](std::size_t n, std::size_t classes, std::size_t dim, double separation,
         std::uint64_t seed) { return DatasetArrays(GenBlobs(n, classes, dim, separation, seed)); },
      py::arg("n_per_class"), py::arg("classes") = 3, py::arg("dim") = 2,
      py::arg("separation") = 3.0, py::arg("seed") = 0);

  m.def(
      "softmax_temp",
      [](const Array& z, double t) { return ToArray(SoftmaxTemp(ToTensor(z), t)); },
      py::arg("logits"), py::arg("temperature") = 1.0);
  m.def(
      "kl_div",
      [](const Array& p, const Array& q) { return KlDivergence(ToTensor(p), ToTensor(q)); },
      py::arg("p"), py::arg("q"));
  m.def(
      "cross_entropy",
      [](const Array& z, const std::vector<std::size_t>& y) {
        Graph g;
        return CrossEntropy(g.Constant(ToTensor(z)), y).value()[0];
      },
      py::arg("logits"), py::arg("labels"));
  m.def(
      "joint_loss",
      [](const std::vector<Array>& leaves, const std::vector<std::size_t>& y, double alpha,
         double temperature, const std::string& peer_gradient) {
        Graph g;
        std::vector<Var> vars;
        for (const Tensor& t : ToTensors(leaves)) vars.push_back(g.Constant(t));
        const JointLoss loss = ComputeJointLoss(
            vars, y, {alpha, temperature, ParsePeerGradient(peer_gradient)});
        py::dict d;
        d["total"] = loss.total.value()[0];
        d["cross_entropy"] = loss.cross_entropy;
        d["distillation"] = loss.distillation;
        return d;
      },
      py::arg("leaf_logits"), py::arg("labels"), py::arg("alpha") = 0.5,
      py::arg("temperature") = 3.0, py::arg("peer_gradient") = "detached");
  m.def(
      "mean_pairwise_kl",
      [](const std::vector<Array>& leaves, double t) {
        return MeanPairwiseKl(ToTensors(leaves), t);
      },
      py::arg("leaf_logits"), py::arg("temperature") = 1.0);

  m.def(
      "load_config",
      [](const std::string& path, const std::vector<std::string>& overrides) {
        const RunConfig rc = LoadRunConfig(path, overrides);
        py::dict d;
        d["network"] = rc.network;
        d["tree"] = BuildTopology(rc.network, rc.tree);
        d["epochs"] = rc.train.epochs;
        d["seed"] = rc.train.seed;
        d["alpha"] = rc.train.distill.alpha;
        d["temperature"] = rc.train.distill.temperature;
        return d;
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{});

  m.def(
      "train",
      [](const std::string& path, const std::vector<std::string>& overrides) {
        const RunConfig rc = LoadRunConfig(path, overrides);
        const auto [train_set, test_set] = LoadData(rc.data);
        TreeNetwork net = Instantiate(BuildTopology(rc.network, rc.tree), rc.train.seed);
        Metrics metrics;
        {
          py::gil_scoped_release release;
          metrics = Train(net, train_set, test_set, rc.train);
        }
        py::list history;
        for (const EpochMetrics& e : metrics) history.append(MetricsDict(e));
        return py::make_tuple(net, history);
      },
      py::arg("config_path"), py::arg("overrides") = std::vector<std::string>{},
      "Trains from a config file; returns (TreeNetwork, per-epoch metric dicts).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = RunCli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a tsa command; returns (exit_code, stdout, stderr).");
}

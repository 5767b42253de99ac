// Python surface for the core library: data generation, model construction,
// training, and the evaluation operations the CLI exposes.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

#include "pivae/data.hpp"
#include "pivae/eval.hpp"
#include "pivae/model.hpp"
#include "pivae/objective.hpp"
#include "pivae/train.hpp"

namespace py = pybind11;
using namespace pivae;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Tensor from_numpy(const py::array_t<double, py::array::c_style |
                                                py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  std::vector<double> buf(a.data(), a.data() + r * c);
  return Tensor::from({r, c}, std::move(buf));
}

Tensor batch_all(const SequenceDataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return pack_batch(ds.sequences, idx);
}

}  // namespace

PYBIND11_MODULE(_pivae, mod) {
  mod.doc() = "physics-integrated VAE core";

  py::enum_<Experiment>(mod, "Experiment")
      .value("Pendulum", Experiment::Pendulum)
      .value("AdvDif", Experiment::AdvDif);

  py::enum_<Variant>(mod, "Variant")
      .value("NnOnly", Variant::NnOnly)
      .value("PhysOnly", Variant::PhysOnly)
      .value("NnSolver", Variant::NnSolver)
      .value("NnPhys", Variant::NnPhys)
      .value("NnPhysReg", Variant::NnPhysReg);

  py::class_<PendulumTruth>(mod, "PendulumTruth")
      .def_readonly("omega", &PendulumTruth::omega)
      .def_readonly("xi", &PendulumTruth::xi)
      .def_readonly("amp", &PendulumTruth::amp)
      .def_readonly("phi", &PendulumTruth::phi)
      .def_readonly("theta0", &PendulumTruth::theta0);

  py::class_<AdvDifTruth>(mod, "AdvDifTruth")
      .def_readonly("a", &AdvDifTruth::a)
      .def_readonly("b", &AdvDifTruth::b)
      .def_readonly("c", &AdvDifTruth::c);

  py::class_<SequenceDataset>(mod, "SequenceDataset")
      .def("__len__", &SequenceDataset::size)
      .def("true_param", &SequenceDataset::true_param)
      .def_property_readonly("experiment",
                             [](const SequenceDataset& d) {
                               return d.meta.experiment;
                             })
      .def_property_readonly("pendulum_truths",
                             [](const SequenceDataset& d) {
                               return d.pendulum_truths;
                             })
      .def_property_readonly("advdif_truths",
                             [](const SequenceDataset& d) {
                               return d.advdif_truths;
                             })
      .def("as_array",
           [](const SequenceDataset& d) { return to_numpy(batch_all(d)); });

  py::class_<DatasetSplits>(mod, "DatasetSplits")
      .def_readonly("train", &DatasetSplits::train)
      .def_readonly("valid", &DatasetSplits::valid)
      .def_readonly("test", &DatasetSplits::test);

  mod.def("gen_pendulum", &gen_pendulum, py::arg("n"), py::arg("seed"),
          py::arg("horizon_steps") = 50, py::arg("dt") = 0.05);
  mod.def("gen_advdif", &gen_advdif, py::arg("n"), py::arg("seed"),
          py::arg("horizon_steps") = 50, py::arg("dt") = 0.02);
  mod.def(
      "split",
      [](const SequenceDataset& ds, std::size_t train, std::size_t valid,
         std::size_t test, std::uint64_t seed) {
        return split(ds, SplitSizes{train, valid, test}, seed);
      },
      py::arg("dataset"), py::arg("train"), py::arg("valid"), py::arg("test"),
      py::arg("seed"));
  mod.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("stem"));
  mod.def("load_dataset", &load_dataset, py::arg("stem"));

  py::class_<RegWeights>(mod, "RegWeights")
      .def(py::init<>())
      .def_readwrite("alpha", &RegWeights::alpha)
      .def_readwrite("beta", &RegWeights::beta)
      .def_readwrite("gamma", &RegWeights::gamma)
      .def_readwrite("zstar_low", &RegWeights::zstar_low)
      .def_readwrite("zstar_high", &RegWeights::zstar_high);

  py::class_<TrainConfig>(mod, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("weights", &TrainConfig::weights)
      .def_readwrite("seed", &TrainConfig::seed);

  mod.def("default_weights", &default_weights, py::arg("experiment"));
  mod.def("default_epochs", &default_epochs, py::arg("experiment"));

  py::class_<EpochRecord>(mod, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("valid_mae", &EpochRecord::valid_mae)
      .def_property_readonly(
          "total", [](const EpochRecord& r) { return r.loss.total; })
      .def_property_readonly(
          "neg_elbo", [](const EpochRecord& r) { return r.loss.neg_elbo; });

  py::class_<TrainResult>(mod, "TrainResult")
      .def_readonly("best_valid_mae", &TrainResult::best_valid_mae)
      .def_readonly("best_epoch", &TrainResult::best_epoch)
      .def_readonly("history", &TrainResult::history);

  py::class_<PiVaeModel>(mod, "Model")
      .def_property_readonly("has_physics", &PiVaeModel::has_zp)
      .def("physics_only_signal",
           [](const PiVaeModel& m, const py::array_t<double>& z_p,
              const py::array_t<double>& ic, std::size_t steps_override) {
             return to_numpy(m.physics_only_signal(from_numpy(z_p),
                                                   from_numpy(ic),
                                                   steps_override));
           },
           py::arg("z_p"), py::arg("ic"), py::arg("steps_override") = 0);

  mod.def("build_model", &build_model, py::arg("experiment"),
          py::arg("variant"), py::arg("seed"));
  mod.def("save_checkpoint", &save_checkpoint, py::arg("model"),
          py::arg("path"));
  mod.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  mod.def(
      "train",
      [](PiVaeModel& m, const DatasetSplits& data, const TrainConfig& cfg) {
        return train(m, data, cfg);
      },
      py::arg("model"), py::arg("splits"), py::arg("config"));

  mod.def(
      "total_loss",
      [](const PiVaeModel& m, const py::array_t<double>& x,
         const RegWeights& w, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return total_loss(m, from_numpy(x), w, rng).item();
      },
      py::arg("model"), py::arg("x"), py::arg("weights"), py::arg("seed"));

  mod.def("eval_reconstruction", &eval_reconstruction, py::arg("model"),
          py::arg("dataset"), py::arg("seed"));
  mod.def("eval_inference", &eval_inference, py::arg("model"),
          py::arg("dataset"), py::arg("seed"));
  mod.def(
      "extrapolate",
      [](const PiVaeModel& m, const py::array_t<double>& x,
         std::size_t total_steps, std::uint64_t seed) {
        return to_numpy(extrapolate(m, from_numpy(x), total_steps, seed));
      },
      py::arg("model"), py::arg("x"), py::arg("total_steps"), py::arg("seed"));
  mod.def(
      "counterfactual",
      [](const PiVaeModel& m, const py::array_t<double>& x,
         const std::vector<double>& zp_values, std::uint64_t seed) {
        std::vector<py::array_t<double>> out;
        for (const Tensor& t :
             counterfactual(m, from_numpy(x), zp_values, seed))
          out.push_back(to_numpy(t));
        return out;
      },
      py::arg("model"), py::arg("x"), py::arg("zp_values"), py::arg("seed"));
}

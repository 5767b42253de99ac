// Command-line surface: dataset generation, training, evaluation,
// extrapolation, counterfactual generation, hyperparameter sweeps, and the
// built-in inequality selftest. All outputs land under --out with
// deterministic filenames.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pivae/data.hpp"
#include "pivae/eval.hpp"
#include "pivae/model.hpp"
#include "pivae/objective.hpp"
#include "pivae/oracles.hpp"
#include "pivae/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace pivae;

namespace {

struct RunOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  std::string experiment = "pendulum";
  std::string variant = "nn-phys-reg";
  std::string data_dir;
  std::string checkpoint;

  // gen-data
  std::size_t n_train = 200, n_valid = 100, n_test = 200;

  // train
  TrainConfig train_cfg;
  bool epochs_set = false;

  // extrapolate / counterfactual
  std::size_t index = 0;
  std::size_t total_steps = 160;
  std::vector<double> zp_values;

  // sweep
  std::string axis = "ablation";
  std::vector<double> axis_values;
  std::size_t trials = 5;
};

void apply_config(RunOptions& o) {
  if (o.config_path.empty()) return;
  std::ifstream f(o.config_path);
  if (!f) throw std::runtime_error("cannot open config " + o.config_path);
  json j = json::parse(f);
  if (j.contains("experiment")) o.experiment = j["experiment"];
  if (j.contains("variant")) o.variant = j["variant"];
  if (j.contains("seed")) o.seed = j["seed"];
  if (j.contains("data")) {
    const auto& d = j["data"];
    if (d.contains("train")) o.n_train = d["train"];
    if (d.contains("valid")) o.n_valid = d["valid"];
    if (d.contains("test")) o.n_test = d["test"];
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    if (t.contains("epochs")) {
      o.train_cfg.epochs = t["epochs"];
      o.epochs_set = true;
    }
    if (t.contains("batch_size")) o.train_cfg.batch_size = t["batch_size"];
    if (t.contains("lr")) o.train_cfg.lr = t["lr"];
    if (t.contains("adam_beta1")) o.train_cfg.adam_beta1 = t["adam_beta1"];
    if (t.contains("adam_beta2")) o.train_cfg.adam_beta2 = t["adam_beta2"];
    if (t.contains("adam_eps")) o.train_cfg.adam_eps = t["adam_eps"];
  }
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    RegWeights& rw = o.train_cfg.weights;
    if (w.contains("alpha")) rw.alpha = w["alpha"];
    if (w.contains("beta")) rw.beta = w["beta"];
    if (w.contains("gamma")) rw.gamma = w["gamma"];
    if (w.contains("zstar_low")) rw.zstar_low = w["zstar_low"];
    if (w.contains("zstar_high")) rw.zstar_high = w["zstar_high"];
    if (w.contains("ppc_mode")) {
      std::string mode = w["ppc_mode"];
      if (mode == "simple")
        rw.ppc_mode = PpcMode::Simple;
      else if (mode == "marginal-k2")
        rw.ppc_mode = PpcMode::MarginalK2;
      else
        throw std::runtime_error("unknown ppc_mode " + mode);
    }
  }
}

SequenceDataset load_split(const std::string& dir, const std::string& name) {
  return load_dataset((fs::path(dir) / name).string());
}

DatasetSplits load_all_splits(const std::string& dir) {
  DatasetSplits s;
  s.train = load_split(dir, "train");
  s.valid = load_split(dir, "valid");
  s.test = load_split(dir, "test");
  return s;
}

// Per-variant weight selection: only the regularized variant trains with
// nonzero alpha/beta/gamma.
RegWeights weights_for(Variant v, const RegWeights& base) {
  if (v == Variant::NnPhysReg) return base;
  RegWeights w = base;
  w.alpha = w.beta = w.gamma = 0.0;
  return w;
}

int cmd_gen_data(const RunOptions& o) {
  Experiment e = experiment_from_name(o.experiment);
  const std::size_t total = o.n_train + o.n_valid + o.n_test;
  SequenceDataset all = e == Experiment::Pendulum
                            ? gen_pendulum(total, o.seed)
                            : gen_advdif(total, o.seed);
  DatasetSplits s = split(all, {o.n_train, o.n_valid, o.n_test}, o.seed);
  fs::create_directories(o.out_dir);
  save_dataset(s.train, (fs::path(o.out_dir) / "train").string());
  save_dataset(s.valid, (fs::path(o.out_dir) / "valid").string());
  save_dataset(s.test, (fs::path(o.out_dir) / "test").string());
  std::cout << "wrote " << s.train.size() << "/" << s.valid.size() << "/"
            << s.test.size() << " sequences to " << o.out_dir << "\n";
  return 0;
}

int cmd_train(RunOptions& o) {
  Experiment e = experiment_from_name(o.experiment);
  Variant v = variant_from_name(o.variant);
  if (o.data_dir.empty()) throw std::runtime_error("train needs --data DIR");
  DatasetSplits data = load_all_splits(o.data_dir);

  TrainConfig cfg = o.train_cfg;
  cfg.seed = o.seed;
  if (!o.epochs_set) cfg.epochs = default_epochs(e);
  if (cfg.weights.alpha == 0 && cfg.weights.beta == 0 &&
      cfg.weights.gamma == 0)
    cfg.weights = default_weights(e);
  cfg.weights = weights_for(v, cfg.weights);

  PiVaeModel m = build_model(e, v, o.seed);
  fs::create_directories(o.out_dir);
  std::ofstream log((fs::path(o.out_dir) / "train_log.txt").string());
  TrainResult res = train(m, data, cfg, [&](const EpochRecord& r) {
    if (r.epoch % 50 == 0 || r.epoch == 1) {
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "epoch %zu total %.6g valid_mae %.6g skipped %zu",
                    r.epoch, r.loss.total, r.valid_mae, r.skipped);
      log << buf << "\n";
      log.flush();
    }
  });
  save_history_csv(res.history, (fs::path(o.out_dir) / "history.csv").string());
  save_checkpoint(m, (fs::path(o.out_dir) / "model.ckpt").string());
  std::cout << "best epoch " << res.best_epoch << " valid_mae "
            << res.best_valid_mae << "\n";
  return 0;
}

int cmd_eval(const RunOptions& o) {
  if (o.checkpoint.empty() || o.data_dir.empty())
    throw std::runtime_error("eval needs --checkpoint and --data");
  PiVaeModel m = load_checkpoint(o.checkpoint);
  SequenceDataset test = load_split(o.data_dir, "test");
  MetricsReport rep;
  rep.variant = variant_name(m.cfg.decoder.variant);
  rep.reconstruction_mae = eval_reconstruction(m, test, o.seed);
  rep.has_inference = m.has_zp();
  if (rep.has_inference)
    rep.inferred_param_mae = eval_inference(m, test, o.seed);
  fs::create_directories(o.out_dir);
  std::ofstream f((fs::path(o.out_dir) / "metrics.csv").string());
  f << "variant,reconstruction_mae,inferred_param_mae\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%s\n", rep.variant.c_str(),
                rep.reconstruction_mae,
                rep.has_inference
                    ? std::to_string(rep.inferred_param_mae).c_str()
                    : "");
  f << buf;
  std::cout << "reconstruction_mae " << rep.reconstruction_mae;
  if (rep.has_inference)
    std::cout << " inferred_param_mae " << rep.inferred_param_mae;
  std::cout << "\n";
  return 0;
}

// Truth columns always come from the reference integrator, never the model.
std::vector<double> truth_sequence(const SequenceDataset& ds, std::size_t i,
                                   std::size_t steps) {
  if (ds.is_pendulum())
    return pendulum_reference(ds.pendulum_truths[i], ds.meta.dt, steps);
  return advdif_reference(ds.advdif_truths[i], ds.meta.dt, steps,
                          ds.meta.grid_points, ds.meta.s_max);
}

int cmd_extrapolate(const RunOptions& o) {
  if (o.checkpoint.empty() || o.data_dir.empty())
    throw std::runtime_error("extrapolate needs --checkpoint and --data");
  PiVaeModel m = load_checkpoint(o.checkpoint);
  SequenceDataset test = load_split(o.data_dir, "test");
  if (o.index >= test.size())
    throw std::runtime_error("extrapolate: --index out of range");
  Tensor x = pack_batch(test.sequences, {o.index});
  Tensor ext = extrapolate(m, x, o.total_steps, o.seed);
  std::vector<double> truth = truth_sequence(test, o.index, o.total_steps);

  fs::create_directories(o.out_dir);
  std::ofstream f((fs::path(o.out_dir) / "extrapolation.csv").string());
  const std::size_t width = test.is_pendulum() ? 1 : test.meta.grid_points;
  f << "t";
  for (std::size_t c = 0; c < width; ++c)
    f << ",truth_" << c << ",model_" << c;
  f << "\n";
  const auto& mv = ext.data();
  char buf[64];
  for (std::size_t t = 0; t < o.total_steps; ++t) {
    std::snprintf(buf, sizeof(buf), "%.17g", test.meta.dt *
                                                 static_cast<double>(t));
    f << buf;
    for (std::size_t c = 0; c < width; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", truth[t * width + c],
                    mv[t * width + c]);
      f << buf;
    }
    f << "\n";
  }
  std::cout << "wrote " << o.total_steps << " rows\n";
  return 0;
}

int cmd_counterfactual(const RunOptions& o) {
  if (o.checkpoint.empty() || o.data_dir.empty())
    throw std::runtime_error("counterfactual needs --checkpoint and --data");
  PiVaeModel m = load_checkpoint(o.checkpoint);
  SequenceDataset test = load_split(o.data_dir, "test");
  if (o.index >= test.size())
    throw std::runtime_error("counterfactual: --index out of range");
  std::vector<double> values = o.zp_values;
  if (values.empty())
    values = {0.86, 1.29, 1.72, 2.15, 3.22, 4.29, 5.36};
  Tensor x = pack_batch(test.sequences, {o.index});
  std::vector<Tensor> gen = counterfactual(m, x, values, o.seed);

  fs::create_directories(o.out_dir);
  std::ofstream f((fs::path(o.out_dir) / "counterfactual.csv").string());
  const std::size_t tau = m.cfg.unroll.steps;
  const std::size_t width = test.is_pendulum() ? 1 : test.meta.grid_points;
  f << "t";
  for (std::size_t c = 0; c < width; ++c) f << ",truth_" << c;
  for (double v : values)
    for (std::size_t c = 0; c < width; ++c)
      f << ",zp_" << v << "_" << c;
  f << "\n";
  std::vector<double> truth = truth_sequence(test, o.index, tau);
  char buf[64];
  for (std::size_t t = 0; t < tau; ++t) {
    std::snprintf(buf, sizeof(buf), "%.17g",
                  test.meta.dt * static_cast<double>(t));
    f << buf;
    for (std::size_t c = 0; c < width; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", truth[t * width + c]);
      f << buf;
    }
    for (const Tensor& g : gen)
      for (std::size_t c = 0; c < width; ++c) {
        std::snprintf(buf, sizeof(buf), ",%.17g", g.data()[t * width + c]);
        f << buf;
      }
    f << "\n";
  }
  std::cout << "wrote " << values.size() << " generated signals\n";
  return 0;
}

int cmd_sweep(RunOptions& o) {
  Experiment e = experiment_from_name(o.experiment);
  if (o.data_dir.empty()) throw std::runtime_error("sweep needs --data DIR");
  DatasetSplits data = load_all_splits(o.data_dir);
  fs::create_directories(o.out_dir);
  std::ofstream f((fs::path(o.out_dir) / "sweep.csv").string());
  f << "label,trial,reconstruction_mae,inferred_param_mae,status\n";

  struct Run {
    std::string label;
    Variant variant;
    RegWeights weights;
  };
  std::vector<Run> runs;
  RegWeights base = default_weights(e);
  if (o.axis == "ablation") {
    runs.push_back({"nn-phys-reg", Variant::NnPhysReg, base});
    RegWeights wa = base;
    wa.alpha = 0;
    runs.push_back({"alpha=0", Variant::NnPhysReg, wa});
    RegWeights wb = base;
    wb.beta = 0;
    runs.push_back({"beta=0", Variant::NnPhysReg, wb});
    RegWeights wg = base;
    wg.gamma = 0;
    runs.push_back({"gamma=0", Variant::NnPhysReg, wg});
    for (Variant v : {Variant::NnPhys, Variant::PhysOnly, Variant::NnSolver,
                      Variant::NnOnly})
      runs.push_back({variant_name(v), v, weights_for(v, base)});
  } else {
    std::vector<double> values = o.axis_values;
    if (values.empty()) {
      double d = o.axis == "alpha" ? base.alpha
                 : o.axis == "beta" ? base.beta
                                    : base.gamma;
      values = {d / 10.0, d, d * 10.0};
    }
    for (double v : values) {
      RegWeights w = base;
      if (o.axis == "alpha")
        w.alpha = v;
      else if (o.axis == "beta")
        w.beta = v;
      else if (o.axis == "gamma")
        w.gamma = v;
      else
        throw std::runtime_error("unknown sweep axis " + o.axis);
      char label[64];
      std::snprintf(label, sizeof(label), "%s=%g", o.axis.c_str(), v);
      runs.push_back({label, Variant::NnPhysReg, w});
    }
  }

  for (const Run& run : runs) {
    for (std::size_t trial = 0; trial < o.trials; ++trial) {
      const std::uint64_t seed = mixed_seed(o.seed, trial);
      try {
        TrainConfig cfg = o.train_cfg;
        cfg.seed = seed;
        if (!o.epochs_set) cfg.epochs = default_epochs(e);
        cfg.weights = run.weights;
        PiVaeModel m = build_model(e, run.variant, seed);
        train(m, data, cfg);
        const double rec = eval_reconstruction(m, data.test, seed);
        char buf[256];
        if (m.has_zp()) {
          std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,ok\n",
                        run.label.c_str(), trial, rec,
                        eval_inference(m, data.test, seed));
        } else {
          std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,,ok\n",
                        run.label.c_str(), trial, rec);
        }
        f << buf;
      } catch (const std::exception& ex) {
        f << run.label << "," << trial << ",,,failed\n";
        std::cerr << "run " << run.label << " trial " << trial
                  << " failed: " << ex.what() << "\n";
      }
      f.flush();
    }
  }
  std::cout << "wrote sweep.csv with " << runs.size() * o.trials << " runs\n";
  return 0;
}

int cmd_selftest(const RunOptions& o) {
  std::mt19937_64 rng(mixed_seed(o.seed, 0x5E1Fu));
  std::uniform_int_distribution<std::size_t> dim(2, 6);
  bool ok = true;
  auto report = [&](const char* name, double worst, bool pass) {
    std::printf("%-28s worst slack %12.5e  %s\n", name, worst,
                pass ? "pass" : "FAIL");
    ok = ok && pass;
  };
  const double tol = 1e-12;

  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    auto c = oracle::marginal_kl_bound_case(rng, dim(rng), dim(rng));
    worst = std::min(worst, c.slack());
  }
  report("marginal-kl bound", worst, worst >= -tol);

  worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    auto c = oracle::mutual_info_bound_case(rng, dim(rng), dim(rng));
    worst = std::min(worst, c.slack());
  }
  report("mutual-information bound", worst, worst >= -tol);

  worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    auto c = oracle::predictive_kl_bound_case(rng);
    worst = std::min(worst, c.slack());
  }
  report("predictive-kl bound", worst, worst >= -tol);

  if (!ok) return 2;
  std::cout << "selftest ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physics-integrated variational autoencoder toolkit"};
  app.require_subcommand(1);
  RunOptions o;

  app.add_option("--config", o.config_path, "JSON run configuration");
  app.add_option("--seed", o.seed, "master RNG seed");
  app.add_option("--out", o.out_dir, "output directory");

  auto* gen = app.add_subcommand("gen-data", "generate synthetic datasets");
  gen->add_option("--experiment", o.experiment, "pendulum | advdif");
  gen->add_option("--train", o.n_train, "training sequences");
  gen->add_option("--valid", o.n_valid, "validation sequences");
  gen->add_option("--test", o.n_test, "test sequences");

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--experiment", o.experiment, "pendulum | advdif");
  tr->add_option("--variant", o.variant,
                 "nn-only | phys-only | nn-solver | nn-phys | nn-phys-reg");
  tr->add_option("--data", o.data_dir, "dataset directory from gen-data");
  tr->add_option("--epochs", o.train_cfg.epochs, "training epochs")
      ->each([&](const std::string&) { o.epochs_set = true; });
  tr->add_option("--batch-size", o.train_cfg.batch_size, "minibatch size");

  auto* ev = app.add_subcommand("eval", "test-set metrics for a checkpoint");
  ev->add_option("--checkpoint", o.checkpoint, "model checkpoint");
  ev->add_option("--data", o.data_dir, "dataset directory");

  auto* ex = app.add_subcommand("extrapolate", "decode past the horizon");
  ex->add_option("--checkpoint", o.checkpoint, "model checkpoint");
  ex->add_option("--data", o.data_dir, "dataset directory");
  ex->add_option("--index", o.index, "test-sequence index");
  ex->add_option("--total-steps", o.total_steps, "decode horizon in frames");

  auto* cf = app.add_subcommand("counterfactual",
                                "decode with alternative physics parameters");
  cf->add_option("--checkpoint", o.checkpoint, "model checkpoint");
  cf->add_option("--data", o.data_dir, "dataset directory");
  cf->add_option("--index", o.index, "test-sequence index");
  cf->add_option("--zp", o.zp_values, "physics-parameter values");

  auto* sw = app.add_subcommand("sweep", "hyperparameter / ablation sweeps");
  sw->add_option("--experiment", o.experiment, "pendulum | advdif");
  sw->add_option("--data", o.data_dir, "dataset directory");
  sw->add_option("--axis", o.axis, "alpha | beta | gamma | ablation");
  sw->add_option("--values", o.axis_values, "axis values");
  sw->add_option("--trials", o.trials, "trials per configuration");
  sw->add_option("--epochs", o.train_cfg.epochs, "training epochs")
      ->each([&](const std::string&) { o.epochs_set = true; });

  auto* st = app.add_subcommand("selftest", "run the inequality oracles");
  // Let the global --config/--seed/--out appear after the subcommand too.
  for (CLI::App* s : {gen, tr, ev, ex, cf, sw, st}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    apply_config(o);
    if (gen->parsed()) return cmd_gen_data(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    if (ex->parsed()) return cmd_extrapolate(o);
    if (cf->parsed()) return cmd_counterfactual(o);
    if (sw->parsed()) return cmd_sweep(o);
    if (st->parsed()) return cmd_selftest(o);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 1;
}

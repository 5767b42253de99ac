#include "pivae/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pivae/eval.hpp"

namespace pivae {

RegWeights default_weights(Experiment e) {
  RegWeights w;
  if (e == Experiment::Pendulum) {
    w.alpha = 1e-2;
    w.beta = 1e-3;
    w.gamma = 1e-1;
    w.ppc_mode = PpcMode::MarginalK2;
    w.zstar_low = 0.392;
    w.zstar_high = 3.53;
  } else {
    w.alpha = 1e-1;
    w.beta = 1e-2;
    w.gamma = 1e6;
    w.ppc_mode = PpcMode::Simple;
    w.zstar_low = 0.005;
    w.zstar_high = 0.2;
  }
  return w;
}

std::size_t default_epochs(Experiment e) {
  return e == Experiment::Pendulum ? 1500 : 3000;
}

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state,
               const TrainConfig& cfg) {
  if (cfg.lr <= 0 || cfg.adam_beta1 <= 0 || cfg.adam_beta2 <= 0 ||
      cfg.adam_eps <= 0)
    throw DomainError("adam_step: optimizer constants must be positive");
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (const auto& name : params.names()) {
    auto git = grads.find(name);
    if (git == grads.end())
      throw DomainError("adam_step: missing gradient for " + name);
    const auto& g = git->second;
    Tensor& p = params.get(name);
    auto& val = p.node()->value;
    if (g.size() != val.size())
      throw ShapeError("adam_step: gradient size mismatch for " + name);
    auto& m1 = state.first[name];
    auto& m2 = state.second[name];
    if (m1.empty()) m1.assign(val.size(), 0.0);
    if (m2.empty()) m2.assign(val.size(), 0.0);
    for (std::size_t i = 0; i < val.size(); ++i) {
      m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
      m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m1[i] / corr1;
      const double vhat = m2[i] / corr2;
      val[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

namespace {

bool grads_finite(const GradMap& grads) {
  for (const auto& [name, g] : grads)
    for (double v : g)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TrainResult train(PiVaeModel& m, const DatasetSplits& data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw DomainError("train: epochs and batch_size must be >= 1");
  const bool model_pend = m.cfg.decoder.experiment == Experiment::Pendulum;
  if (model_pend != data.train.is_pendulum())
    throw DomainError("train: model and dataset experiments differ");
  if (data.train.size() == 0 || data.valid.size() == 0)
    throw DomainError("train: train and valid splits must be non-empty");

  std::mt19937_64 shuffle_rng(mixed_seed(cfg.seed, 0x5BAF1Eu));
  std::mt19937_64 sample_rng(mixed_seed(cfg.seed, 0x5A3B1Du));
  AdamState adam;
  TrainResult result;
  result.best_valid_mae = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    LossBreakdown epoch_loss;
    std::size_t processed = 0, skipped = 0, batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() +
                                       static_cast<std::ptrdiff_t>(lo),
                                   order.begin() +
                                       static_cast<std::ptrdiff_t>(hi));
      ++batches;
      Tensor x = pack_batch(data.train.sequences, idx);
      m.params.zero_grad();
      LossBreakdown bd;
      GradMap grads;
      try {
        Tape tape;
        Tensor total = total_loss(m, x, cfg.weights, sample_rng, &bd);
        if (!std::isfinite(bd.total))
          throw NonFiniteError("train: non-finite loss", 0);
        grads = backward(tape, total, m.params);
      } catch (const NonFiniteError&) {
        ++skipped;
        continue;
      }
      if (!grads_finite(grads)) {
        ++skipped;
        continue;
      }
      adam_step(m.params, grads, adam, cfg);
      epoch_loss.neg_elbo += bd.neg_elbo;
      epoch_loss.r_ppc += bd.r_ppc;
      epoch_loss.r_da1 += bd.r_da1;
      epoch_loss.r_da2 += bd.r_da2;
      epoch_loss.total += bd.total;
      ++processed;
    }
    if (skipped * 10 > batches)
      throw std::runtime_error(
          "train: divergence guard tripped, " + std::to_string(skipped) +
          " of " + std::to_string(batches) + " minibatches skipped in epoch " +
          std::to_string(epoch));
    if (processed > 0) {
      const double inv = 1.0 / static_cast<double>(processed);
      epoch_loss.neg_elbo *= inv;
      epoch_loss.r_ppc *= inv;
      epoch_loss.r_da1 *= inv;
      epoch_loss.r_da2 *= inv;
      epoch_loss.total *= inv;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss;
    rec.skipped = skipped;
    rec.valid_mae =
        eval_reconstruction(m, data.valid, mixed_seed(cfg.seed, 0xA11DAu));
    result.history.push_back(rec);
    if (rec.valid_mae < result.best_valid_mae) {
      result.best_valid_mae = rec.valid_mae;
      result.best_epoch = epoch;
      result.best_values = m.params.snapshot();
    }
    if (on_epoch) on_epoch(rec);
  }
  if (!result.best_values.empty()) m.params.restore(result.best_values);
  return result;
}

void save_history_csv(const std::vector<EpochRecord>& history,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_history_csv: cannot open " + path);
  f << "epoch,neg_elbo,r_ppc,r_da1,r_da2,total,valid_mae\n";
  char buf[512];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.loss.neg_elbo, r.loss.r_ppc, r.loss.r_da1, r.loss.r_da2,
                  r.loss.total, r.valid_mae);
    f << buf;
  }
}

}  // namespace pivae

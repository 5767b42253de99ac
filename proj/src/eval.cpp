#include "pivae/eval.hpp"

#include <cmath>
#include <cstdlib>

namespace pivae {

namespace {

constexpr std::size_t kEvalChunk = 200;

void check_experiment(const PiVaeModel& m, const SequenceDataset& ds,
                      const char* what) {
  const bool model_pend = m.cfg.decoder.experiment == Experiment::Pendulum;
  if (model_pend != ds.is_pendulum())
    throw DomainError(std::string(what) +
                      ": model and dataset experiments differ");
}

std::vector<std::size_t> chunk_indices(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> idx(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) idx[i - lo] = i;
  return idx;
}

}  // namespace

double eval_reconstruction(const PiVaeModel& m, const SequenceDataset& ds,
                           std::uint64_t seed) {
  check_experiment(m, ds, "eval_reconstruction");
  if (ds.size() == 0) throw DomainError("eval_reconstruction: empty dataset");
  std::mt19937_64 rng(mixed_seed(seed, 0xE7A1u));
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t lo = 0; lo < ds.size(); lo += kEvalChunk) {
    const std::size_t hi = std::min(ds.size(), lo + kEvalChunk);
    Tensor x = pack_batch(ds.sequences, chunk_indices(lo, hi));
    EncoderOutput enc = m.encode(x, rng);
    Tensor mean_x = m.decode_mean(enc.z_p, enc.z_a, m.ic_from(x), {});
    const auto& xv = x.data();
    const auto& mv = mean_x.data();
    for (std::size_t i = 0; i < xv.size(); ++i)
      total += std::abs(xv[i] - mv[i]);
    count += xv.size();
  }
  return total / static_cast<double>(count);
}

double eval_inference(const PiVaeModel& m, const SequenceDataset& ds,
                      std::uint64_t seed) {
  check_experiment(m, ds, "eval_inference");
  if (!m.has_zp())
    throw DomainError("eval_inference: variant has no physics parameter");
  if (ds.size() == 0) throw DomainError("eval_inference: empty dataset");
  std::mt19937_64 rng(mixed_seed(seed, 0x1FE7u));
  double total = 0.0;
  for (std::size_t lo = 0; lo < ds.size(); lo += kEvalChunk) {
    const std::size_t hi = std::min(ds.size(), lo + kEvalChunk);
    Tensor x = pack_batch(ds.sequences, chunk_indices(lo, hi));
    EncoderOutput enc = m.encode(x, rng);
    const auto& pm = enc.q_p.mean.data();
    for (std::size_t i = lo; i < hi; ++i)
      total += std::abs(pm[i - lo] - ds.true_param(i));
  }
  return total / static_cast<double>(ds.size());
}

Tensor extrapolate(const PiVaeModel& m, const Tensor& x,
                   std::size_t total_steps, std::uint64_t seed) {
  if (m.cfg.decoder.variant == Variant::NnOnly)
    throw DomainError(
        "extrapolate: the direct-map variant has no dynamics to unroll "
        "(the neural-dynamics variant does)");
  if (total_steps < m.cfg.unroll.steps)
    throw DomainError("extrapolate: total_steps below the training horizon");
  std::mt19937_64 rng(mixed_seed(seed, 0xE8EAu));
  EncoderOutput enc = m.encode(x, rng);
  return m.decode_mean(enc.z_p, enc.z_a, m.ic_from(x), {}, total_steps);
}

std::vector<Tensor> counterfactual(const PiVaeModel& m, const Tensor& x,
                                   const std::vector<double>& zp_values,
                                   std::uint64_t seed) {
  if (!m.has_zp())
    throw DomainError("counterfactual: variant has no physics parameter");
  for (double v : zp_values)
    if (!(v > 0.0))
      throw DomainError("counterfactual: z_P values must be positive");
  std::mt19937_64 rng(mixed_seed(seed, 0xCFA7u));
  EncoderOutput enc = m.encode(x, rng);
  std::vector<Tensor> z_a_means;
  z_a_means.reserve(enc.q_a.size());
  for (const auto& q : enc.q_a) z_a_means.push_back(q.mean);
  Tensor ic = m.ic_from(x);
  std::vector<Tensor> out;
  out.reserve(zp_values.size());
  for (double v : zp_values) {
    Tensor z_p = Tensor::full({x.rows(), 1}, v);
    out.push_back(m.decode_mean(z_p, z_a_means, ic, {}));
  }
  return out;
}

}  // namespace pivae

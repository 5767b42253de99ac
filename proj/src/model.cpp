#include "pivae/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "pivae/data.hpp"

namespace pivae {

namespace {

Tensor exp_logvar(const ParamStore& params, const std::string& name) {
  return exp_(params.get(name));
}

}  // namespace

EncoderOutput PiVaeModel::encode(const Tensor& x, std::mt19937_64& rng) const {
  if (x.cols() != cfg.x_dim)
    throw ShapeError("encode: input width " + std::to_string(x.cols()) +
                     " != expected " + std::to_string(cfg.x_dim));
  EncoderOutput out;
  for (std::size_t k = 0; k < n_za_blocks(); ++k) {
    std::string id = std::to_string(k + 1);
    Tensor mean = mlp_forward(cfg.g_a[k], params, "enc.ga" + id, x);
    Tensor var = exp_logvar(params, "enc.logvar_za" + id);
    DiagGaussian q{mean, var};
    out.z_a.push_back(reparam_sample(q, rng));
    out.q_a.push_back(std::move(q));
  }
  if (!has_zp()) return out;

  std::vector<Tensor> gp1_in{x};
  for (const auto& z : out.z_a) gp1_in.push_back(z);
  Tensor stacked = gp1_in.size() == 1 ? gp1_in[0] : concat_cols(gp1_in);
  Tensor cleansed = mlp_forward(cfg.g_p1, params, "enc.gp1", stacked);
  if (cfg.gp1_residual) cleansed = add(x, cleansed);
  out.cleansed = cleansed;

  Tensor p_mean = mlp_forward(cfg.g_p2, params, "enc.gp2", cleansed);
  Tensor p_var = exp_logvar(params, "enc.logvar_zp");
  out.q_p = DiagGaussian{p_mean, p_var};
  out.z_p = reparam_sample(out.q_p, rng);
  return out;
}

Tensor PiVaeModel::ic_from(const Tensor& x) const {
  if (cfg.decoder.experiment == Experiment::Pendulum)
    return slice_cols(x, 0, 1);
  return slice_cols(x, 0, cfg.decoder.grid_points);
}

Tensor PiVaeModel::obs_var() const { return exp_logvar(params, "dec.logvar_x"); }

DiagGaussian PiVaeModel::zp_prior() const {
  return {Tensor::scalar(cfg.zp_prior_mean),
          Tensor::scalar(cfg.zp_prior_std * cfg.zp_prior_std)};
}

DiagGaussian PiVaeModel::za_prior(std::size_t block) const {
  std::size_t d = cfg.decoder.dim_za.at(block);
  return {Tensor::zeros({1, d}), Tensor::full({1, d}, 1.0)};
}

std::set<std::size_t> PiVaeModel::all_reduced() const {
  std::set<std::size_t> s;
  for (std::size_t i = 1; i <= cfg.decoder.n_trainable(); ++i) s.insert(i);
  return s;
}

Tensor PiVaeModel::decode_mean(const Tensor& z_p,
                               const std::vector<Tensor>& z_a,
                               const Tensor& ic,
                               const std::set<std::size_t>& reduce_set,
                               std::size_t steps_override,
                               DecodeMemo* memo) const {
  UnrollConfig cfg_run = cfg.unroll;
  if (steps_override) cfg_run.steps = steps_override;

  const DecoderSpec& spec = cfg.decoder;
  if (memo && spec.has_physics() && spec.variant != Variant::NnOnly) {
    // Pendulum K=2 splits into inner solve + out-equation stage; reuse the
    // inner solve across reduce sets.
    if (spec.experiment == Experiment::Pendulum) {
      const bool phys_only_inner =
          spec.variant == Variant::PhysOnly || reduce_set.count(1);
      std::optional<Tensor>& slot =
          phys_only_inner ? memo->inner_phys : memo->inner_full;
      if (!slot) {
        std::set<std::size_t> inner_reduce{2};
        if (phys_only_inner) inner_reduce.insert(1);
        slot = compose_decoder(spec, params, z_p, z_a, ic, cfg_run,
                               inner_reduce);
      }
      const bool reduce2 =
          spec.variant == Variant::PhysOnly || reduce_set.count(2);
      if (reduce2) return *slot;
      return apply_out_equation(spec, params, *slot, z_a.at(1));
    }
    // AdvDif K=1: just memoize per reduce choice.
    std::optional<Tensor>& slot = (spec.variant == Variant::PhysOnly ||
                                   reduce_set.count(1))
                                      ? memo->inner_phys
                                      : memo->inner_full;
    if (!slot)
      slot = compose_decoder(spec, params, z_p, z_a, ic, cfg_run, reduce_set);
    return *slot;
  }
  return compose_decoder(spec, params, z_p, z_a, ic, cfg_run, reduce_set);
}

DiagGaussian PiVaeModel::decode(const Tensor& z_p,
                                const std::vector<Tensor>& z_a,
                                const Tensor& ic,
                                const std::set<std::size_t>& reduce_set,
                                std::size_t steps_override,
                                DecodeMemo* memo) const {
  Tensor mean = decode_mean(z_p, z_a, ic, reduce_set, steps_override, memo);
  return {mean, obs_var()};
}

Tensor PiVaeModel::physics_only_signal(const Tensor& z_p_star,
                                       const Tensor& ic,
                                       std::size_t steps_override) const {
  if (!has_zp())
    throw TensorError("physics_only_signal: variant " +
                      std::string(variant_name(cfg.decoder.variant)) +
                      " has no physics component");
  return decode_mean(z_p_star, {}, ic, all_reduced(), steps_override);
}

PiVaeModel::ReducedSample PiVaeModel::reduced_posterior_sample(
    const Tensor& x, std::mt19937_64& rng) const {
  EncoderOutput enc = encode(x, rng);
  ReducedSample out;
  out.z_p = enc.z_p;
  std::size_t b = x.rows();
  for (std::size_t k = 0; k < n_za_blocks(); ++k) {
    DiagGaussian prior = za_prior(k);
    prior.mean = broadcast_to(prior.mean, b, prior.mean.cols());
    out.z_a.push_back(reparam_sample(prior, rng));
  }
  return out;
}

namespace {

MlpSpec recog_spec(std::size_t in, std::vector<std::size_t> hidden,
                   std::size_t out_dim, Activation out_act = Activation::None) {
  MlpSpec s;
  s.layer_sizes.push_back(in);
  for (auto h : hidden) s.layer_sizes.push_back(h);
  s.layer_sizes.push_back(out_dim);
  s.output_activation = out_act;
  return s;
}

void add_logvar(ParamStore& store, const std::string& name, ParamGroup group,
                std::size_t dim, double init_var) {
  store.add(name, group,
            Tensor::leaf({1, dim},
                         std::vector<double>(dim, std::log(init_var))));
}

}  // namespace

PiVaeModel build_model(Experiment experiment, Variant variant,
                       std::uint64_t seed) {
  PiVaeModel m;
  ModelConfig& c = m.cfg;
  c.decoder.experiment = experiment;
  c.decoder.variant = variant;
  c.seed = seed;

  const std::vector<std::size_t> recog_hidden_pend{128, 128, 256, 64, 32};
  const std::vector<std::size_t> recog_hidden_adv{256, 256, 256, 64, 32};

  if (experiment == Experiment::Pendulum) {
    c.unroll = {0.05, 50};
    c.x_dim = 50;
    c.zp_prior_mean = 1.9625;
    c.zp_prior_std = 0.589;
    c.gp1_residual = true;
    switch (variant) {
      case Variant::NnPhys:
      case Variant::NnPhysReg:
        c.decoder.dim_za = {1, 2};
        break;
      case Variant::NnSolver:
        c.decoder.dim_za = {2, 2};
        break;
      case Variant::NnOnly:
        c.decoder.dim_za = {4};
        break;
      case Variant::PhysOnly:
        c.decoder.dim_za = {};
        break;
    }
    c.decoder.dim_zp = m.has_zp() ? 1 : 0;
    if (variant == Variant::NnOnly) {
      c.decoder.fa1 = recog_spec(4, {128, 128}, c.x_dim);
    } else if (variant != Variant::PhysOnly) {
      c.decoder.fa1 = recog_spec(1 + c.decoder.dim_za[0], {64, 64}, 1);
      c.decoder.fa2 = recog_spec(c.unroll.steps + c.decoder.dim_za[1],
                                 {128, 128}, c.unroll.steps);
    }
    for (auto d : c.decoder.dim_za)
      c.g_a.push_back(recog_spec(c.x_dim, recog_hidden_pend, d));
    if (m.has_zp()) {
      std::size_t za_total = 0;
      for (auto d : c.decoder.dim_za) za_total += d;
      c.g_p1 = recog_spec(c.x_dim + za_total, {128, 128}, c.x_dim);
      c.g_p2 = recog_spec(c.x_dim, recog_hidden_pend, 1, Activation::Softplus);
    }
  } else {
    c.unroll = {0.02, 50};
    c.decoder.grid_points = 12;
    c.decoder.s_max = 2.0;
    c.x_dim = c.decoder.grid_points * c.unroll.steps;
    c.zp_prior_mean = 0.055;
    c.zp_prior_std = 0.0225;
    c.gp1_residual = false;
    const std::size_t h = c.decoder.grid_points;
    switch (variant) {
      case Variant::NnPhys:
      case Variant::NnPhysReg:
        c.decoder.dim_za = {4};
        break;
      case Variant::NnSolver:
      case Variant::NnOnly:
        c.decoder.dim_za = {5};
        break;
      case Variant::PhysOnly:
        c.decoder.dim_za = {};
        break;
    }
    c.decoder.dim_zp = m.has_zp() ? 1 : 0;
    if (variant == Variant::NnOnly) {
      c.decoder.fa1 = recog_spec(5, {128}, c.x_dim);
    } else if (variant != Variant::PhysOnly) {
      c.decoder.fa1 = recog_spec(h + c.decoder.dim_za[0], {64, 64}, h);
    }
    for (auto d : c.decoder.dim_za)
      c.g_a.push_back(recog_spec(c.x_dim, recog_hidden_adv, d));
    if (m.has_zp()) {
      std::size_t za_total = 0;
      for (auto d : c.decoder.dim_za) za_total += d;
      c.g_p1 = recog_spec(c.x_dim + za_total, {256, 256}, c.x_dim);
      c.g_p2 = recog_spec(c.x_dim, recog_hidden_adv, 1, Activation::Softplus);
    }
  }

  std::mt19937_64 rng(mixed_seed(seed, 0xC0DEBA5Eu));
  // theta: decoder nets + observation noise
  if (variant != Variant::PhysOnly) {
    init_mlp_params(m.params, c.decoder.fa1_prefix, ParamGroup::Theta,
                    c.decoder.fa1, rng);
    if (experiment == Experiment::Pendulum && variant != Variant::NnOnly)
      init_mlp_params(m.params, c.decoder.fa2_prefix, ParamGroup::Theta,
                      c.decoder.fa2, rng);
  }
  add_logvar(m.params, "dec.logvar_x", ParamGroup::Theta, 1, c.sigma_x_init);
  // psi: recognition nets + posterior variances
  for (std::size_t k = 0; k < c.g_a.size(); ++k) {
    std::string id = std::to_string(k + 1);
    init_mlp_params(m.params, "enc.ga" + id, ParamGroup::Psi, c.g_a[k], rng);
    add_logvar(m.params, "enc.logvar_za" + id, ParamGroup::Psi,
               c.decoder.dim_za[k], c.sigma_a_init);
  }
  if (m.has_zp()) {
    init_mlp_params(m.params, "enc.gp1", ParamGroup::Psi, c.g_p1, rng);
    init_mlp_params(m.params, "enc.gp2", ParamGroup::Psi, c.g_p2, rng);
    add_logvar(m.params, "enc.logvar_zp", ParamGroup::Psi, 1, c.sigma_p_init);
  }
  return m;
}

namespace {

void write_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_str(std::ofstream& f, const std::string& s) {
  write_u64(f, s.size());
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t read_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::string read_str(std::ifstream& f) {
  std::string s(read_u64(f), '\0');
  f.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

constexpr char kMagic[] = "PIVAECKPT1";

}  // namespace

void save_checkpoint(const PiVaeModel& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw TensorError("save_checkpoint: cannot write " + path);
  f.write(kMagic, sizeof(kMagic) - 1);
  write_str(f, experiment_name(m.cfg.decoder.experiment));
  write_str(f, variant_name(m.cfg.decoder.variant));
  write_u64(f, m.cfg.seed);
  double dt = m.cfg.unroll.dt;
  f.write(reinterpret_cast<const char*>(&dt), sizeof(dt));
  write_u64(f, m.cfg.unroll.steps);
  write_u64(f, m.params.names().size());
  for (const auto& name : m.params.names()) {
    const Tensor& t = m.params.get(name);
    write_str(f, name);
    write_str(f, group_name(m.params.group_of(name)));
    write_u64(f, t.shape().size());
    for (auto d : t.shape()) write_u64(f, d);
    f.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
}

PiVaeModel load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw TensorError("load_checkpoint: cannot open " + path);
  char magic[sizeof(kMagic) - 1];
  f.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw TensorError("load_checkpoint: bad magic in " + path);
  std::string exp = read_str(f), var = read_str(f);
  std::uint64_t seed = read_u64(f);
  double dt;
  f.read(reinterpret_cast<char*>(&dt), sizeof(dt));
  std::uint64_t steps = read_u64(f);
  PiVaeModel m =
      build_model(experiment_from_name(exp), variant_from_name(var), seed);
  m.cfg.unroll.dt = dt;
  m.cfg.unroll.steps = steps;
  std::uint64_t n = read_u64(f);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = read_str(f);
    read_str(f);  // group, implied by name on rebuild
    std::uint64_t rank = read_u64(f);
    std::size_t numel = 1;
    for (std::uint64_t r = 0; r < rank; ++r) numel *= read_u64(f);
    std::vector<double> buf(numel);
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(numel * sizeof(double)));
    Tensor& t = m.params.get(name);
    if (t.size() != numel)
      throw TensorError("load_checkpoint: size mismatch for " + name);
    t.node()->value = std::move(buf);
  }
  if (!f) throw TensorError("load_checkpoint: truncated file " + path);
  return m;
}

Tensor pack_batch(const std::vector<std::vector<double>>& sequences,
                  const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw TensorError("pack_batch: empty batch");
  std::size_t d = sequences[indices[0]].size();
  std::vector<double> buf;
  buf.reserve(indices.size() * d);
  for (auto i : indices)
    buf.insert(buf.end(), sequences[i].begin(), sequences[i].end());
  return Tensor::from({indices.size(), d}, std::move(buf));
}

}  // namespace pivae

#include "pivae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pivae {

namespace {

using Rhs = std::function<void(double t, const std::vector<double>& y,
                               std::vector<double>& dy)>;

void rk4_step(const Rhs& f, double t, double h, std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// Integrates with `substeps` RK4 steps per observation interval and records
// the state at each observation time (frame 0 = initial state).
std::vector<std::vector<double>> rk4_sample(const Rhs& f,
                                            std::vector<double> y, double dt,
                                            std::size_t tau,
                                            std::size_t substeps) {
  std::vector<std::vector<double>> frames;
  frames.reserve(tau);
  frames.push_back(y);
  const double h = dt / static_cast<double>(substeps);
  for (std::size_t t = 1; t < tau; ++t) {
    double t0 = dt * static_cast<double>(t - 1);
    for (std::size_t s = 0; s < substeps; ++s)
      rk4_step(f, t0 + h * static_cast<double>(s), h, y);
    frames.push_back(y);
  }
  return frames;
}

Rhs pendulum_rhs(const PendulumTruth& p) {
  return [p](double t, const std::vector<double>& y, std::vector<double>& dy) {
    dy[0] = y[1];
    dy[1] = -p.omega * p.omega * std::sin(y[0]) - p.xi * y[1] +
            p.amp * p.omega * p.omega *
                std::cos(2.0 * std::numbers::pi * p.phi * t);
  };
}

Rhs advdif_rhs(const AdvDifTruth& p, std::size_t h_pts, double s_max) {
  const double ds = s_max / static_cast<double>(h_pts - 1);
  return [p, h_pts, ds](double, const std::vector<double>& y,
                        std::vector<double>& dy) {
    dy[0] = 0.0;
    dy[h_pts - 1] = 0.0;
    for (std::size_t i = 1; i + 1 < h_pts; ++i) {
      double diff = p.a * (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (ds * ds);
      double adv = p.b * (y[i + 1] - y[i - 1]) / (2.0 * ds);
      dy[i] = diff - adv;
    }
  };
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

std::uint64_t mixed_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over (seed, index)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> pendulum_reference(const PendulumTruth& t, double dt,
                                       std::size_t tau, std::size_t substeps) {
  auto frames = rk4_sample(pendulum_rhs(t), {t.theta0, 0.0}, dt, tau, substeps);
  std::vector<double> out(tau);
  for (std::size_t i = 0; i < tau; ++i) out[i] = frames[i][0];
  return out;
}

std::vector<double> advdif_reference(const AdvDifTruth& t, double dt,
                                     std::size_t tau, std::size_t grid_points,
                                     double s_max, std::size_t substeps) {
  std::vector<double> y0(grid_points);
  const double ds = s_max / static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < grid_points; ++i)
    y0[i] = t.c * std::sin(std::numbers::pi * ds * static_cast<double>(i) /
                           s_max);
  y0.front() = 0.0;
  y0.back() = 0.0;
  auto frames =
      rk4_sample(advdif_rhs(t, grid_points, s_max), y0, dt, tau, substeps);
  std::vector<double> out;
  out.reserve(tau * grid_points);
  for (const auto& f : frames) out.insert(out.end(), f.begin(), f.end());
  return out;
}

SequenceDataset gen_pendulum(std::size_t n, std::uint64_t seed,
                             std::size_t horizon_steps, double dt) {
  SequenceDataset ds;
  ds.meta = {"pendulum", dt, horizon_steps, 0, 0.0, 0.01, seed, "all"};
  ds.sequences.reserve(n);
  ds.pendulum_truths.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(mixed_seed(seed, i));
    PendulumTruth t;
    t.omega = uniform(rng, 0.785, 3.14);
    t.xi = uniform(rng, 0.0, 0.8);
    t.phi = uniform(rng, 3.14, 6.28);
    t.amp = uniform(rng, 0.0, 40.0);
    t.theta0 = uniform(rng, -1.57, 1.57);
    std::vector<double> x = pendulum_reference(t, dt, horizon_steps);
    std::normal_distribution<double> noise(0.0, ds.meta.noise_std);
    for (auto& v : x) v += noise(rng);
    ds.sequences.push_back(std::move(x));
    ds.pendulum_truths.push_back(t);
  }
  return ds;
}

SequenceDataset gen_advdif(std::size_t n, std::uint64_t seed,
                           std::size_t horizon_steps, double dt) {
  SequenceDataset ds;
  ds.meta = {"advdif", dt, horizon_steps, 12, 2.0, 0.001, seed, "all"};
  ds.sequences.reserve(n);
  ds.advdif_truths.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(mixed_seed(seed, i));
    AdvDifTruth t;
    t.a = uniform(rng, 0.01, 0.1);
    t.b = uniform(rng, 0.01, 0.1);
    t.c = uniform(rng, 0.5, 1.5);
    std::vector<double> x = advdif_reference(t, dt, horizon_steps,
                                             ds.meta.grid_points,
                                             ds.meta.s_max);
    std::normal_distribution<double> noise(0.0, ds.meta.noise_std);
    for (auto& v : x) v += noise(rng);
    ds.sequences.push_back(std::move(x));
    ds.advdif_truths.push_back(t);
  }
  return ds;
}

namespace {

SequenceDataset take(const SequenceDataset& ds,
                     const std::vector<std::size_t>& idx,
                     const std::string& split_name) {
  SequenceDataset out;
  out.meta = ds.meta;
  out.meta.split_name = split_name;
  for (auto i : idx) {
    out.sequences.push_back(ds.sequences[i]);
    if (ds.is_pendulum())
      out.pendulum_truths.push_back(ds.pendulum_truths[i]);
    else
      out.advdif_truths.push_back(ds.advdif_truths[i]);
  }
  return out;
}

}  // namespace

DatasetSplits split(const SequenceDataset& ds, const SplitSizes& sizes,
                    std::uint64_t seed) {
  if (sizes.train + sizes.valid + sizes.test > ds.size())
    throw std::invalid_argument("split: requested sizes exceed dataset size");
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(mixed_seed(seed, 0x5011Bu));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> valid_idx(idx.begin(), idx.begin() + sizes.valid);
  std::vector<std::size_t> test_idx(idx.begin() + sizes.valid,
                                    idx.begin() + sizes.valid + sizes.test);
  std::vector<std::size_t> rest(idx.begin() + sizes.valid + sizes.test,
                                idx.end());
  std::shuffle(rest.begin(), rest.end(), rng);
  std::vector<std::size_t> train_idx(rest.begin(), rest.begin() + sizes.train);
  return {take(ds, train_idx, "train"), take(ds, valid_idx, "valid"),
          take(ds, test_idx, "test")};
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> truth_columns(const SequenceDataset& ds) {
  if (ds.is_pendulum()) return {"omega", "xi", "amp", "phi", "theta0"};
  return {"a", "b", "c"};
}

}  // namespace

void save_dataset(const SequenceDataset& ds, const std::string& stem) {
  {
    std::ofstream meta(stem + ".meta");
    if (!meta) throw std::runtime_error("save_dataset: cannot write " + stem);
    meta << "experiment = " << ds.meta.experiment << "\n"
         << "dt = " << fmt17(ds.meta.dt) << "\n"
         << "tau = " << ds.meta.tau << "\n"
         << "grid_points = " << ds.meta.grid_points << "\n"
         << "s_max = " << fmt17(ds.meta.s_max) << "\n"
         << "noise_std = " << fmt17(ds.meta.noise_std) << "\n"
         << "seed = " << ds.meta.seed << "\n"
         << "split_name = " << ds.meta.split_name << "\n";
  }
  std::ofstream csv(stem + ".csv");
  if (!csv) throw std::runtime_error("save_dataset: cannot write " + stem);
  auto cols = truth_columns(ds);
  std::size_t d = ds.sequences.empty() ? 0 : ds.sequences[0].size();
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  for (std::size_t j = 0; j < d; ++j) csv << ",x" << j;
  csv << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> truth;
    if (ds.is_pendulum()) {
      const auto& t = ds.pendulum_truths[i];
      truth = {t.omega, t.xi, t.amp, t.phi, t.theta0};
    } else {
      const auto& t = ds.advdif_truths[i];
      truth = {t.a, t.b, t.c};
    }
    bool first = true;
    for (double v : truth) {
      csv << (first ? "" : ",") << fmt17(v);
      first = false;
    }
    for (double v : ds.sequences[i]) csv << "," << fmt17(v);
    csv << "\n";
  }
}

namespace {

std::string meta_value(const std::string& line) {
  auto eq = line.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("load_dataset: malformed meta line: " + line);
  auto v = line.substr(eq + 1);
  auto s = v.find_first_not_of(" \t");
  return s == std::string::npos ? "" : v.substr(s);
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("load_dataset: non-numeric cell at row " +
                             std::to_string(row) + ", column " +
                             std::to_string(col) + ": '" + cell + "'");
  }
  if (pos != cell.size())
    throw std::runtime_error("load_dataset: trailing junk at row " +
                             std::to_string(row) + ", column " +
                             std::to_string(col));
  return v;
}

}  // namespace

SequenceDataset load_dataset(const std::string& stem) {
  SequenceDataset ds;
  {
    std::ifstream meta(stem + ".meta");
    if (!meta)
      throw std::runtime_error("load_dataset: cannot open " + stem + ".meta");
    std::string line;
    while (std::getline(meta, line)) {
      if (line.empty()) continue;
      if (line.starts_with("experiment")) ds.meta.experiment = meta_value(line);
      else if (line.starts_with("dt")) ds.meta.dt = std::stod(meta_value(line));
      else if (line.starts_with("tau")) ds.meta.tau = std::stoul(meta_value(line));
      else if (line.starts_with("grid_points"))
        ds.meta.grid_points = std::stoul(meta_value(line));
      else if (line.starts_with("s_max"))
        ds.meta.s_max = std::stod(meta_value(line));
      else if (line.starts_with("noise_std"))
        ds.meta.noise_std = std::stod(meta_value(line));
      else if (line.starts_with("seed"))
        ds.meta.seed = std::stoull(meta_value(line));
      else if (line.starts_with("split_name"))
        ds.meta.split_name = meta_value(line);
    }
  }
  std::ifstream csv(stem + ".csv");
  if (!csv)
    throw std::runtime_error("load_dataset: cannot open " + stem + ".csv");
  std::string line;
  if (!std::getline(csv, line))
    throw std::runtime_error("load_dataset: empty CSV " + stem + ".csv");
  std::size_t n_cols = static_cast<std::size_t>(
      std::count(line.begin(), line.end(), ',') + 1);
  std::size_t n_truth = ds.is_pendulum() ? 5 : 3;
  if (n_cols <= n_truth)
    throw std::runtime_error("load_dataset: header has too few columns");
  std::size_t row = 1;
  while (std::getline(csv, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> cells;
    cells.reserve(n_cols);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(parse_cell(cell, row, cells.size()));
    if (cells.size() != n_cols)
      throw std::runtime_error("load_dataset: row " + std::to_string(row) +
                               " has " + std::to_string(cells.size()) +
                               " columns, expected " + std::to_string(n_cols));
    if (ds.is_pendulum())
      ds.pendulum_truths.push_back(
          {cells[0], cells[1], cells[2], cells[3], cells[4]});
    else
      ds.advdif_truths.push_back({cells[0], cells[1], cells[2]});
    ds.sequences.emplace_back(cells.begin() + n_truth, cells.end());
  }
  return ds;
}

}  // namespace pivae

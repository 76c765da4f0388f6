#include "gkhybrid/problems.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gkh {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::heat: return "heat";
    case ProblemKind::seismic: return "seismic";
    case ProblemKind::superres: return "superres";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "heat") return ProblemKind::heat;
  if (s == "seismic") return ProblemKind::seismic;
  if (s == "superres") return ProblemKind::superres;
  throw std::invalid_argument("unknown problem kind '" + s + "'");
}

Vector scaled_noise(const Vector& d_clean, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
  Vector e = Vector::Zero(d_clean.size());
  if (level == 0.0) return e;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < e.size(); ++i) e(i) = normal(rng);
  const double en = e.norm();
  if (!(en > 0.0)) throw std::runtime_error("scaled_noise: degenerate noise draw");
  return e * (level * d_clean.norm() / en);
}

Matrix heat_matrix(Index n) {
  if (n < 8) throw std::invalid_argument("heat: n must be >= 8");
  const double h = 1.0 / static_cast<double>(n);
  constexpr double kappa = 1.0;
  const double c = h / (2.0 * kappa * std::sqrt(std::numbers::pi));
  const double dd = 1.0 / (4.0 * kappa * kappa);
  Vector k(n);
  for (Index i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * h;
    k(i) = c * std::pow(t, -1.5) * std::exp(-dd / t);
  }
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) a(i, j) = k(i - j);
  }
  return a;
}

Vector heat_truth(Index n) {
  if (n < 8) throw std::invalid_argument("heat: n must be >= 8");
  Vector x = Vector::Zero(n);
  const Index half = n / 2;
  for (Index i = 1; i <= half; ++i) {
    const double ti = 20.0 * static_cast<double>(i) / static_cast<double>(n);
    double v;
    if (ti < 2.0) {
      v = 0.75 * ti * ti / 4.0;
    } else if (ti < 3.0) {
      v = 0.75 + (ti - 2.0) * (3.0 - ti);
    } else {
      v = 0.75 * std::exp(-(ti - 3.0) * 2.0);
    }
    x(i - 1) = v;
  }
  return x;
}

ProblemInstance heat_problem(const HeatSpec& spec) {
  ProblemInstance inst;
  inst.kind = ProblemKind::heat;
  inst.A = std::make_shared<DenseOperator>(heat_matrix(spec.n));
  inst.s_true = heat_truth(spec.n);
  inst.d_clean = inst.A->apply(inst.s_true);
  const Vector e = scaled_noise(inst.d_clean, spec.noise_level, spec.seed);
  inst.d = inst.d_clean + e;
  inst.R = NoiseModel::identity(spec.n);
  inst.noise_level = spec.noise_level;
  inst.noise_variance = e.squaredNorm() / static_cast<double>(spec.n);
  inst.geometry = GridGeometry::line(spec.n, 1.0 / static_cast<double>(spec.n));
  inst.seed = spec.seed;
  std::ostringstream s;
  s << "heat(n=" << spec.n << ", noise=" << spec.noise_level << ")";
  inst.description = s.str();
  return inst;
}

}  // namespace gkh

#include "gkhybrid/problems.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gkh {

RayGeometry make_ray_geometry(Index n_side, Index n_sou, Index n_rec, double domain_length) {
  if (n_side < 8) throw std::invalid_argument("seismic: n_side must be >= 8");
  if (n_sou < 1 || n_rec < 1) throw std::invalid_argument("seismic: need at least one source and receiver");
  if (!(domain_length > 0.0)) throw std::invalid_argument("seismic: domain_length must be positive");
  RayGeometry g;
  g.n_side = n_side;
  g.n_sou = n_sou;
  g.n_rec = n_rec;
  g.domain_length = domain_length;
  g.sources.resize(n_sou, 2);
  g.receivers.resize(n_rec, 2);
  for (Index i = 0; i < n_sou; ++i) {
    g.sources(i, 0) = 0.0;
    g.sources(i, 1) = (static_cast<double>(i) + 0.5) * domain_length / static_cast<double>(n_sou);
  }
  for (Index i = 0; i < n_rec; ++i) {
    g.receivers(i, 0) = domain_length;
    g.receivers(i, 1) = (static_cast<double>(i) + 0.5) * domain_length / static_cast<double>(n_rec);
  }
  return g;
}

namespace {

// Appends (cell, length) pairs for the segment p -> q through the grid.
void trace_ray(double px, double py, double qx, double qy, Index n_side, double h,
               std::vector<Eigen::Triplet<double, Index>>& out, Index row) {
  const double dx = qx - px;
  const double dy = qy - py;
  const double len = std::hypot(dx, dy);
  if (!(len > 0.0)) throw std::invalid_argument("seismic: degenerate ray (source equals receiver)");

  std::vector<double> ts{0.0, 1.0};
  for (Index i = 0; i <= n_side; ++i) {
    const double line = static_cast<double>(i) * h;
    if (dx != 0.0) {
      const double t = (line - px) / dx;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
    if (dy != 0.0) {
      const double t = (line - py) / dy;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  const auto clamp_cell = [n_side](double c) {
    return std::clamp<Index>(static_cast<Index>(std::floor(c)), 0, n_side - 1);
  };
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double dt = ts[k + 1] - ts[k];
    if (dt <= 0.0) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const Index i0 = clamp_cell((px + tm * dx) / h);
    const Index i1 = clamp_cell((py + tm * dy) / h);
    out.emplace_back(row, i0 + n_side * i1, dt * len);
  }
}

}  // namespace

SparseMatrix ray_matrix(const RayGeometry& g) {
  const Index n = g.n_side * g.n_side;
  const double h = g.domain_length / static_cast<double>(g.n_side);
  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(g.rays() * 3 * g.n_side));
  for (Index s = 0; s < g.n_sou; ++s) {
    for (Index r = 0; r < g.n_rec; ++r) {
      trace_ray(g.sources(s, 0), g.sources(s, 1), g.receivers(r, 0), g.receivers(r, 1), g.n_side,
                h, trips, s * g.n_rec + r);
    }
  }
  SparseMatrix a(g.rays(), n);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

Vector kl_field(const SeismicSpec& spec) {
  if (spec.n_side < 8) throw std::invalid_argument("seismic: n_side must be >= 8");
  if (!(spec.kl_theta > 0.0) || !(spec.kl_length > 0.0)) {
    throw std::invalid_argument("seismic: kl_theta and kl_length must be positive");
  }
  const Index ns = spec.n_side;
  const Index n = ns * ns;
  if (spec.kl_terms < 1 || spec.kl_terms > n) throw std::invalid_argument("seismic: kl_terms out of range");

  // The kernel separates over the axes, so the 2D eigenpairs are products of
  // the 1D ones.
  const double h = spec.domain_length / static_cast<double>(ns);
  Matrix k1(ns, ns);
  for (Index i = 0; i < ns; ++i) {
    for (Index j = 0; j < ns; ++j) {
      const double r = static_cast<double>(i - j) * h / spec.kl_length;
      k1(i, j) = std::exp(-r * r);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(k1);
  const Vector& w = es.eigenvalues();
  const Matrix& v = es.eigenvectors();

  struct Pair {
    double value;
    Index a;
    Index b;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (Index a = 0; a < ns; ++a) {
    for (Index b = 0; b < ns; ++b) pairs.push_back({spec.kl_theta * w(a) * w(b), a, b});
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& x, const Pair& y) { return x.value > y.value; });

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector s = Vector::Constant(n, spec.kl_mean);
  for (Index k = 0; k < spec.kl_terms; ++k) {
    const Pair& p = pairs[static_cast<std::size_t>(k)];
    const double amp = std::sqrt(std::max(p.value, 0.0)) * normal(rng);
    for (Index i1 = 0; i1 < ns; ++i1) {
      s.segment(i1 * ns, ns) += (amp * v(i1, p.b)) * v.col(p.a);
    }
  }
  return s;
}

ProblemInstance seismic_problem(const SeismicSpec& spec) {
  ProblemInstance inst;
  inst.kind = ProblemKind::seismic;
  RayGeometry g = make_ray_geometry(spec.n_side, spec.n_sou, spec.n_rec, spec.domain_length);
  inst.A = std::make_shared<SparseOperator>(ray_matrix(g));
  inst.s_true = kl_field(spec);
  inst.d_clean = inst.A->apply(inst.s_true);
  // Separate stream from the KL coefficients.
  const Vector e = scaled_noise(inst.d_clean, spec.noise_level, spec.seed ^ 0x9e3779b97f4a7c15ULL);
  inst.d = inst.d_clean + e;
  const Index m = inst.A->rows();
  inst.R = NoiseModel::identity(m);
  inst.noise_level = spec.noise_level;
  inst.noise_variance = e.squaredNorm() / static_cast<double>(m);
  const double h = spec.domain_length / static_cast<double>(spec.n_side);
  inst.geometry = GridGeometry::plane(spec.n_side, spec.n_side, h, h);
  inst.seed = spec.seed;
  inst.rays = std::move(g);
  std::ostringstream s;
  s << "seismic(n_side=" << spec.n_side << ", n_sou=" << spec.n_sou << ", n_rec=" << spec.n_rec
    << ", L=" << spec.domain_length << ", noise=" << spec.noise_level << ")";
  inst.description = s.str();
  return inst;
}

}  // namespace gkh

#include "gkhybrid/problems.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gkh {

std::vector<Motion> default_motions(Index frames, double max_angle_deg) {
  if (frames < 1) throw std::invalid_argument("superres: frames must be >= 1");
  std::vector<Motion> out(static_cast<std::size_t>(frames));
  for (Index k = 0; k < frames; ++k) {
    const double t = frames == 1 ? 0.0
                                 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(frames - 1);
    out[static_cast<std::size_t>(k)].angle_deg = t * max_angle_deg;
  }
  return out;
}

SparseMatrix interpolation_matrix(Index hi_side, const Motion& motion, SuperResGeometry* tally) {
  if (hi_side < 2) throw std::invalid_argument("superres: hi_side must be >= 2");
  const Index n = hi_side * hi_side;
  const double c = 0.5 * static_cast<double>(hi_side - 1);
  const double th = motion.angle_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(th);
  const double st = std::sin(th);

  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(4 * n));
  Index renorm = 0;
  Index zero = 0;
  for (Index i1 = 0; i1 < hi_side; ++i1) {
    for (Index i0 = 0; i0 < hi_side; ++i0) {
      const double r0 = static_cast<double>(i0) - c;
      const double r1 = static_cast<double>(i1) - c;
      const double p0 = ct * r0 - st * r1 + c + motion.shift0;
      const double p1 = st * r0 + ct * r1 + c + motion.shift1;
      const double f0 = std::floor(p0);
      const double f1 = std::floor(p1);
      const double w0 = p0 - f0;
      const double w1 = p1 - f1;
      const Index row = i0 + hi_side * i1;

      Index cells[4];
      double weights[4];
      int count = 0;
      double total = 0.0;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double w = (a ? w0 : 1.0 - w0) * (b ? w1 : 1.0 - w1);
          const double j0 = f0 + a;
          const double j1 = f1 + b;
          if (w <= 0.0) continue;
          if (j0 < 0.0 || j1 < 0.0 || j0 > static_cast<double>(hi_side - 1) ||
              j1 > static_cast<double>(hi_side - 1)) {
            continue;
          }
          cells[count] = static_cast<Index>(j0) + hi_side * static_cast<Index>(j1);
          weights[count] = w;
          total += w;
          ++count;
        }
      }
      if (count == 0 || !(total > 0.0)) {
        ++zero;
        continue;
      }
      const bool lost = total < 1.0 - 1e-12;
      if (lost) ++renorm;
      for (int q = 0; q < count; ++q) {
        trips.emplace_back(row, cells[q], lost ? weights[q] / total : weights[q]);
      }
    }
  }
  SparseMatrix s(n, n);
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  if (tally) {
    tally->renormalized_rows += renorm;
    tally->zero_rows += zero;
  }
  return s;
}

SparseMatrix restriction_matrix(Index hi_side, Index factor) {
  if (factor < 1 || hi_side % factor != 0) {
    std::ostringstream msg;
    msg << "superres: hi_side " << hi_side << " is not divisible by lo_factor " << factor;
    throw std::invalid_argument(msg.str());
  }
  const Index lo = hi_side / factor;
  const double w = 1.0 / static_cast<double>(factor * factor);
  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(hi_side * hi_side));
  for (Index j1 = 0; j1 < lo; ++j1) {
    for (Index j0 = 0; j0 < lo; ++j0) {
      for (Index b = 0; b < factor; ++b) {
        for (Index a = 0; a < factor; ++a) {
          trips.emplace_back(j0 + lo * j1, (j0 * factor + a) + hi_side * (j1 * factor + b), w);
        }
      }
    }
  }
  SparseMatrix d(lo * lo, hi_side * hi_side);
  d.setFromTriplets(trips.begin(), trips.end());
  d.makeCompressed();
  return d;
}

Vector smooth_phantom(Index side) {
  if (side < 2) throw std::invalid_argument("superres: phantom side must be >= 2");
  Vector img(side * side);
  for (Index i1 = 0; i1 < side; ++i1) {
    for (Index i0 = 0; i0 < side; ++i0) {
      const double x = (static_cast<double>(i0) + 0.5) / static_cast<double>(side);
      const double y = (static_cast<double>(i1) + 0.5) / static_cast<double>(side);
      const double head = 0.5 * (1.0 - std::tanh(40.0 * (std::hypot((x - 0.5) / 0.42, (y - 0.5) / 0.36) - 1.0)));
      const double blob1 = std::exp(-(std::pow(x - 0.38, 2) + std::pow(y - 0.42, 2)) / 0.012);
      const double blob2 = std::exp(-(std::pow(x - 0.64, 2) + std::pow(y - 0.60, 2)) / 0.004);
      const double band = 0.5 * (1.0 - std::tanh(30.0 * (std::abs(y - 0.72) - 0.05)));
      img(i0 + side * i1) = head * (0.35 + 0.45 * blob1 + 0.2 * band * (x > 0.3 && x < 0.7)) + 0.3 * blob2;
    }
  }
  return img / img.maxCoeff();
}

ProblemInstance superres_problem(const SuperResSpec& spec) {
  if (spec.frames < 1) throw std::invalid_argument("superres: frames must be >= 1");
  const Index hs = spec.hi_side;
  const SparseMatrix dmat = restriction_matrix(hs, spec.lo_factor);

  SuperResGeometry geo;
  geo.hi_side = hs;
  geo.lo_factor = spec.lo_factor;
  geo.motions = spec.motions.empty() ? default_motions(spec.frames, spec.max_angle_deg) : spec.motions;
  if (static_cast<Index>(geo.motions.size()) != spec.frames) {
    throw std::invalid_argument("superres: number of motions must equal frames");
  }

  const Index lo2 = dmat.rows();
  const Index n = hs * hs;
  std::vector<Eigen::Triplet<double, Index>> trips;
  for (Index k = 0; k < spec.frames; ++k) {
    const SparseMatrix block = dmat * interpolation_matrix(hs, geo.motions[static_cast<std::size_t>(k)], &geo);
    for (Index r = 0; r < block.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(block, r); it; ++it) {
        trips.emplace_back(k * lo2 + r, it.col(), it.value());
      }
    }
  }
  SparseMatrix a(spec.frames * lo2, n);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();

  ProblemInstance inst;
  inst.kind = ProblemKind::superres;
  inst.A = std::make_shared<SparseOperator>(std::move(a));
  if (spec.image.size() == 0) {
    inst.s_true = smooth_phantom(hs);
  } else {
    if (spec.image.size() != n) throw std::invalid_argument("superres: image size does not match hi_side");
    inst.s_true = spec.image;
  }
  inst.d_clean = inst.A->apply(inst.s_true);
  const Vector e = scaled_noise(inst.d_clean, spec.noise_level, spec.seed);
  inst.d = inst.d_clean + e;
  const Index m = inst.A->rows();
  inst.R = NoiseModel::identity(m);
  inst.noise_level = spec.noise_level;
  inst.noise_variance = e.squaredNorm() / static_cast<double>(m);
  inst.geometry = GridGeometry::plane(hs, hs, 1.0, 1.0);
  inst.seed = spec.seed;
  std::ostringstream s;
  s << "superres(hi_side=" << hs << ", frames=" << spec.frames << ", lo_factor=" << spec.lo_factor
    << ", noise=" << spec.noise_level << ", renormalized_rows=" << geo.renormalized_rows
    << ", zero_rows=" << geo.zero_rows << ")";
  inst.description = s.str();
  inst.superres = std::move(geo);
  return inst;
}

}  // namespace gkh

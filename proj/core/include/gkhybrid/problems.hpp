#pragma once

#include "gkhybrid/covariance.hpp"
#include "gkhybrid/linop.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gkh {

enum class ProblemKind { heat, seismic, superres };

std::string to_string(ProblemKind k);
ProblemKind parse_problem_kind(const std::string& s);

/// Sources on the left edge (x = 0), receivers on the right edge (x = L), both
/// at y = (i + 1/2) L / count. Cells form an n_side x n_side grid over [0, L]^2.
struct RayGeometry {
  Index n_side = 0;
  Index n_sou = 0;
  Index n_rec = 0;
  double domain_length = 0.0;
  Matrix sources;    // n_sou x 2
  Matrix receivers;  // n_rec x 2

  Index rays() const noexcept { return n_sou * n_rec; }
};

struct Motion {
  double angle_deg = 0.0;
  double shift0 = 0.0;  // in high-resolution pixels along axis 0
  double shift1 = 0.0;
};

struct SuperResGeometry {
  Index hi_side = 0;
  Index lo_factor = 1;
  std::vector<Motion> motions;
  /// Interpolation rows that lost weight at the boundary and were renormalized.
  Index renormalized_rows = 0;
  /// Interpolation rows with no in-domain weight (left zero).
  Index zero_rows = 0;

  Index lo_side() const noexcept { return hi_side / lo_factor; }
};

struct ProblemInstance {
  ProblemKind kind = ProblemKind::heat;
  OperatorPtr A;
  Vector s_true;
  Vector d_clean;
  Vector d;
  NoiseModel R = NoiseModel::identity(1);
  /// ||d - d_clean|| / ||d_clean||, hit exactly.
  double noise_level = 0.0;
  /// ||d - d_clean||^2 / m.
  double noise_variance = 0.0;
  GridGeometry geometry;
  std::uint64_t seed = 0;
  std::optional<RayGeometry> rays;
  std::optional<SuperResGeometry> superres;
  std::string description;

  Index m() const { return A->rows(); }
  Index n() const { return A->cols(); }
};

/// White Gaussian noise scaled so that ||eps|| = level * ||d_clean|| exactly.
Vector scaled_noise(const Vector& d_clean, double level, std::uint64_t seed);

/// Midpoint discretization of the Volterra heat kernel with unit conductivity
/// on t in (0, 1]; lower-triangular Toeplitz. Truth is the standard piecewise
/// smooth profile on the first half of the interval.
struct HeatSpec {
  Index n = 64;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

ProblemInstance heat_problem(const HeatSpec& spec);
Matrix heat_matrix(Index n);
Vector heat_truth(Index n);

struct SeismicSpec {
  Index n_side = 64;
  Index n_sou = 20;
  Index n_rec = 20;
  double domain_length = 1000.0;
  double noise_level = 0.02;
  double kl_theta = 1e-3;
  double kl_mean = 0.08;
  double kl_length = 100.0;
  Index kl_terms = 20;
  std::uint64_t seed = 0;
};

RayGeometry make_ray_geometry(Index n_side, Index n_sou, Index n_rec, double domain_length);
/// Row r = i_sou * n_rec + i_rec holds the intersection length of that ray
/// with every cell.
SparseMatrix ray_matrix(const RayGeometry& geometry);
/// Truncated KL expansion of theta exp(-(r/L)^2) on cell centers.
Vector kl_field(const SeismicSpec& spec);
ProblemInstance seismic_problem(const SeismicSpec& spec);

struct SuperResSpec {
  Index hi_side = 64;
  Index frames = 5;
  Index lo_factor = 4;
  /// Empty: angles equispaced in [-max_angle_deg, max_angle_deg], zero shifts.
  std::vector<Motion> motions;
  double max_angle_deg = 2.0;
  double noise_level = 0.02;
  std::uint64_t seed = 0;
  /// Optional hi_side x hi_side truth in [0, 1], axis 0 fastest; empty uses
  /// the built-in phantom.
  Vector image;
};

std::vector<Motion> default_motions(Index frames, double max_angle_deg);
/// Bilinear resampling of a hi_side^2 image under motion; counts are added to
/// the geometry's renormalized/zero row tallies when supplied.
SparseMatrix interpolation_matrix(Index hi_side, const Motion& motion,
                                  SuperResGeometry* tally = nullptr);
/// Block-mean restriction from hi_side^2 to (hi_side/factor)^2.
SparseMatrix restriction_matrix(Index hi_side, Index factor);
Vector smooth_phantom(Index side);
ProblemInstance superres_problem(const SuperResSpec& spec);

// Serialization -------------------------------------------------------------

/// Everything in a ProblemInstance except the operator.
struct InstanceData {
  ProblemKind kind = ProblemKind::heat;
  std::uint64_t seed = 0;
  double noise_level = 0.0;
  GridGeometry geometry;
  Vector s_true;
  Vector d_clean;
  Vector d;
  Vector r_diag;
};

inline constexpr std::uint32_t kInstanceFormatVersion = 1;

/// Little-endian binary: "GKHB", u32 version, u32 kind, u64 m, u64 n, u64 seed,
/// f64 noise_level, u32 dims, u64 shape[2], f64 spacing[2], then s_true (n),
/// d_clean (m), d (m), diag(R) (m) as f64.
void write_instance(std::ostream& out, const ProblemInstance& inst);
void write_instance(const std::string& path, const ProblemInstance& inst);
InstanceData read_instance(std::istream& in);
InstanceData read_instance(const std::string& path);

/// Two-section CSV: "# model" rows index,s_true then "# data" rows index,d_clean,d,r.
void write_instance_csv(std::ostream& out, const ProblemInstance& inst);

struct PgmScaling {
  double min = 0.0;
  double max = 0.0;
};

/// 8-bit binary PGM with linear min-max scaling; axis 0 is the image row.
/// A sidecar `<path>.txt` records the scaling.
PgmScaling write_pgm(const std::string& path, const Vector& values, Index side0, Index side1);
/// Grayscale image scaled to [0, 1]; axis 0 fastest in the returned vector.
Vector read_pgm(const std::string& path, Index* side0, Index* side1);

}  // namespace gkh

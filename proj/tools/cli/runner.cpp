#include "runner.hpp"

#include "gkhybrid/covariance.hpp"
#include "gkhybrid/reference.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace gkh::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Files are written as `<name>.partial` and renamed only once the whole run
// has succeeded.
class OutputSet {
public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  fs::path partial(const std::string& name) {
    names_.push_back(name);
    return dir_ / (name + ".partial");
  }
  std::ofstream open(const std::string& name) {
    std::ofstream out(partial(name), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    return out;
  }
  void commit() {
    for (const auto& n : names_) {
      const fs::path from = dir_ / (n + ".partial");
      if (fs::exists(from)) fs::rename(from, dir_ / n);
    }
  }
  const fs::path& dir() const { return dir_; }

private:
  fs::path dir_;
  std::vector<std::string> names_;
};

void write_pgm_pair(OutputSet& out, const std::string& name, const Vector& v, const GridGeometry& g) {
  const fs::path img = out.partial(name);
  out.partial(name + ".txt");
  write_pgm(img.string(), v, g.shape[0], g.shape[1]);
  // write_pgm places its sidecar next to the image path.
  fs::rename(img.string() + ".txt", out.dir() / (name + ".txt.partial"));
}

void write_orthogonality_csv(std::ostream& o, const GenGK& basis) {
  const Index nu = basis.stored_u();
  const Index nv = basis.stored_v();
  Matrix ru(basis.m(), nu);
  for (Index j = 0; j < nu; ++j) ru.col(j) = basis.noise().apply_inverse(basis.U(nu).col(j));
  const Matrix gu = basis.U(nu).transpose() * ru;
  const Matrix gv = basis.V(nv).transpose() * basis.QV(nv);
  auto dev = [](const Matrix& g, Index c) {
    if (c <= 0) return 0.0;
    return (g.topLeftCorner(c, c) - Matrix::Identity(c, c)).cwiseAbs().maxCoeff();
  };
  o << "# gkhybrid gengk v1\nk,alpha,beta,orth_u,orth_v\n";
  for (Index k = 1; k <= basis.k(); ++k) {
    o << k << ',' << num(basis.alpha(k)) << ',' << num(basis.beta(k + 1)) << ','
      << num(dev(gu, std::min(k + 1, nu))) << ',' << num(dev(gv, std::min(k, nv))) << '\n';
  }
}

void write_spectra_csv(std::ostream& o, const GenGK& basis, const std::vector<Index>& ks,
                       const Vector* gsvd_sigma) {
  o << "# gkhybrid spectra v1\nk,i,sigma_b,sigma_b_sq,sigma_bbar,sigma_gsvd\n";
  const Vector alphas = basis.alphas();
  const Vector betas = basis.betas();
  for (Index k : ks) {
    if (k > basis.k()) continue;
    const Matrix b = make_bidiagonal(alphas, betas, k);
    Matrix bbar(k + 1, k);
    bbar.topRows(k) = b.transpose() * b;
    bbar.row(k).setZero();
    bbar(k, k - 1) = betas(k) * alphas(k);
    const Vector sb = Eigen::JacobiSVD<Matrix>(b).singularValues();
    const Vector sbb = Eigen::JacobiSVD<Matrix>(bbar).singularValues();
    for (Index i = 0; i < k; ++i) {
      const double g = gsvd_sigma && i < gsvd_sigma->size() ? (*gsvd_sigma)(i)
                                                             : std::numeric_limits<double>::quiet_NaN();
      o << k << ',' << i + 1 << ',' << num(sb(i)) << ',' << num(sb(i) * sb(i)) << ',' << num(sbb(i)) << ','
        << num(g) << '\n';
    }
  }
}

Matrix dense_prior(const PriorConfig* prior, const ProblemInstance& inst) {
  const Index n = inst.n();
  if (!prior || prior->identity) return Matrix::Identity(n, n);
  return assemble_dense(prior->kernel, inst.geometry);
}

const PriorConfig* default_prior(const RunConfig& cfg) {
  if (const PriorConfig* p = cfg.find_prior("default")) return p;
  return cfg.priors.empty() ? nullptr : &cfg.priors.front();
}

void write_picard_csv(std::ostream& o, const ProblemInstance& inst, const PriorConfig* prior) {
  const Index n = inst.n();
  if (n > reference::kDenseLimit) {
    throw std::runtime_error("picard: n = " + std::to_string(n) + " exceeds the dense limit of " +
                             std::to_string(reference::kDenseLimit));
  }
  const Matrix a = to_dense(*inst.A);
  const Matrix q = dense_prior(prior, inst);
  const Matrix r = reference::dense(inst.R);
  const auto f = reference::gsvd(a, q, r);
  const auto tg = reference::picard_data(f, inst.d);
  const Matrix ar = inst.R.inv_sqrt_diag().asDiagonal() * a;
  const auto ts = reference::picard_data_svd(ar, inst.R.inv_sqrt_diag().cwiseProduct(inst.d));
  o << "# gkhybrid picard v1\nj,sigma_svd,coef_svd,ratio_svd,sigma_gsvd,coef_gsvd,ratio_gsvd\n";
  for (Index j = 0; j < n; ++j) {
    o << j + 1 << ',' << num(ts.sigma(j)) << ',' << num(ts.coefficient(j)) << ',' << num(ts.ratio(j)) << ','
      << num(tg.sigma(j)) << ',' << num(tg.coefficient(j)) << ',' << num(tg.ratio(j)) << '\n';
  }
}

}  // namespace

ProblemInstance build_problem(const RunConfig& cfg, std::uint64_t seed) {
  const auto& p = cfg.problem;
  switch (p.kind) {
    case ProblemKind::heat: {
      HeatSpec s = p.heat;
      s.seed = seed;
      if (p.noise_level_set) s.noise_level = p.noise_level;
      return heat_problem(s);
    }
    case ProblemKind::seismic: {
      SeismicSpec s = p.seismic;
      s.seed = seed;
      if (p.noise_level_set) s.noise_level = p.noise_level;
      return seismic_problem(s);
    }
    case ProblemKind::superres: {
      SuperResSpec s = p.superres;
      s.seed = seed;
      if (p.noise_level_set) s.noise_level = p.noise_level;
      if (!p.image.empty()) {
        const fs::path path = fs::path(p.image).is_absolute() ? fs::path(p.image) : fs::path(cfg.base_dir) / p.image;
        Index h = 0, w = 0;
        s.image = read_pgm(path.string(), &h, &w);
        if (h != s.hi_side || w != s.hi_side) {
          throw std::runtime_error("problem.image: expected a " + std::to_string(s.hi_side) + "x" +
                                   std::to_string(s.hi_side) + " image");
        }
      }
      return superres_problem(s);
    }
  }
  throw std::logic_error("build_problem: unhandled kind");
}

OperatorPtr build_prior(const PriorConfig* prior, const ProblemInstance& inst) {
  if (!prior || prior->identity) return std::make_shared<IdentityOperator>(inst.n());
  CirculantOptions opts;
  opts.pad_factor = prior->padding;
  opts.require_psd = prior->require_psd;
  return build_fft_operator(prior->kernel, inst.geometry, opts);
}

HybridOptions solver_options(const SolverConfig& s, const ProblemInstance& inst) {
  HybridOptions o;
  o.variant = s.variant;
  o.stop_rule = s.stop;
  o.reorth = s.reorth;
  o.mu = Vector::Constant(inst.n(), s.mu);
  o.record_errors_against = inst.s_true;
  const double noise_energy = (inst.d - inst.d_clean).squaredNorm();
  switch (s.rule) {
    case ParamKind::fixed: o.param_rule = ParamRule::fixed(s.lambda); break;
    case ParamKind::optimal: o.param_rule = ParamRule::optimal(); break;
    case ParamKind::gcv: o.param_rule = ParamRule::gcv(); break;
    case ParamKind::wgcv: o.param_rule = ParamRule::wgcv(s.omega); break;
    case ParamKind::dp: {
      const double delta = s.delta.value_or(noise_energy);
      if (!(delta > 0.0)) throw std::invalid_argument("solver." + s.name + ": dp needs a positive delta (noise-free data)");
      o.param_rule = ParamRule::dp(delta, s.tau);
      break;
    }
    case ParamKind::upre: {
      const double eta2 = s.eta2.value_or(inst.noise_variance);
      if (!(eta2 > 0.0)) throw std::invalid_argument("solver." + s.name + ": upre needs a positive eta2 (noise-free data)");
      o.param_rule = ParamRule::upre(eta2);
      break;
    }
  }
  return o;
}

int run(const RunConfig& cfg, const RunOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  const std::uint64_t seed = opts.seed.value_or(cfg.problem.seed);
  OutputSet out(opts.out_dir.value_or(cfg.output_dir));
  std::ofstream log = out.open("run.log");
  auto note = [&](const std::string& s) {
    log << s << '\n';
    if (opts.progress) *opts.progress << s << '\n';
  };

  int status = 0;
  try {
    log << "# gkhybrid run log\n# effective configuration\n" << echo_config(cfg);
    log << "# seed = " << seed << '\n';
    const ProblemInstance inst = build_problem(cfg, seed);
    note("problem: " + inst.description + ", m = " + std::to_string(inst.m()) + ", n = " + std::to_string(inst.n()));
    log << "noise_energy = " << num((inst.d - inst.d_clean).squaredNorm()) << '\n';
    log << "noise_variance = " << num(inst.noise_variance) << '\n';

    const bool two_d = inst.geometry.dims == 2;
    if (cfg.emit.images && two_d) write_pgm_pair(out, "truth.pgm", inst.s_true, inst.geometry);
    if (cfg.emit.picard_csv) {
      auto f = out.open("picard.csv");
      write_picard_csv(f, inst, default_prior(cfg));
    }

    for (const auto& s : cfg.solvers) {
      const auto t0 = clock::now();
      const PriorConfig* prior = cfg.prior_for(s);
      const OperatorPtr q = build_prior(prior, inst);
      const HybridOptions ho = solver_options(s, inst);
      note("solver " + s.name + ": " + to_string(s.variant) + ", " + ho.param_rule.describe() + ", prior " +
           (prior ? prior->name : "identity"));
      const HybridResult res = solve(inst.A, inst.R, q, inst.d, ho);
      const double secs = std::chrono::duration<double>(clock::now() - t0).count();
      for (const auto& row : res.record.rows) {
        log << "  " << s.name << " k=" << row.k << " lambda=" << num(row.lambda) << " resnorm=" << num(row.residual_norm)
            << " relerr=" << num(row.relative_error) << (row.note.empty() ? "" : " note=" + row.note) << '\n';
      }
      note("solver " + s.name + ": stop=" + res.record.stop_reason + " iterations=" +
           std::to_string(res.record.rows.size()) + " final_relerr=" + num(res.record.rows.back().relative_error));
      log << "  " << s.name << " wall_time_s=" << secs << '\n';

      if (cfg.emit.history_csv) {
        auto f = out.open("history_" + s.name + ".csv");
        write_history_csv(f, res.record);
      }
      if (cfg.emit.images) {
        if (two_d) {
          write_pgm_pair(out, "recon_" + s.name + ".pgm", res.record.solution, inst.geometry);
          write_pgm_pair(out, "abserr_" + s.name + ".pgm", (res.record.solution - inst.s_true).cwiseAbs(),
                         inst.geometry);
        } else {
          auto f = out.open("solution_" + s.name + ".csv");
          f << "# gkhybrid solution v1\ni,s_true,s\n";
          for (Index i = 0; i < inst.n(); ++i) f << i << ',' << num(inst.s_true(i)) << ',' << num(res.record.solution(i)) << '\n';
        }
      }
      if (cfg.emit.diagnostics) {
        auto g = out.open("gengk_" + s.name + ".csv");
        write_orthogonality_csv(g, *res.basis);
        std::optional<Vector> sig;
        if (inst.n() <= reference::kDenseLimit && inst.m() >= inst.n()) {
          const Matrix qd = prior && !prior->identity ? assemble_dense(prior->kernel, inst.geometry)
                                                      : Matrix::Identity(inst.n(), inst.n());
          sig = reference::gsvd(to_dense(*inst.A), qd, reference::dense(inst.R)).sigma_hat;
        }
        auto sp = out.open("spectra_" + s.name + ".csv");
        write_spectra_csv(sp, *res.basis, cfg.emit.spectra_k, sig ? &*sig : nullptr);
      }
    }
  } catch (const std::exception& e) {
    note(std::string("error: ") + e.what());
    status = 1;
  }
  log << "wall_time_s = " << std::chrono::duration<double>(clock::now() - t_start).count() << '\n';
  log << "status = " << (status == 0 ? "ok" : "failed") << '\n';
  log.close();
  if (status == 0) out.commit();
  return status;
}

int picard(const RunConfig& cfg, const RunOptions& opts) {
  const std::uint64_t seed = opts.seed.value_or(cfg.problem.seed);
  OutputSet out(opts.out_dir.value_or(cfg.output_dir));
  try {
    const ProblemInstance inst = build_problem(cfg, seed);
    auto f = out.open("picard.csv");
    write_picard_csv(f, inst, default_prior(cfg));
    f.close();
    out.commit();
    if (opts.progress) *opts.progress << "wrote " << (out.dir() / "picard.csv").string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    if (opts.progress) *opts.progress << "error: " << e.what() << '\n';
    return 1;
  }
}

namespace {

struct Tally {
  std::ostream& out;
  int failed = 0;

  void check(const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
    if (!ok) ++failed;
  }
};

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

int verify(std::ostream& out) {
  Tally t{out};
  try {
    const auto heat = heat_problem({32, 1e-3, 1});
    SeismicSpec ss;
    ss.n_side = 8;
    ss.n_sou = 4;
    ss.n_rec = 4;
    ss.domain_length = 80.0;
    ss.kl_length = 10.0;
    ss.kl_terms = 5;
    const auto seis = seismic_problem(ss);
    SuperResSpec sr;
    sr.hi_side = 16;
    sr.frames = 3;
    sr.lo_factor = 2;
    const auto sup = superres_problem(sr);
    for (const auto* p : {&heat, &seis, &sup}) {
      const double e = adjoint_check(*p->A, 5, 11);
      t.check("adjoint " + to_string(p->kind), e <= 1e-10, "discrepancy " + num(e));
    }

    const auto q = assemble_dense(KernelSpec::matern(0.5, 2.0), heat.geometry);
    const auto qop = std::make_shared<DenseOperator>(q);
    GenGK gk(heat.A, heat.R, qop, heat.d);
    for (int i = 0; i < 20; ++i) gk.step();
    const Matrix a = to_dense(*heat.A);
    const double lhs = (a * gk.QV(20) - gk.U(21) * gk.bidiagonal()).norm() / (a * gk.QV(20)).norm();
    t.check("gengk A Q V = U B", lhs <= 1e-10, "relative residual " + num(lhs));
    t.check("gengk orthogonality", std::max(gk.orthogonality_u(), gk.orthogonality_v()) <= 1e-8,
            "deviation " + num(std::max(gk.orthogonality_u(), gk.orthogonality_v())));

    const Matrix r = Matrix::Identity(32, 32);
    const auto cg = reference::cg_q_inner(a, r, q, heat.d, 1.0, 10);
    GenGK gk2(heat.A, heat.R, qop, heat.d);
    double worst = 0.0;
    for (Index k = 1; k <= 10; ++k) {
      gk2.step();
      const auto pp = build_projected(gk2, Variant::lsqr);
      const Vector s = recover_solution(gk2, pp.solve(1.0).z, Vector::Zero(32));
      worst = std::max(worst, rel(s, q * cg[static_cast<std::size_t>(k - 1)]));
    }
    t.check("gen-LSQR equals Q-inner CG", worst <= 1e-6, "max relative difference " + num(worst));

    const auto f = reference::gsvd(a, q, r);
    const Vector mu = Vector::Zero(32);
    const double e5 = rel(reference::filtered_solution(f, reference::FilterSpec::tikhonov(0.1), heat.d, mu),
                          reference::map_estimate(a, q, r, heat.d, mu, 0.1));
    t.check("filtered GSVD equals MAP solve", e5 <= 1e-8, "relative difference " + num(e5));

    const auto grid = GridGeometry::plane(8, 8, 0.5, 0.5);
    const auto fft = build_fft_operator(KernelSpec::matern(1.5, 0.7), grid);
    const Matrix qd = assemble_dense(KernelSpec::matern(1.5, 0.7), grid);
    const Vector x = Vector::LinSpaced(64, -1.0, 2.0);
    const double e6 = rel(fft->apply(x), qd * x);
    t.check("FFT covariance equals dense", e6 <= 1e-10, "relative difference " + num(e6));

    const auto pp = build_projected(gk, Variant::lsqr);
    bool same = true;
    for (double l : {1e-4, 1e-2, 1.0}) same = same && gcv_projected(pp, l) == wgcv_projected(pp, l, 1.0);
    t.check("WGCV(omega = 1) equals GCV", same, "bitwise");
  } catch (const std::exception& e) {
    t.check("verify completed", false, e.what());
  }
  out << (t.failed == 0 ? "all checks passed" : std::to_string(t.failed) + " check(s) failed") << '\n';
  return t.failed == 0 ? 0 : 1;
}

}  // namespace gkh::cli

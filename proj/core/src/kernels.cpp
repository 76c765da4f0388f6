#include "gkhybrid/covariance.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gkh {

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::matern: return "matern";
    case KernelFamily::gamma_exponential: return "gamma_exponential";
    case KernelFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& s) {
  if (s == "matern") return KernelFamily::matern;
  if (s == "gamma_exponential") return KernelFamily::gamma_exponential;
  if (s == "gaussian") return KernelFamily::gaussian;
  throw std::invalid_argument("unknown kernel family '" + s + "'");
}

KernelSpec KernelSpec::matern(double nu, double alpha, double amplitude) {
  KernelSpec k;
  k.family = KernelFamily::matern;
  k.nu = nu;
  k.alpha = alpha;
  k.amplitude = amplitude;
  k.validate();
  return k;
}

KernelSpec KernelSpec::gamma_exponential(double gamma, double ell, double amplitude) {
  KernelSpec k;
  k.family = KernelFamily::gamma_exponential;
  k.gamma = gamma;
  k.ell = ell;
  k.amplitude = amplitude;
  k.validate();
  return k;
}

KernelSpec KernelSpec::gaussian(double alpha, double amplitude) {
  KernelSpec k;
  k.family = KernelFamily::gaussian;
  k.alpha = alpha;
  k.amplitude = amplitude;
  k.validate();
  return k;
}

void KernelSpec::validate() const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw std::invalid_argument("kernel: amplitude must be positive");
  }
  switch (family) {
    case KernelFamily::matern:
      if (!(nu > 0.0)) throw std::invalid_argument("kernel: matern requires nu > 0");
      if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("kernel: matern requires alpha > 0");
      }
      break;
    case KernelFamily::gamma_exponential:
      if (!(gamma > 0.0 && gamma <= 2.0)) {
        throw std::invalid_argument("kernel: gamma_exponential requires 0 < gamma <= 2");
      }
      if (!(ell > 0.0) || !std::isfinite(ell)) {
        throw std::invalid_argument("kernel: gamma_exponential requires ell > 0");
      }
      break;
    case KernelFamily::gaussian:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("kernel: gaussian requires alpha > 0");
      }
      break;
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream s;
  s.precision(17);
  s << to_string(family);
  switch (family) {
    case KernelFamily::matern: s << "(nu=" << nu << ", alpha=" << alpha; break;
    case KernelFamily::gamma_exponential: s << "(gamma=" << gamma << ", ell=" << ell; break;
    case KernelFamily::gaussian: s << "(alpha=" << alpha; break;
  }
  s << ", amplitude=" << amplitude << ")";
  return s.str();
}

namespace detail {

double log_bessel_k_uniform(double nu, double z) {
  const double t = z / nu;
  const double root = std::sqrt(1.0 + t * t);
  const double eta = root + std::log(t / (1.0 + root));
  const double p = 1.0 / root;
  const double p2 = p * p;
  const double u1 = p * (3.0 - 5.0 * p2) / 24.0;
  const double u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0;
  const double u3 =
      p * p2 * (30375.0 - 369603.0 * p2 + 765765.0 * p2 * p2 - 425425.0 * p2 * p2 * p2) /
      414720.0;
  const double series = 1.0 - u1 / nu + u2 / (nu * nu) - u3 / (nu * nu * nu);
  return 0.5 * std::log(std::numbers::pi / (2.0 * nu)) - nu * eta - 0.25 * std::log1p(t * t) +
         std::log(series);
}

double matern_correlation(double nu, double z) {
  if (z <= 0.0) return 1.0;
  double log_k;
  if (nu <= 50.0) {
    const double k = std::cyl_bessel_k(nu, z);
    if (!(k > 0.0)) return 0.0;  // underflow
    log_k = std::log(k);
  } else {
    log_k = log_bessel_k_uniform(nu, z);
  }
  const double log_c = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(z) + log_k;
  return std::exp(log_c);
}

}  // namespace detail

double kernel_value(const KernelSpec& spec, double r) {
  if (r < 0.0) throw std::invalid_argument("kernel_value: r must be nonnegative");
  const double a = spec.amplitude;
  switch (spec.family) {
    case KernelFamily::matern: {
      if (std::isinf(spec.nu)) {
        const double ar = spec.alpha * r;
        return a * std::exp(-0.5 * ar * ar);
      }
      if (spec.nu == 0.5) return a * std::exp(-spec.alpha * r);
      if (spec.nu == 1.5) {
        const double z = std::sqrt(3.0) * spec.alpha * r;
        return a * (1.0 + z) * std::exp(-z);
      }
      if (spec.nu == 2.5) {
        const double z = std::sqrt(5.0) * spec.alpha * r;
        return a * (1.0 + z + z * z / 3.0) * std::exp(-z);
      }
      return a * detail::matern_correlation(spec.nu, std::sqrt(2.0 * spec.nu) * spec.alpha * r);
    }
    case KernelFamily::gamma_exponential:
      return a * std::exp(-std::pow(r / spec.ell, spec.gamma));
    case KernelFamily::gaussian: {
      const double ar = spec.alpha * r;
      return a * std::exp(-ar * ar);
    }
  }
  return 0.0;
}

}  // namespace gkh

#include "gkhybrid/linop.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gkh {

NoiseModel::NoiseModel(Vector diag_r) : r_(std::move(diag_r)) {
  if (r_.size() == 0) throw std::invalid_argument("NoiseModel: empty diagonal");
  for (Index i = 0; i < r_.size(); ++i) {
    if (!(r_[i] > 0.0) || !std::isfinite(r_[i])) {
      std::ostringstream msg;
      msg << "NoiseModel: diagonal entry " << i << " = " << r_[i] << " is not positive";
      throw std::invalid_argument(msg.str());
    }
  }
  r_inv_ = r_.cwiseInverse();
  r_inv_sqrt_ = r_inv_.cwiseSqrt();
}

NoiseModel NoiseModel::identity(Index m) { return NoiseModel(Vector::Ones(m)); }

Vector NoiseModel::apply_inverse(const ConstVectorRef& x) const {
  if (x.size() != r_.size()) throw std::invalid_argument("NoiseModel: dimension mismatch");
  return r_inv_.cwiseProduct(x);
}

Vector NoiseModel::apply_inv_sqrt(const ConstVectorRef& x) const {
  if (x.size() != r_.size()) throw std::invalid_argument("NoiseModel: dimension mismatch");
  return r_inv_sqrt_.cwiseProduct(x);
}

double NoiseModel::weighted_norm(const ConstVectorRef& x) const {
  if (x.size() != r_.size()) {
    std::ostringstream msg;
    msg << "weighted_norm: dimension mismatch, expected length " << r_.size() << ", got "
        << x.size();
    throw std::invalid_argument(msg.str());
  }
  return std::sqrt(x.cwiseAbs2().cwiseProduct(r_inv_).sum());
}

}  // namespace gkh

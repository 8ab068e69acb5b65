#pragma once

#include <Eigen/Core>
#include <cmath>

#include "codareg/errors.hpp"

namespace codareg {

using Eigen::VectorXd;

/// Base of the logarithm applied throughout a model. The choice does not
/// affect compositional/total interpretation as long as it is applied
/// consistently to covariates, the total and (when requested) the response;
/// base 2 reads as per-doubling effects, base e as elasticities.
class LogBase {
 public:
  explicit LogBase(double base) : base_(base) {
    if (!(base > 1.0)) throw Error(ErrorCode::invalid_data, "log base must be > 1");
  }
  static LogBase two() { return LogBase(2.0); }
  static LogBase natural() { return LogBase(std::exp(1.0)); }
  static LogBase ten() { return LogBase(10.0); }

  double value() const { return base_; }
  /// log_b(x) computed as ln(x)/ln(b).
  double log(double x) const { return std::log(x) / std::log(base_); }
  double ln_base() const { return std::log(base_); }
  /// b^x.
  double exp(double x) const { return std::exp(x * std::log(base_)); }

  bool is_natural() const { return std::abs(base_ - std::exp(1.0)) < 1e-12; }

 private:
  double base_;
};

/// A non-closed composition: D >= 2 strictly positive parts in a common
/// unit. Never rescaled to a constant sum; the total carries information.
class Composition {
 public:
  explicit Composition(VectorXd parts) : parts_(std::move(parts)) {
    if (parts_.size() < 2) throw TooFewParts(static_cast<int>(parts_.size()));
    for (Eigen::Index j = 0; j < parts_.size(); ++j)
      if (!(parts_[j] > 0.0)) throw NonPositivePart(static_cast<int>(j));
  }

  int size() const { return static_cast<int>(parts_.size()); }
  double operator[](int j) const { return parts_[j]; }
  const VectorXd& parts() const { return parts_; }

  Composition scaled(double k) const { return Composition(parts_ * k); }

 private:
  VectorXd parts_;
};

inline Composition validate_composition(const VectorXd& raw) {
  return Composition(raw);
}

/// Element-wise log_b of the parts: the regressor columns of a log-contrast.
inline VectorXd log_parts(const Composition& c, const LogBase& b) {
  VectorXd out(c.size());
  for (int j = 0; j < c.size(); ++j) out[j] = b.log(c[j]);
  return out;
}

/// Multiplicative total t = sum_j log_b(x_j) = log_b of the product of
/// parts. The sqrt(D)-scaled variant is deliberately not provided.
inline double multiplicative_total(const Composition& c, const LogBase& b) {
  double t = 0.0;
  for (int j = 0; j < c.size(); ++j) t += b.log(c[j]);
  return t;
}

/// alr coordinates log_b(x_j / x_ref) for j != ref, in original part order
/// with the reference removed.
inline VectorXd alr_coords(const Composition& c, int ref_index, const LogBase& b) {
  if (ref_index < 0 || ref_index >= c.size())
    throw RefIndexOutOfRange(ref_index, c.size());
  VectorXd out(c.size() - 1);
  int k = 0;
  const double lref = std::log(c[ref_index]);
  for (int j = 0; j < c.size(); ++j) {
    if (j == ref_index) continue;
    out[k++] = (std::log(c[j]) - lref) / b.ln_base();
  }
  return out;
}

}  // namespace codareg

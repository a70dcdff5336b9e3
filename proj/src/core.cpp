#include "stacklab/core.hpp"

#include <omp.h>

#include <algorithm>
#include <stdexcept>

namespace stacklab {

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

Schema Schema::real(std::size_t p, double lower, double upper) {
  std::vector<Dimension> dims;
  dims.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    dims.push_back({"x" + std::to_string(i + 1), VarKind::kReal, lower, upper});
  }
  return Schema(std::move(dims));
}

std::string Schema::violation(std::span<const double> values) const {
  if (values.size() != dims_.size()) {
    return "expected " + std::to_string(dims_.size()) + " values, got " +
           std::to_string(values.size());
  }
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    const double v = values[i];
    if (std::isnan(v)) return d.name + " is NaN";
    if (v < d.lower || v > d.upper) return d.name + " out of bounds";
    if (d.kind == VarKind::kBinary && v != 0.0 && v != 1.0) return d.name + " must be 0 or 1";
    if (d.kind == VarKind::kInteger && v != std::round(v)) return d.name + " must be integral";
  }
  return {};
}

void Schema::coerce(std::span<double> values) const {
  for (std::size_t i = 0; i < dims_.size() && i < values.size(); ++i) {
    const auto& d = dims_[i];
    double v = std::clamp(values[i], d.lower, d.upper);
    if (d.kind != VarKind::kReal) v = std::round(v);
    values[i] = v;
  }
}

bool Schema::operator==(const Schema& other) const {
  if (dims_.size() != other.dims_.size()) return false;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& a = dims_[i];
    const auto& b = other.dims_[i];
    if (a.name != b.name || a.kind != b.kind || a.lower != b.lower || a.upper != b.upper) {
      return false;
    }
  }
  return true;
}

CovariateVector::CovariateVector(std::shared_ptr<const Schema> schema, std::vector<double> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (!schema_) throw std::invalid_argument("CovariateVector: null schema");
  if (auto err = schema_->violation(values_); !err.empty()) {
    throw std::invalid_argument("CovariateVector: " + err);
  }
}

void CovariateVector::set(std::size_t i, double v) {
  if (i >= values_.size()) throw std::out_of_range("CovariateVector::set");
  const double old = values_[i];
  values_[i] = v;
  if (auto err = schema_->violation(values_); !err.empty()) {
    values_[i] = old;
    throw std::invalid_argument("CovariateVector::set: " + err);
  }
}

CovariateVector CovariateVector::with_values(std::vector<double> values) const {
  schema_->coerce(values);
  return CovariateVector(schema_, std::move(values));
}

QTransform QTransform::custom(std::function<double(double)> q,
                              std::function<double(double)> inverse) {
  QTransform t(Kind::kCustom);
  t.q_ = std::move(q);
  t.inv_ = std::move(inverse);
  return t;
}

double QTransform::operator()(double p) const {
  if (std::isnan(p)) throw std::domain_error("q-transform of NaN");
  p = clamp_probability(p);
  switch (kind_) {
    case Kind::kLogit:
      return -std::log(1.0 / p - 1.0);
    case Kind::kIdentity:
      return p;
    case Kind::kCustom:
      return q_(p);
  }
  return p;
}

double QTransform::inverse(double v) const {
  if (std::isnan(v)) throw std::domain_error("inverse q-transform of NaN");
  switch (kind_) {
    case Kind::kLogit:
      return logistic(v);
    case Kind::kIdentity:
      return v;
    case Kind::kCustom:
      return inv_(v);
  }
  return v;
}

double q_eval(const QTransform& q, double p) { return q(p); }

EpochClock::EpochClock(std::size_t samples_per_epoch) : n_(samples_per_epoch) {
  if (n_ == 0) throw std::invalid_argument("EpochClock: samples per epoch must be positive");
}

}  // namespace stacklab

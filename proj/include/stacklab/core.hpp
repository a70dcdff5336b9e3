#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stacklab {

inline constexpr double kProbFloor = 1e-9;

/// Execution policy for data-parallel kernels. kSerial is the reference
/// path; kParallel must produce bit-identical output.
enum class Exec { kSerial, kParallel };

void set_thread_count(int n);
int thread_count();

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_probability(double p) {
  return std::fmin(std::fmax(p, kProbFloor), 1.0 - kProbFloor);
}

/// Real signed cube root; std::cbrt already handles negatives.
inline double signed_cbrt(double u) { return std::cbrt(u); }

// ---------------------------------------------------------------------------

enum class VarKind { kReal, kInteger, kBinary };

struct Dimension {
  std::string name;
  VarKind kind = VarKind::kReal;
  double lower = -HUGE_VAL;
  double upper = HUGE_VAL;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Dimension> dims) : dims_(std::move(dims)) {}

  /// p unbounded real dimensions named x1..xp.
  static Schema real(std::size_t p, double lower = -HUGE_VAL, double upper = HUGE_VAL);

  std::size_t size() const { return dims_.size(); }
  const Dimension& operator[](std::size_t i) const { return dims_[i]; }
  const std::vector<Dimension>& dims() const { return dims_; }

  /// Empty string when `values` conforms; otherwise a description of the
  /// first violation.
  std::string violation(std::span<const double> values) const;
  bool conforms(std::span<const double> values) const { return violation(values).empty(); }

  /// Clamps to bounds and rounds integer/binary dimensions.
  void coerce(std::span<double> values) const;

  bool operator==(const Schema& other) const;

 private:
  std::vector<Dimension> dims_;
};

/// A point in covariate space together with its schema. Values are doubles
/// for every kind; integer and binary constraints are checked on mutation.
class CovariateVector {
 public:
  CovariateVector() = default;
  CovariateVector(std::shared_ptr<const Schema> schema, std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }

  /// Throws std::invalid_argument if v breaks the dimension's kind or bounds.
  void set(std::size_t i, double v);

  /// Replaces all values after coercing to the schema.
  CovariateVector with_values(std::vector<double> values) const;

  bool operator==(const CovariateVector& o) const { return values_ == o.values_; }

 private:
  std::shared_ptr<const Schema> schema_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------

/// Strictly increasing map (0,1) -> R used to measure intervention effects.
class QTransform {
 public:
  enum class Kind { kLogit, kIdentity, kCustom };

  static QTransform logit() { return QTransform(Kind::kLogit); }
  static QTransform identity() { return QTransform(Kind::kIdentity); }
  static QTransform custom(std::function<double(double)> q, std::function<double(double)> inverse);

  Kind kind() const { return kind_; }

  /// Clamps p to [1e-9, 1-1e-9] first. NaN throws std::domain_error.
  double operator()(double p) const;
  double inverse(double v) const;

 private:
  explicit QTransform(Kind k) : kind_(k) {}
  Kind kind_;
  std::function<double(double)> q_;
  std::function<double(double)> inv_;
};

double q_eval(const QTransform& q, double p);

class EpochClock {
 public:
  explicit EpochClock(std::size_t samples_per_epoch = 1);
  std::size_t epoch() const { return epoch_; }
  std::size_t samples_per_epoch() const { return n_; }
  void tick() { ++epoch_; }

 private:
  std::size_t epoch_ = 0;
  std::size_t n_;
};

}  // namespace stacklab

#pragma once

#include <cstdint>
#include <limits>

namespace stacklab {

/// What a derived stream is used for. Part of the derivation key, so two
/// consumers that share (epoch, index, replicate) still draw independently.
enum class Purpose : std::uint64_t {
  kRoot = 0,
  kTruth = 1,
  kDrift = 2,
  kShock = 3,
  kTracked = 4,
  kTrueChain = 5,
  kEstChain = 6,
  kOutcome = 7,
  kPopulation = 8,
  kHoldout = 9,
  kFit = 10,
  kTree = 11,
  kProbe = 12,
  kReplicate = 13,
  kIntervention = 14,
  kOracle = 15,
  kCohort = 16,
  kUser = 100,
};

struct StreamLabel {
  Purpose purpose = Purpose::kUser;
  std::uint64_t epoch = 0;
  std::uint64_t index = 0;
  std::uint64_t replicate = 0;
};

/// Counter-based random stream. The output at position i is a pure function
/// of (key, i); child streams are a pure function of (parent key, label).
/// Satisfies UniformRandomBitGenerator so it can feed <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0);

  RngStream derive(const StreamLabel& label) const;
  RngStream derive(Purpose purpose, std::uint64_t epoch = 0, std::uint64_t index = 0,
                   std::uint64_t replicate = 0) const {
    return derive(StreamLabel{purpose, epoch, index, replicate});
  }

  result_type operator()() { return next(); }
  result_type next();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean = 0.0, double sd = 1.0);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  RngStream(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stable 64-bit finaliser (splitmix64).
std::uint64_t mix64(std::uint64_t z);

}  // namespace stacklab

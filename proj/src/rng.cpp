#include "stacklab/rng.hpp"

#include <random>

namespace stacklab {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed ^ 0x5DEECE66DULL)) {}

RngStream RngStream::derive(const StreamLabel& label) const {
  std::uint64_t k = key_;
  k = mix64(k ^ mix64(static_cast<std::uint64_t>(label.purpose) + 0x1000));
  k = mix64(k ^ mix64(label.epoch + 0x2000));
  k = mix64(k ^ mix64(label.index + 0x3000));
  k = mix64(k ^ mix64(label.replicate + 0x4000));
  return RngStream(k, 0);
}

RngStream::result_type RngStream::next() {
  ++counter_;
  return mix64(key_ + mix64(counter_));
}

double RngStream::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double RngStream::normal(double mean, double sd) {
  std::normal_distribution<double> dist(mean, sd);
  return dist(*this);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(*this);
}

}  // namespace stacklab

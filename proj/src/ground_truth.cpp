#include "stacklab/ground_truth.hpp"

#include <algorithm>
#include <stdexcept>

namespace stacklab {

double LogisticLink::linear(std::span<const double> x) const {
  double z = intercept;
  for (std::size_t j = 0; j < beta.size(); ++j) z += beta[j] * x[j];
  return z;
}

GroundTruthModel::GroundTruthModel(LogisticLink base, DriftSpec drift, std::uint64_t drift_seed)
    : base_(std::move(base)), drift_(std::move(drift)), drift_stream_(drift_seed) {
  if (drift_.kind == DriftSpec::Kind::kBounded && !(drift_.alpha >= 0.0)) {
    throw std::invalid_argument("bounded drift needs alpha >= 0");
  }
  const auto& cp = drift_.change_points;
  for (std::size_t i = 1; i < cp.size(); ++i) {
    if (cp[i] <= cp[i - 1]) throw std::invalid_argument("change points must be strictly increasing");
  }
}

void GroundTruthModel::set_segments(std::vector<LogisticLink> segments) {
  for (const auto& s : segments) {
    if (s.beta.size() != base_.beta.size()) {
      throw std::invalid_argument("segment dimension differs from base link");
    }
  }
  segments_ = std::move(segments);
  if (!segments_.empty()) base_ = segments_.front();
}

std::size_t GroundTruthModel::segment_of(std::size_t epoch) const {
  if (drift_.kind != DriftSpec::Kind::kShocks) return 0;
  const auto& cp = drift_.change_points;
  return static_cast<std::size_t>(std::upper_bound(cp.begin(), cp.end(), epoch) - cp.begin());
}

const LogisticLink& GroundTruthModel::link_at(std::size_t epoch) const {
  if (drift_.kind == DriftSpec::Kind::kShocks && !segments_.empty()) {
    return segments_[std::min(segment_of(epoch), segments_.size() - 1)];
  }
  return base_;
}

double GroundTruthModel::shift_at(std::size_t epoch) const {
  if (drift_.kind != DriftSpec::Kind::kBounded || drift_.alpha == 0.0) return 0.0;
  auto s = drift_stream_.derive(Purpose::kDrift, epoch);
  return s.uniform(-drift_.alpha, drift_.alpha);
}

double GroundTruthModel::eval_unchecked(std::size_t epoch, std::span<const double> x) const {
  return clamp_probability(logistic(link_at(epoch).linear(x) + shift_at(epoch)));
}

double GroundTruthModel::eval(std::size_t epoch, std::span<const double> x) const {
  if (x.size() != base_.beta.size()) {
    throw std::invalid_argument("eval_truth: covariate dimension " + std::to_string(x.size()) +
                                " != model dimension " + std::to_string(base_.beta.size()));
  }
  return eval_unchecked(epoch, x);
}

double GroundTruthModel::eval_base(std::span<const double> x) const {
  return clamp_probability(base_(x));
}

double eval_truth(const GroundTruthModel& model, std::size_t epoch, std::span<const double> x) {
  return model.eval(epoch, x);
}

OutcomeDraw draw_outcome(const GroundTruthModel& model, std::size_t epoch,
                         std::span<const double> x, RngStream& rng) {
  OutcomeDraw d;
  d.p = model.eval(epoch, x);
  d.y = rng.uniform() < d.p ? 1 : 0;
  return d;
}

std::vector<LogisticLink> sample_shock_sequence(const DriftSpec& spec, std::size_t dimension,
                                                double intercept, RngStream& rng) {
  const auto& cp = spec.change_points;
  for (std::size_t i = 1; i < cp.size(); ++i) {
    if (cp[i] <= cp[i - 1]) throw std::invalid_argument("change points must be strictly increasing");
  }
  if (!(spec.coef_lower <= spec.coef_upper) || !std::isfinite(spec.coef_lower) ||
      !std::isfinite(spec.coef_upper)) {
    throw std::invalid_argument("coefficient law bounds must be finite and ordered");
  }
  std::vector<LogisticLink> out(cp.size() + 1);
  for (std::size_t s = 0; s < out.size(); ++s) {
    auto seg = rng.derive(Purpose::kShock, s);
    out[s].intercept = intercept;
    out[s].beta.resize(dimension);
    for (auto& b : out[s].beta) b = seg.uniform(spec.coef_lower, spec.coef_upper);
  }
  return out;
}

std::vector<std::size_t> evenly_spaced_change_points(std::size_t epochs, std::size_t count) {
  std::vector<std::size_t> cp;
  for (std::size_t i = 1; i <= count; ++i) cp.push_back(i * epochs / (count + 1));
  return cp;
}

}  // namespace stacklab

#include "stacklab/logistic.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "stacklab/core.hpp"
#include "stacklab/estimators.hpp"

namespace stacklab {

double LogisticScore::predict(std::span<const double> x) const {
  double z = coef.empty() ? 0.0 : coef[0];
  for (std::size_t j = 0; j + 1 < coef.size() && j < x.size(); ++j) z += coef[j + 1] * x[j];
  return logistic(z);
}

namespace {

double penalised_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& beta, double ridge) {
  const Eigen::VectorXd eta = X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    // log(1 + exp(e)) without overflow
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y[i] * e - softplus;
  }
  ll /= static_cast<double>(eta.size());
  return ll - 0.5 * ridge * beta.tail(beta.size() - 1).squaredNorm();
}

}  // namespace

LogisticFit fit_logistic(const TrainingSet& data, const LogisticFitOptions& options) {
  if (data.size() == 0) throw std::invalid_argument("fit_logistic: empty training set");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = static_cast<Eigen::Index>(data.dimension);

  LogisticFit fit;
  const double rate = data.positive_rate();
  if (rate == 0.0 || rate == 1.0) {
    fit.single_class = true;
    fit.score.coef.assign(static_cast<std::size_t>(p + 1), 0.0);
    const double r = clamp_probability(rate);
    fit.score.coef[0] = std::log(r / (1.0 - r));
    fit.score.converged = true;
    return fit;
  }

  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    const auto row = data.row(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < p; ++j) X(i, j + 1) = row[static_cast<std::size_t>(j)];
    y[i] = data.y[static_cast<std::size_t>(i)];
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  beta[0] = std::log(rate / (1.0 - rate));
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, options.ridge);
  penalty[0] = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  double ll = penalised_loglik(X, y, beta, options.ridge);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = logistic(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    Eigen::MatrixXd H = inv_n * (X.transpose() * w.asDiagonal() * X);
    H.diagonal() += penalty;
    const Eigen::VectorXd grad =
        inv_n * (X.transpose() * (y - mu)) - penalty.cwiseProduct(beta);
    Eigen::VectorXd step = H.ldlt().solve(grad);

    // Step halving keeps the penalised likelihood non-decreasing.
    double t = 1.0;
    Eigen::VectorXd next = beta + step;
    double next_ll = penalised_loglik(X, y, next, options.ridge);
    for (int h = 0; h < 30 && next_ll < ll - 1e-15; ++h) {
      t *= 0.5;
      next = beta + t * step;
      next_ll = penalised_loglik(X, y, next, options.ridge);
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    ll = next_ll;
    fit.score.iterations = it + 1;
    if (change < options.tolerance) {
      fit.score.converged = true;
      break;
    }
  }

  fit.score.coef.assign(beta.data(), beta.data() + beta.size());

  bool all_correct = true;
  const Eigen::VectorXd eta = X * beta;
  for (Eigen::Index i = 0; i < n && all_correct; ++i) {
    all_correct = (eta[i] > 0) == (y[i] > 0.5);
  }
  fit.separated = all_correct && (!fit.score.converged || beta.cwiseAbs().maxCoeff() > 20.0);
  return fit;
}

}  // namespace stacklab

#pragma once

#include <cstddef>
#include <span>

namespace stacklab {

/// Two-sample Kolmogorov-Smirnov statistic sup_t |F_a(t) - F_b(t)|.
/// Throws std::invalid_argument if either sample is empty.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic p-value of the two-sample statistic (Kolmogorov series).
double ks_pvalue(double d, std::size_t n, std::size_t m);

}  // namespace stacklab

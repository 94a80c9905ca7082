#include "tvss/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvss {

std::vector<CoverageRow> default_coverage_table() {
    return {
        {85, 0.05, 1, 1.39, 5}, {75, 0.32, 1, 1.91, 5}, {65, 0.61, 2, 2.07, 6},
        {55, 1, 3, 3.30, 8},    {35, 3, 6, 5.75, 10},   {25, 3, 6, 6.30, 12},
    };
}

double triangular(double a, double mode, double b, double u) {
    if (b <= a) return a;
    const double f = (mode - a) / (b - a);
    if (u < f) return a + std::sqrt(u * (b - a) * (mode - a));
    return b - std::sqrt((1 - u) * (b - a) * (b - mode));
}

namespace {

// Mean of the mixture as a function of theta is base + theta * slope.
double half_mean(double lo, double hi, double theta) { return (lo + hi + lo + theta * (hi - lo)) / 3; }

}  // namespace

CoverageModel CoverageModel::fit(const CoverageRow& row) {
    if (!(row.min_s >= 0) || row.max_s < row.min_s || row.median_s < row.min_s || row.median_s > row.max_s)
        throw std::invalid_argument("coverage row must satisfy 0 <= min <= median <= max");
    CoverageModel m;
    m.row_ = row;
    if (m.degenerate()) {
        m.theta_ = 0;
        return m;
    }
    const double base = 0.5 * half_mean(row.min_s, row.median_s, 0) + 0.5 * half_mean(row.median_s, row.max_s, 0);
    const double slope = 0.5 * (row.median_s - row.min_s) / 3 + 0.5 * (row.max_s - row.median_s) / 3;
    m.theta_ = slope > 0 ? std::clamp((row.mean_s - base) / slope, 0.0, 1.0) : 0.0;
    return m;
}

double CoverageModel::mean() const {
    if (degenerate()) return row_.min_s;
    return 0.5 * half_mean(row_.min_s, row_.median_s, theta_) + 0.5 * half_mean(row_.median_s, row_.max_s, theta_);
}

double CoverageModel::sample(std::mt19937_64& rng) const {
    if (degenerate()) return row_.min_s;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const bool upper = u01(rng) >= 0.5;
    const double u = u01(rng);
    if (upper) return triangular(row_.median_s, row_.median_s + theta_ * (row_.max_s - row_.median_s), row_.max_s, u);
    return triangular(row_.min_s, row_.min_s + theta_ * (row_.median_s - row_.min_s), row_.median_s, u);
}

}  // namespace tvss

#pragma once

#include <random>
#include <vector>

namespace tvss {

// One row of measured OBU-RSU coverage time, seconds.
struct CoverageRow {
    double speed_mph = 0;
    double min_s = 0;
    double median_s = 0;
    double mean_s = 0;
    double max_s = 0;
};

// Highway and in-city measurements. The 85 mph minimum is recorded as "<0.1"; 0.05 stands in.
std::vector<CoverageRow> default_coverage_table();

// Two triangular halves joined at the median, each drawn with probability 1/2,
// so the median is exact. Both modes sit at the same fraction theta of their
// half; theta is solved so the mixture mean hits the row mean, clamped to [0,1].
class CoverageModel {
public:
    static CoverageModel fit(const CoverageRow& row);

    double sample(std::mt19937_64& rng) const;
    double mean() const;
    double theta() const { return theta_; }
    const CoverageRow& row() const { return row_; }
    bool degenerate() const { return row_.max_s <= row_.min_s; }

private:
    CoverageRow row_;
    double theta_ = 0.5;
};

// Inverse-CDF draw from triangular(a, mode, b) given u in [0,1).
double triangular(double a, double mode, double b, double u);

}  // namespace tvss

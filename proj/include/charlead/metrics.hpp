#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace charlead {

struct ScorePairs {
    std::vector<double> x;  // model scores
    std::vector<double> y;  // actual outcomes (binary or real)
    std::size_t n() const { return x.size(); }
};

// Pearson correlation coefficient, centered two-pass form. Throws on n < 2
// or zero variance in either input ("undefined correlation").
double pearson_r(std::span<const double> x, std::span<const double> y);
inline double pearson_r(const ScorePairs& pairs) {
    return pearson_r(pairs.x, pairs.y);
}

// Two-tailed p-value of r under the null, via the Student t transform
// t = r*sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom. |r| = 1 gives 0.
double p_value(double r, std::size_t n);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double x, double a, double b);

// CDF of the Student t distribution.
double student_t_cdf(double t, double dof);

struct EvalReport {
    std::optional<double> r;
    std::optional<double> p;
    double mean_loss = 0.0;
    std::size_t n = 0;
    // set when the correlation is undefined (e.g. constant scores)
    std::string correlation_error;
};

struct Bucket {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t count = 0;
    std::optional<double> close_rate;  // empty bucket -> no rate
};

struct BucketReport {
    std::vector<double> boundaries;
    std::vector<Bucket> buckets;
};

inline std::vector<double> default_bucket_boundaries() {
    return {0.2, 0.4, 0.6, 0.8};
}

// Partitions [0,1] into half-open intervals at the boundaries (the last
// interval is closed) and reports per-bucket counts and mean outcomes.
// Boundaries must be strictly increasing and inside [0,1].
BucketReport bucket_report(const ScorePairs& pairs,
                           std::span<const double> boundaries);

}  // namespace charlead

#include "charlead/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "charlead/errors.hpp"

namespace charlead {

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("pearson_r: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw DataError("pearson_r needs at least 2 samples");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw DataError("pearson_r: non-finite input");

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("undefined correlation");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
// https://en.wikipedia.org/wiki/Beta_function#Incomplete_beta_function
double ibeta_continued_fraction(double x, double a, double b) {
    const double tiny = 1e-300;
    const double tol = 1e-15;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double result = d;
    for (int m = 1; m <= 200000; ++m) {
        const double md = static_cast<double>(m);
        // even step
        double numer = md * (b - md) * x / ((a + 2.0 * md - 1.0) * (a + 2.0 * md));
        d = 1.0 + numer * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + numer / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        result *= d * c;
        // odd step
        numer = -(a + md) * (a + b + md) * x /
                ((a + 2.0 * md) * (a + 2.0 * md + 1.0));
        d = 1.0 + numer * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + numer / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        result *= delta;
        if (std::fabs(delta - 1.0) < tol) break;
    }
    return result;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0 && a > 0.0 && b > 0.0))
        throw std::invalid_argument("regularized_incomplete_beta domain");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * ibeta_continued_fraction(x, a, b) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta) *
                     ibeta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_cdf(double t, double dof) {
    if (!(dof > 0.0)) throw std::invalid_argument("student_t_cdf dof");
    const double tail =
        regularized_incomplete_beta(dof / (t * t + dof), dof / 2.0, 0.5) / 2.0;
    return t >= 0.0 ? 1.0 - tail : tail;
}

double p_value(double r, std::size_t n) {
    if (n < 3) throw DataError("p_value needs at least 3 samples");
    if (!(r >= -1.0 && r <= 1.0))
        throw std::invalid_argument("p_value: |r| must be <= 1");
    const double denom = 1.0 - r * r;
    if (denom <= 0.0) return 0.0;  // |r| = 1 by convention
    const double dof = static_cast<double>(n - 2);
    const double t = r * std::sqrt(dof / denom);
    // two-tailed: P(|T| > |t|) is the full incomplete-beta tail
    return regularized_incomplete_beta(dof / (t * t + dof), dof / 2.0, 0.5);
}

BucketReport bucket_report(const ScorePairs& pairs,
                           std::span<const double> boundaries) {
    if (pairs.x.size() != pairs.y.size())
        throw std::invalid_argument("bucket_report: length mismatch");
    double prev = 0.0;
    for (double b : boundaries) {
        if (!(b > prev) || !(b < 1.0))
            throw DataError("bucket boundaries must be strictly increasing in (0, 1)");
        prev = b;
    }

    BucketReport report;
    report.boundaries.assign(boundaries.begin(), boundaries.end());
    std::vector<double> edges;
    edges.push_back(0.0);
    edges.insert(edges.end(), boundaries.begin(), boundaries.end());
    edges.push_back(1.0);
    const std::size_t nb = edges.size() - 1;
    report.buckets.resize(nb);
    std::vector<double> sums(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        report.buckets[k].lo = edges[k];
        report.buckets[k].hi = edges[k + 1];
    }
    for (std::size_t i = 0; i < pairs.x.size(); ++i) {
        const double s = pairs.x[i];
        std::size_t k = nb - 1;  // last interval is closed above
        for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
            if (s >= edges[j] && s < edges[j + 1]) {
                k = j;
                break;
            }
        }
        report.buckets[k].count += 1;
        sums[k] += pairs.y[i];
    }
    for (std::size_t k = 0; k < nb; ++k)
        if (report.buckets[k].count > 0)
            report.buckets[k].close_rate =
                sums[k] / static_cast<double>(report.buckets[k].count);
    return report;
}

}  // namespace charlead

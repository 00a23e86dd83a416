#include <doctest.h>

#include <cmath>
#include <vector>

#include "charlead/errors.hpp"
#include "charlead/metrics.hpp"
#include "charlead/rng.hpp"

using namespace charlead;

namespace {

// Direct evaluation of the raw-sums correlation formula, the oracle the
// stable form is checked against.
double naive_pearson(const std::vector<double>& x,
                     const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    return (sxy - sx * sy / n) /
           std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
}

}  // namespace

TEST_CASE("perfect correlations") {
    const std::vector<double> x = {0.1, 0.4, 0.2, 0.9, 0.6};
    std::vector<double> y = x;
    CHECK(pearson_r(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    for (double& v : y) v = -v;
    CHECK(pearson_r(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("hand-evaluated four-point correlation") {
    const std::vector<double> x = {1, 2, 3, 4};
    const std::vector<double> y = {0, 1, 1, 3};
    // 4.5 / sqrt(23.75), frozen from direct evaluation of the sums
    CHECK(pearson_r(x, y) ==
          doctest::Approx(0.9233805168766387).epsilon(1e-12));
    CHECK(pearson_r(x, y) == doctest::Approx(naive_pearson(x, y)).epsilon(1e-12));
}

TEST_CASE("stable form matches the raw-sums formula on random data") {
    RngStream rng(17, "pearson");
    for (int it = 0; it < 300; ++it) {
        const std::size_t n = 2 + rng.below(500);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform();
            y[i] = rng.uniform();
        }
        double stable;
        try {
            stable = pearson_r(x, y);
        } catch (const DataError&) {
            continue;  // constant draw, undefined either way
        }
        CHECK(std::fabs(stable - naive_pearson(x, y)) <= 1e-12);
    }
}

TEST_CASE("affine invariance and symmetry") {
    RngStream rng(18, "affine");
    std::vector<double> x(64), y(64);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform();
        y[i] = 3.0 * x[i] + 2.0;
    }
    CHECK(std::fabs(pearson_r(x, y) - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = -0.5 * x[i] + 1.0;
    CHECK(std::fabs(pearson_r(x, y) + 1.0) <= 1e-12);

    for (std::size_t i = 0; i < x.size(); ++i) y[i] = rng.uniform();
    CHECK(pearson_r(x, y) == pearson_r(y, x));  // bitwise in the stable form
}

TEST_CASE("degenerate correlation inputs are rejected") {
    CHECK_THROWS_AS(pearson_r(std::vector<double>{1.0},
                              std::vector<double>{1.0}),
                    DataError);
    CHECK_THROWS_WITH_AS(pearson_r(std::vector<double>{1, 1, 1},
                                   std::vector<double>{0, 1, 0}),
                         "undefined correlation", DataError);
    CHECK_THROWS_WITH_AS(pearson_r(std::vector<double>{0, 1, 0},
                                   std::vector<double>{2, 2, 2}),
                         "undefined correlation", DataError);
}

TEST_CASE("p-value boundary conventions") {
    CHECK(p_value(0.0, 10) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p_value(0.0, 100000) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p_value(1.0, 10) == 0.0);
    CHECK(p_value(-1.0, 10) == 0.0);
    CHECK_THROWS_AS(p_value(0.5, 2), DataError);
}

TEST_CASE("p-values match an independent t-distribution oracle") {
    // frozen from scipy.stats: 2*t.sf(|r|*sqrt((n-2)/(1-r^2)), n-2)
    struct Case {
        double r;
        std::size_t n;
        double p;
    };
    const Case cases[] = {
        {0.13, 1000, 3.734365570355729e-05},
        {0.5, 10, 1.411132812500000e-01},
        {0.9, 5, 3.738607346849863e-02},
        {0.05, 2000, 2.534727432660933e-02},
        {-0.3, 50, 3.428618003292995e-02},
    };
    for (const Case& c : cases)
        CHECK(p_value(c.r, c.n) == doctest::Approx(c.p).epsilon(1e-9));
    CHECK(p_value(0.13, 1000) < 0.01);
}

TEST_CASE("p-value is monotone in |r| and in n") {
    double prev = 1.1;
    for (double r : {0.05, 0.1, 0.2, 0.4, 0.8}) {
        const double p = p_value(r, 40);
        CHECK(p < prev);
        prev = p;
        CHECK(p_value(-r, 40) == doctest::Approx(p).epsilon(1e-12));
    }
    prev = 1.1;
    for (std::size_t n : {5, 10, 50, 200, 1000}) {
        const double p = p_value(0.2, n);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("regularized incomplete beta sanity") {
    CHECK(regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0);
    CHECK(regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0);
    // I_x(1,1) = x
    CHECK(regularized_incomplete_beta(0.37, 1.0, 1.0) ==
          doctest::Approx(0.37).epsilon(1e-12));
    // I_x(2,1) = x^2
    CHECK(regularized_incomplete_beta(0.6, 2.0, 1.0) ==
          doctest::Approx(0.36).epsilon(1e-12));
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
    CHECK(regularized_incomplete_beta(0.3, 2.5, 4.5) ==
          doctest::Approx(1.0 - regularized_incomplete_beta(0.7, 4.5, 2.5))
              .epsilon(1e-12));
}

TEST_CASE("bucket report partitions scores") {
    ScorePairs pairs;
    RngStream rng(19, "bucket");
    for (int i = 0; i < 500; ++i) {
        pairs.x.push_back(rng.uniform());
        pairs.y.push_back(rng.uniform() < 0.3 ? 1.0 : 0.0);
    }
    const std::vector<double> bounds = default_bucket_boundaries();
    const BucketReport report = bucket_report(pairs, bounds);
    REQUIRE(report.buckets.size() == 5);
    std::size_t total = 0;
    for (const Bucket& b : report.buckets) total += b.count;
    CHECK(total == pairs.x.size());
    CHECK(report.buckets.front().lo == 0.0);
    CHECK(report.buckets.back().hi == 1.0);
}

TEST_CASE("single bucket reports the overall close rate") {
    ScorePairs pairs;
    pairs.x = {0.2, 0.8, 0.5, 0.9};
    pairs.y = {0, 1, 1, 1};
    const BucketReport report = bucket_report(pairs, std::vector<double>{});
    REQUIRE(report.buckets.size() == 1);
    CHECK(*report.buckets[0].close_rate == doctest::Approx(0.75));
}

TEST_CASE("two-sample bucket split") {
    ScorePairs pairs;
    pairs.x = {0.1, 0.9};
    pairs.y = {0, 1};
    const std::vector<double> bounds = {0.5};
    const BucketReport report = bucket_report(pairs, bounds);
    REQUIRE(report.buckets.size() == 2);
    CHECK(*report.buckets[0].close_rate == 0.0);
    CHECK(*report.buckets[1].close_rate == 1.0);
    CHECK(report.buckets[0].count == 1);
    CHECK(report.buckets[1].count == 1);
}

TEST_CASE("scores of exactly 1.0 land in the closed last bucket") {
    ScorePairs pairs;
    pairs.x = {1.0, 0.0};
    pairs.y = {1, 0};
    const std::vector<double> bounds = default_bucket_boundaries();
    const BucketReport report = bucket_report(pairs, bounds);
    CHECK(report.buckets.back().count == 1);
    CHECK(report.buckets.front().count == 1);
}

TEST_CASE("unsorted boundaries are rejected, empty buckets have no rate") {
    ScorePairs pairs;
    pairs.x = {0.1, 0.2};
    pairs.y = {0, 1};
    CHECK_THROWS_AS(bucket_report(pairs, std::vector<double>{0.6, 0.4}),
                    DataError);
    const std::vector<double> bounds = {0.5};
    const BucketReport report = bucket_report(pairs, bounds);
    CHECK(report.buckets[0].count == 2);
    CHECK(report.buckets[1].count == 0);
    CHECK_FALSE(report.buckets[1].close_rate.has_value());
}

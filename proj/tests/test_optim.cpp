#include <doctest.h>

#include <cmath>
#include <vector>

#include "charlead/errors.hpp"
#include "charlead/optim.hpp"
#include "charlead/rng.hpp"

using namespace charlead;

TEST_CASE("clipping rescales to the max norm and keeps direction") {
    std::vector<double> grads = {6.0, 8.0};  // norm 10
    const double pre = clip_gradients(std::span<double>(grads), 5.0);
    CHECK(pre == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(grads[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(grads[1] == doctest::Approx(4.0).epsilon(1e-15));
    const double post = std::sqrt(grads[0] * grads[0] + grads[1] * grads[1]);
    CHECK(post == doctest::Approx(5.0).epsilon(1e-12));
    // direction preserved exactly up to the common scale
    CHECK(grads[1] / grads[0] == doctest::Approx(8.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("clipping leaves small and zero gradients untouched") {
    std::vector<double> grads = {1.0, -2.0, 2.0};  // norm 3
    const std::vector<double> before = grads;
    clip_gradients(std::span<double>(grads), 5.0);
    CHECK(grads == before);
    std::vector<double> zeros(16, 0.0);
    clip_gradients(std::span<double>(zeros), 5.0);
    for (double g : zeros) CHECK(g == 0.0);
}

TEST_CASE("non-finite gradients raise gradient overflow") {
    std::vector<double> grads = {1.0, std::nan("")};
    CHECK_THROWS_WITH_AS(clip_gradients(std::span<double>(grads), 5.0),
                         "gradient overflow", NumericError);
    std::vector<double> inf = {std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(clip_gradients(std::span<double>(inf), 5.0), NumericError);
}

TEST_CASE("adam follows the hand-evaluated scalar recurrence") {
    // theta0=0.5, lr=0.001, gradients +1 then -1, defaults (0.9, 0.999, 1e-8)
    std::vector<double> theta = {0.5};
    AdamState<double> state(1);
    std::vector<double> g = {1.0};
    adam_step(std::span<double>(theta), std::span<const double>(g), state,
              0.001);
    CHECK(theta[0] == doctest::Approx(0.49900000001).epsilon(1e-12));
    CHECK(state.m[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(state.v[0] == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(state.t == 1);
    g[0] = -1.0;
    adam_step(std::span<double>(theta), std::span<const double>(g), state,
              0.001);
    CHECK(theta[0] == doctest::Approx(0.49905263158842105).epsilon(1e-12));
    CHECK(state.m[0] == doctest::Approx(-0.01).epsilon(1e-15));
    CHECK(state.v[0] == doctest::Approx(0.001999).epsilon(1e-15));
}

TEST_CASE("adam with zero gradient from a fresh state is the identity") {
    std::vector<double> theta = {0.25, -1.5, 3.0};
    const std::vector<double> before = theta;
    AdamState<double> state(3);
    const std::vector<double> g = {0.0, 0.0, 0.0};
    for (int i = 0; i < 5; ++i)
        adam_step(std::span<double>(theta), std::span<const double>(g), state,
                  0.01);
    CHECK(theta == before);
}

TEST_CASE("nesterov follows the hand-evaluated scalar recurrence") {
    // mu=0.9, lr=0.002, g=1 twice from v=0, theta0=0.5
    std::vector<double> theta = {0.5};
    NesterovState<double> state(1, 0.9);
    const std::vector<double> g = {1.0};
    nesterov_step(std::span<double>(theta), std::span<const double>(g), state,
                  0.002);
    CHECK(theta[0] == doctest::Approx(0.4962).epsilon(1e-12));
    CHECK(state.velocity[0] == doctest::Approx(-0.002).epsilon(1e-15));
    nesterov_step(std::span<double>(theta), std::span<const double>(g), state,
                  0.002);
    CHECK(theta[0] == doctest::Approx(0.49078).epsilon(1e-12));
    CHECK(state.velocity[0] == doctest::Approx(-0.0038).epsilon(1e-15));
}

TEST_CASE("nesterov with zero momentum reduces to plain sgd") {
    std::vector<double> theta = {1.0, -2.0};
    NesterovState<double> state(2, 0.0);
    const std::vector<double> g = {0.5, -0.25};
    nesterov_step(std::span<double>(theta), std::span<const double>(g), state,
                  0.1);
    CHECK(theta[0] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-15));
    CHECK(theta[1] == doctest::Approx(-2.0 + 0.1 * 0.25).epsilon(1e-15));
}

TEST_CASE("nesterov with zero gradient and zero velocity does nothing") {
    std::vector<double> theta = {0.7};
    NesterovState<double> state(1, 0.9);
    const std::vector<double> g = {0.0};
    nesterov_step(std::span<double>(theta), std::span<const double>(g), state,
                  0.002);
    CHECK(theta[0] == 0.7);
}

TEST_CASE("optimizer state stays finite on random inputs") {
    RngStream rng(21, "optim");
    std::vector<double> theta(64);
    for (double& t : theta) t = rng.uniform(-2.0, 2.0);
    AdamState<double> adam(theta.size());
    NesterovState<double> nesterov(theta.size(), 0.9);
    std::vector<double> g(theta.size());
    for (int step = 0; step < 200; ++step) {
        for (double& x : g) x = rng.uniform(-10.0, 10.0);
        clip_gradients(std::span<double>(g), 5.0);
        if (step % 2 == 0)
            adam_step(std::span<double>(theta), std::span<const double>(g),
                      adam, 0.001);
        else
            nesterov_step(std::span<double>(theta), std::span<const double>(g),
                          nesterov, 0.002);
        for (double t : theta) REQUIRE(std::isfinite(t));
        for (double v : adam.v) REQUIRE(v >= 0.0);
    }
}

TEST_CASE("shape mismatches are rejected") {
    std::vector<double> theta = {1.0, 2.0};
    AdamState<double> adam(3);
    const std::vector<double> g = {0.1, 0.2};
    CHECK_THROWS_AS(adam_step(std::span<double>(theta),
                              std::span<const double>(g), adam, 0.001),
                    std::invalid_argument);
    NesterovState<double> nesterov(1, 0.9);
    CHECK_THROWS_AS(nesterov_step(std::span<double>(theta),
                                  std::span<const double>(g), nesterov, 0.001),
                    std::invalid_argument);
}

TEST_CASE("the paper schedule switches optimizers after epoch 55") {
    const Schedule schedule;  // 55 + 20, 0.001 / 0.002
    CHECK(schedule.total_epochs() == 75);

    const EpochOptimizer at1 = optimizer_for_epoch(schedule, 1);
    CHECK(at1.kind == OptimizerKind::Adam);
    CHECK(at1.lr == 0.001);
    const EpochOptimizer at55 = optimizer_for_epoch(schedule, 55);
    CHECK(at55.kind == OptimizerKind::Adam);
    CHECK(at55.lr == 0.001);
    const EpochOptimizer at56 = optimizer_for_epoch(schedule, 56);
    CHECK(at56.kind == OptimizerKind::NesterovSgd);
    CHECK(at56.lr == 0.002);
    const EpochOptimizer at75 = optimizer_for_epoch(schedule, 75);
    CHECK(at75.kind == OptimizerKind::NesterovSgd);

    CHECK_THROWS_AS(optimizer_for_epoch(schedule, 0), std::out_of_range);
    CHECK_THROWS_AS(optimizer_for_epoch(schedule, 76), std::out_of_range);

    // exactly one switch point across the whole range
    int switches = 0;
    OptimizerKind prev = optimizer_for_epoch(schedule, 1).kind;
    for (int32_t e = 2; e <= schedule.total_epochs(); ++e) {
        const OptimizerKind kind = optimizer_for_epoch(schedule, e).kind;
        if (kind != prev) ++switches;
        prev = kind;
    }
    CHECK(switches == 1);
}

TEST_CASE("optimizer names match the run-log phase strings") {
    CHECK(std::string(optimizer_name(OptimizerKind::Adam)) == "adam");
    CHECK(std::string(optimizer_name(OptimizerKind::NesterovSgd)) ==
          "nesterov_sgd");
}

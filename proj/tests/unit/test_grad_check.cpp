#include <doctest.h>

#include <cmath>
#include <vector>

#include "pfan/grad_check.hpp"

using namespace pfan;

TEST_SUITE("grad_check") {

TEST_CASE("quadratic loss gradient verifies to high precision") {
    // f(x) = 0.5 * ||x||^2, df/dx = x.
    std::vector<double> x = {1.0, -2.0, 0.5, 3.25};
    std::vector<double> g = x;
    auto loss = [&]() {
        double s = 0.0;
        for (double v : x) s += 0.5 * v * v;
        return s;
    };
    std::vector<ParamView> views = {{x.data(), g.data(), x.size()}};
    GradCheckResult res = grad_check(loss, views, 1e-6);
    CHECK(res.checked == 4);
    CHECK(res.excluded.empty());
    CHECK(res.max_rel_error < 1e-9);
}

TEST_CASE("wrong analytic gradient is caught") {
    std::vector<double> x = {1.0, 2.0};
    std::vector<double> g = {1.0, 5.0};  // second entry wrong (should be 2)
    auto loss = [&]() { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
    std::vector<ParamView> views = {{x.data(), g.data(), x.size()}};
    GradCheckResult res = grad_check(loss, views, 1e-6);
    CHECK(res.max_rel_error > 0.5);
    CHECK(res.worst_coordinate == 1);
}

TEST_CASE("a coordinate at a kink is excluded, smooth ones still checked") {
    // f(x) = |x0| + 0.5 x1^2 with x0 exactly at the kink.
    std::vector<double> x = {0.0, 2.0};
    std::vector<double> g = {0.0, 2.0};
    auto loss = [&]() { return std::fabs(x[0]) + 0.5 * x[1] * x[1]; };
    std::vector<ParamView> views = {{x.data(), g.data(), x.size()}};
    GradCheckResult res = grad_check(loss, views, 1e-4);
    REQUIRE(res.excluded.size() == 1);
    CHECK(res.excluded[0] == 0);
    CHECK(res.checked == 1);
    CHECK(res.max_rel_error < 1e-9);
}

TEST_CASE("loss function is restored after probing") {
    std::vector<double> x = {0.75};
    std::vector<double> g = {0.75};
    auto loss = [&]() { return 0.5 * x[0] * x[0]; };
    std::vector<ParamView> views = {{x.data(), g.data(), x.size()}};
    grad_check(loss, views, 1e-5);
    CHECK(x[0] == 0.75);
}

}  // TEST_SUITE

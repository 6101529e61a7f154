#include <doctest.h>

#include <cmath>
#include <vector>

#include "pfan/errors.hpp"
#include "pfan/matrix.hpp"

using namespace pfan;

TEST_SUITE("matrix") {

TEST_CASE("construction and element access") {
    Matrix m(2, 3, 0.5);
    CHECK(m.rows == 2);
    CHECK(m.cols == 3);
    CHECK(m.size() == 6);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) CHECK(m.at(r, c) == 0.5);
    m.at(1, 2) = -7.0;
    CHECK(m.at(1, 2) == -7.0);
    CHECK(m.row_ptr(1)[2] == -7.0);
    m.fill(0.0);
    CHECK(m.at(1, 2) == 0.0);
}

TEST_CASE("matmul against a hand computation") {
    Matrix a(2, 3);
    Matrix b(3, 2);
    // a = [[1,2,3],[4,5,6]], b = [[7,8],[9,10],[11,12]]
    double av[] = {1, 2, 3, 4, 5, 6};
    double bv[] = {7, 8, 9, 10, 11, 12};
    std::copy(av, av + 6, a.data.begin());
    std::copy(bv, bv + 6, b.data.begin());
    Matrix c = matmul(a, b);
    REQUIRE(c.rows == 2);
    REQUIRE(c.cols == 2);
    CHECK(c.at(0, 0) == 58.0);
    CHECK(c.at(0, 1) == 64.0);
    CHECK(c.at(1, 0) == 139.0);
    CHECK(c.at(1, 1) == 154.0);
}

TEST_CASE("matmul shape mismatch throws") {
    Matrix a(2, 3), b(2, 2);
    CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("transposed products agree with explicit transposes") {
    Matrix a(3, 2), b(3, 4);
    for (int i = 0; i < 6; ++i) a.data[i] = 0.25 * (i + 1);
    for (int i = 0; i < 12; ++i) b.data[i] = 0.125 * (i - 4);

    Matrix at(2, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) at.at(c, r) = a.at(r, c);
    Matrix want = matmul(at, b);
    Matrix got = matmul_at_b(a, b);
    REQUIRE(got.same_shape(want));
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-15));

    Matrix c(5, 4);
    for (int i = 0; i < 20; ++i) c.data[i] = 0.0625 * (i + 2);
    Matrix ct(4, 5);
    for (int r = 0; r < 5; ++r)
        for (int k = 0; k < 4; ++k) ct.at(k, r) = c.at(r, k);
    Matrix want2 = matmul(b, ct);  // (3x4)*(4x5)
    Matrix got2 = matmul_a_bt(b, c);
    REQUIRE(got2.same_shape(want2));
    for (std::size_t i = 0; i < got2.size(); ++i)
        CHECK(got2.data[i] == doctest::Approx(want2.data[i]).epsilon(1e-15));
}

TEST_CASE("in-place arithmetic") {
    Matrix a(1, 3), b(1, 3);
    a.data = {1.0, 2.0, 3.0};
    b.data = {10.0, 20.0, 30.0};
    add_inplace(a, b);
    CHECK(a.data[0] == 11.0);
    CHECK(a.data[2] == 33.0);
    add_scaled_inplace(a, b, -1.0);
    CHECK(a.data[0] == 1.0);
    CHECK(a.data[1] == 2.0);
    scale_inplace(a, 2.0);
    CHECK(a.data[2] == 6.0);
    Matrix c(1, 2);
    CHECK_THROWS_AS(add_inplace(a, c), DimensionError);
}

TEST_CASE("dot product") {
    double a[] = {1.0, -2.0, 3.0};
    double b[] = {4.0, 5.0, -6.0};
    CHECK(dot(a, b, 3) == doctest::Approx(4.0 - 10.0 - 18.0));
    CHECK(dot(a, b, 0) == 0.0);
}

TEST_CASE("cosine similarity of a vector with itself is exactly 1") {
    // sqrt(x*x) == x in IEEE double, so the self-similarity is exact and can
    // be compared with == (threshold comparisons downstream rely on this).
    std::vector<double> v = {0.3, -1.7, 2.9, 0.0001, -55.5};
    CHECK(cosine_similarity(v.data(), v.data(), 5) == 1.0);
    std::vector<double> w = {1e-8, 3e7, -2.5e-3};
    CHECK(cosine_similarity(w.data(), w.data(), 3) == 1.0);
}

TEST_CASE("cosine similarity hand values") {
    double e1[] = {1.0, 0.0};
    double diag[] = {1.0, 1.0};
    double e2[] = {0.0, 1.0};
    double neg[] = {-1.0, 0.0};
    CHECK(cosine_similarity(e1, diag, 2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(cosine_similarity(e1, e2, 2) == 0.0);
    CHECK(cosine_similarity(e1, neg, 2) == -1.0);
}

TEST_CASE("cosine similarity zero-vector guard") {
    double z[] = {0.0, 0.0, 0.0};
    double v[] = {1.0, 2.0, 3.0};
    CHECK(cosine_similarity(z, v, 3) == 0.0);
    CHECK(cosine_similarity(v, z, 3) == 0.0);
    CHECK(cosine_similarity(z, z, 3) == 0.0);
    double tiny[] = {1e-14, 0.0, 0.0};
    CHECK(cosine_similarity(tiny, v, 3) == 0.0);
}

TEST_CASE("cosine similarity stays within [-1, 1]") {
    // Nearly parallel vectors whose naive ratio could round above 1.
    double a[] = {1.0, 1e-9};
    double b[] = {1.0, 1.1e-9};
    double c = cosine_similarity(a, b, 2);
    CHECK(c <= 1.0);
    CHECK(c >= -1.0);
    CHECK(c == doctest::Approx(1.0));
}

TEST_CASE("gather_rows selects rows in order") {
    Matrix m(4, 2);
    for (int r = 0; r < 4; ++r) {
        m.at(r, 0) = r;
        m.at(r, 1) = 10.0 * r;
    }
    Matrix g = m.gather_rows({3, 0, 3});
    REQUIRE(g.rows == 3);
    CHECK(g.at(0, 0) == 3.0);
    CHECK(g.at(1, 0) == 0.0);
    CHECK(g.at(2, 1) == 30.0);
    CHECK_THROWS_AS(m.gather_rows({4}), DimensionError);
    CHECK_THROWS_AS(m.gather_rows({-1}), DimensionError);
}

TEST_CASE("finiteness checks") {
    Matrix m(2, 2, 1.0);
    CHECK(m.all_finite());
    CHECK_NOTHROW(m.require_finite("test"));
    m.at(1, 1) = std::nan("");
    CHECK_FALSE(m.all_finite());
    CHECK_THROWS_AS(m.require_finite("test"), TrainingDivergence);
    m.at(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(m.all_finite());
}

}  // TEST_SUITE

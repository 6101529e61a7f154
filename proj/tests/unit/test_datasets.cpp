#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "pfan/datasets.hpp"
#include "pfan/errors.hpp"

using namespace pfan;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Mean feature vector of the rows with the given label.
std::vector<double> class_mean(const Matrix& feat, const std::vector<int>& labels, int k) {
    std::vector<double> m(static_cast<std::size_t>(feat.cols), 0.0);
    int count = 0;
    for (int r = 0; r < feat.rows; ++r) {
        if (labels[static_cast<std::size_t>(r)] != k) continue;
        for (int c = 0; c < feat.cols; ++c) m[static_cast<std::size_t>(c)] += feat.at(r, c);
        ++count;
    }
    for (double& v : m) v /= count;
    return m;
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("generated shapes, labels, and stripped target") {
    SyntheticShiftSpec spec;
    spec.class_count = 4;
    spec.per_class = 25;
    spec.seed = 5;
    GenResult g = gen_gaussian_shift(spec);
    CHECK(g.source.size() == 100);
    CHECK(g.source.dim() == 2);
    CHECK(g.source.labels.has_value());
    CHECK(g.source.domain_tag == DomainTag::Source);
    CHECK(g.target.domain_tag == DomainTag::Target);
    CHECK_FALSE(g.target.labels.has_value());  // truth only in the side channel
    CHECK(g.target_truth.size() == 100);
    std::vector<int> hist = g.source.class_histogram();
    REQUIRE(hist.size() == 4);
    for (int h : hist) CHECK(h == 25);
    CHECK_NOTHROW(g.source.validate());
    CHECK_NOTHROW(g.target.validate());
}

TEST_CASE("generation is seed-deterministic") {
    SyntheticShiftSpec spec;
    spec.seed = 77;
    GenResult a = gen_gaussian_shift(spec);
    GenResult b = gen_gaussian_shift(spec);
    CHECK(a.source.features.data == b.source.features.data);
    CHECK(a.target.features.data == b.target.features.data);
    CHECK(a.target_truth == b.target_truth);
    spec.seed = 78;
    GenResult c = gen_gaussian_shift(spec);
    CHECK(a.source.features.data != c.source.features.data);
}

TEST_CASE("zero rotation gives matching class means across domains") {
    SyntheticShiftSpec spec;
    spec.per_class = 400;
    spec.noise_sigma = 0.2;
    spec.radius = 4.0;
    spec.seed = 11;
    GenResult g = gen_gaussian_shift(spec);
    for (int k = 0; k < 4; ++k) {
        auto ms = class_mean(g.source.features, *g.source.labels, k);
        auto mt = class_mean(g.target.features, g.target_truth, k);
        for (int c = 0; c < 2; ++c) CHECK(ms[static_cast<std::size_t>(c)] == doctest::Approx(mt[static_cast<std::size_t>(c)]).epsilon(0.1));
    }
}

TEST_CASE("pi rotation with two classes swaps the class means") {
    SyntheticShiftSpec spec;
    spec.class_count = 2;
    spec.per_class = 500;
    spec.rotation = kPi;
    spec.noise_sigma = 0.1;
    spec.radius = 3.0;
    spec.seed = 13;
    GenResult g = gen_gaussian_shift(spec);
    // Class 0's target mean should sit on class 1's source mean and vice versa.
    auto s0 = class_mean(g.source.features, *g.source.labels, 0);
    auto s1 = class_mean(g.source.features, *g.source.labels, 1);
    auto t0 = class_mean(g.target.features, g.target_truth, 0);
    auto t1 = class_mean(g.target.features, g.target_truth, 1);
    for (int c = 0; c < 2; ++c) {
        CHECK(t0[static_cast<std::size_t>(c)] == doctest::Approx(s1[static_cast<std::size_t>(c)]).epsilon(0.15));
        CHECK(t1[static_cast<std::size_t>(c)] == doctest::Approx(s0[static_cast<std::size_t>(c)]).epsilon(0.15));
    }
}

TEST_CASE("translation displaces target class means") {
    SyntheticShiftSpec spec;
    spec.per_class = 400;
    spec.noise_sigma = 0.1;
    spec.translation = {2.0, -1.0};
    spec.seed = 17;
    GenResult raw = gen_gaussian_shift(spec);
    // Undo standardization to compare in generator coordinates: the shift in
    // standardized space equals translation / std_dev.
    auto ms = class_mean(raw.source.features, *raw.source.labels, 0);
    auto mt = class_mean(raw.target.features, raw.target_truth, 0);
    CHECK(mt[0] - ms[0] == doctest::Approx(2.0 / raw.standardizer.std_dev[0]).epsilon(0.1));
    CHECK(mt[1] - ms[1] == doctest::Approx(-1.0 / raw.standardizer.std_dev[1]).epsilon(0.1));
}

TEST_CASE("standardizer normalizes source statistics") {
    SyntheticShiftSpec spec;
    spec.per_class = 200;
    spec.seed = 19;
    GenResult g = gen_gaussian_shift(spec);
    for (int c = 0; c < 2; ++c) {
        double sum = 0.0, sumsq = 0.0;
        for (int r = 0; r < g.source.size(); ++r) {
            sum += g.source.features.at(r, c);
            sumsq += g.source.features.at(r, c) * g.source.features.at(r, c);
        }
        double mean = sum / g.source.size();
        double var = sumsq / g.source.size() - mean * mean;
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("standardizer round trip on a hand matrix") {
    Matrix m(2, 2);
    m.data = {0.0, 10.0, 4.0, 30.0};
    Standardizer s = Standardizer::fit(m);
    CHECK(s.mean[0] == 2.0);
    CHECK(s.mean[1] == 20.0);
    s.apply(m);
    CHECK(m.at(0, 0) == doctest::Approx(-1.0));
    CHECK(m.at(1, 0) == doctest::Approx(1.0));
    Matrix wrong(1, 3, 0.0);
    CHECK_THROWS_AS(s.apply(wrong), DimensionError);
}

TEST_CASE("standardizer floors tiny deviations") {
    Matrix m(3, 1);
    m.data = {5.0, 5.0, 5.0};  // zero variance column
    Standardizer s = Standardizer::fit(m);
    CHECK(s.std_dev[0] >= 1e-12);
    s.apply(m);  // must not produce NaN/Inf
    CHECK(m.all_finite());
}

TEST_CASE("two-moons generator basic contract") {
    SyntheticShiftSpec spec;
    spec.class_count = 2;
    spec.per_class = 150;
    spec.rotation = kPi / 6.0;
    spec.noise_sigma = 0.1;
    spec.seed = 3;
    GenResult g = gen_two_moons_shift(spec);
    CHECK(g.source.size() == 300);
    CHECK(g.source.class_count == 2);
    CHECK_FALSE(g.target.labels.has_value());
    CHECK(g.target_truth.size() == 300);
    GenResult h = gen_two_moons_shift(spec);
    CHECK(g.target.features.data == h.target.features.data);
}

TEST_CASE("two-moons rejects class counts other than two") {
    SyntheticShiftSpec spec;
    spec.class_count = 4;
    CHECK_THROWS_AS(gen_two_moons_shift(spec), DataError);
}

TEST_CASE("spec validation rejects bad values") {
    SyntheticShiftSpec spec;
    spec.per_class = 0;
    CHECK_THROWS_AS(spec.validate(), DataError);
    spec = SyntheticShiftSpec{};
    spec.noise_sigma = -1.0;
    CHECK_THROWS_AS(spec.validate(), DataError);
    spec = SyntheticShiftSpec{};
    spec.translation = {1.0, 2.0, 3.0};  // dimension mismatch
    CHECK_THROWS_AS(spec.validate(), DataError);
}

TEST_CASE("subsample_indices is a valid unique subset and deterministic") {
    std::vector<int> idx = subsample_indices(50, 20, 101);
    CHECK(idx.size() == 20);
    std::set<int> unique(idx.begin(), idx.end());
    CHECK(unique.size() == 20);
    for (int i : idx) {
        CHECK(i >= 0);
        CHECK(i < 50);
    }
    CHECK(idx == subsample_indices(50, 20, 101));
    CHECK(idx != subsample_indices(50, 20, 102));
    CHECK(subsample_indices(5, 5, 7).size() == 5);
    CHECK_THROWS_AS(subsample_indices(5, 6, 7), DataError);
}

TEST_CASE("subsample carries labels and tags") {
    SyntheticShiftSpec spec;
    spec.per_class = 30;
    spec.seed = 23;
    GenResult g = gen_gaussian_shift(spec);
    DomainDataset s = subsample(g.source, 40, 9);
    CHECK(s.size() == 40);
    CHECK(s.labels.has_value());
    CHECK(s.labels->size() == 40);
    CHECK(s.class_count == 4);
    CHECK(s.domain_tag == DomainTag::Source);
    DomainDataset t = subsample(g.target, 40, 9);
    CHECK_FALSE(t.labels.has_value());
}

TEST_CASE("epoch_batches covers every index exactly once") {
    Rng rng(31);
    auto batches = epoch_batches(10, 4, rng);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[1].size() == 4);
    CHECK(batches[2].size() == 2);  // short final batch kept
    std::vector<int> all;
    for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    for (int i = 0; i < 10; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("epoch_batches sizes for n=5 batch=2") {
    Rng rng(1);
    auto batches = epoch_batches(5, 2, rng);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 2);
    CHECK(batches[1].size() == 2);
    CHECK(batches[2].size() == 1);
}

TEST_CASE("batch cycler reshuffles between epochs but stays a permutation") {
    BatchCycler cyc(6, 3, Rng(41));
    std::vector<int> first_epoch;
    for (int i = 0; i < 2; ++i) {
        const auto& b = cyc.next();
        first_epoch.insert(first_epoch.end(), b.begin(), b.end());
    }
    std::vector<int> second_epoch;
    for (int i = 0; i < 2; ++i) {
        const auto& b = cyc.next();
        second_epoch.insert(second_epoch.end(), b.begin(), b.end());
    }
    auto sorted = [](std::vector<int> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    CHECK(sorted(first_epoch) == sorted(second_epoch));
}

TEST_CASE("bilinear downsample of a constant image is constant") {
    Matrix img(1, 28 * 28, 0.625);
    Matrix out = downsample_bilinear(img, 28, 28, 16, 16);
    REQUIRE(out.rows == 1);
    REQUIRE(out.cols == 256);
    for (double v : out.data) CHECK(v == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("bilinear downsample preserves a horizontal gradient") {
    // Image whose value depends linearly on the column index; bilinear
    // interpolation reproduces linear functions, so resized rows stay linear.
    Matrix img(1, 8 * 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) img.data[static_cast<std::size_t>(r) * 8 + c] = c;
    Matrix out = downsample_bilinear(img, 8, 8, 8, 4);
    for (int r = 0; r < 8; ++r) {
        const double* row = out.row_ptr(0) + r * 4;
        double step = row[1] - row[0];
        CHECK(step == doctest::Approx(row[2] - row[1]).epsilon(1e-9));
        CHECK(step == doctest::Approx(row[3] - row[2]).epsilon(1e-9));
    }
}

TEST_CASE("dataset validation catches malformed label sets") {
    DomainDataset ds;
    ds.features = Matrix(3, 2, 0.0);
    ds.class_count = 2;
    ds.labels = std::vector<int>{0, 1};  // wrong length
    CHECK_THROWS_AS(ds.validate(), DataError);
    ds.labels = std::vector<int>{0, 1, 2};  // out of range
    CHECK_THROWS_AS(ds.validate(), DataError);
    ds.labels = std::vector<int>{0, 1, 1};
    CHECK_NOTHROW(ds.validate());
}

}  // TEST_SUITE

#include "pfan/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pfan {

std::vector<int> DomainDataset::class_histogram() const {
    if (!labels) throw DataError("class_histogram: dataset has no labels");
    std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
    for (int y : *labels) {
        if (y < 0 || y >= class_count)
            throw DataError("class_histogram: label " + std::to_string(y) + " out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    return counts;
}

void DomainDataset::validate() const {
    if (!features.all_finite()) throw DataError("dataset features contain non-finite values");
    if (labels) {
        if (static_cast<int>(labels->size()) != features.rows)
            throw DataError("label count does not match feature rows");
        auto counts = class_histogram();
        int total = std::accumulate(counts.begin(), counts.end(), 0);
        if (total != features.rows) throw DataError("class counts do not sum to n");
    }
}

Standardizer Standardizer::fit(const Matrix& features) {
    Standardizer s;
    int n = features.rows, d = features.cols;
    s.mean.assign(static_cast<std::size_t>(d), 0.0);
    s.std_dev.assign(static_cast<std::size_t>(d), 1.0);
    if (n == 0) return s;
    for (int i = 0; i < n; ++i) {
        const double* row = features.row_ptr(i);
        for (int j = 0; j < d; ++j) s.mean[static_cast<std::size_t>(j)] += row[j];
    }
    for (int j = 0; j < d; ++j) s.mean[static_cast<std::size_t>(j)] /= n;
    std::vector<double> var(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = features.row_ptr(i);
        for (int j = 0; j < d; ++j) {
            double delta = row[j] - s.mean[static_cast<std::size_t>(j)];
            var[static_cast<std::size_t>(j)] += delta * delta;
        }
    }
    for (int j = 0; j < d; ++j)
        s.std_dev[static_cast<std::size_t>(j)] =
            std::max(std::sqrt(var[static_cast<std::size_t>(j)] / n), 1e-12);
    return s;
}

void Standardizer::apply(Matrix& features) const {
    if (features.cols != static_cast<int>(mean.size()))
        throw DimensionError("Standardizer::apply: dimension mismatch");
    for (int i = 0; i < features.rows; ++i) {
        double* row = features.row_ptr(i);
        for (int j = 0; j < features.cols; ++j) {
            std::size_t sj = static_cast<std::size_t>(j);
            row[j] = (row[j] - mean[sj]) / std_dev[sj];
        }
    }
}

void SyntheticShiftSpec::validate() const {
    if (class_count < 2) throw DataError("synthetic spec: class_count must be >= 2");
    if (!(noise_sigma > 0.0)) throw DataError("synthetic spec: noise sigma must be > 0");
    if (input_dim < 2) throw DataError("synthetic spec: input_dim must be >= 2");
    if (per_class < 1) throw DataError("synthetic spec: per_class must be >= 1");
    if (!translation.empty() && static_cast<int>(translation.size()) != input_dim)
        throw DataError("synthetic spec: translation length must equal input_dim");
}

namespace {

// Rotate the first two coordinates; higher dims untouched.
void rotate2(double* v, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    double x = v[0], y = v[1];
    v[0] = c * x - s * y;
    v[1] = s * x + c * y;
}

GenResult finalize(Matrix src_feat, std::vector<int> src_lab, Matrix tgt_feat,
                   std::vector<int> tgt_lab, int class_count) {
    GenResult out;
    out.standardizer = Standardizer::fit(src_feat);
    out.standardizer.apply(src_feat);
    out.standardizer.apply(tgt_feat);
    out.source = DomainDataset{std::move(src_feat), std::move(src_lab), DomainTag::Source, class_count};
    out.target = DomainDataset{std::move(tgt_feat), std::nullopt, DomainTag::Target, class_count};
    out.target_truth = std::move(tgt_lab);
    out.source.validate();
    out.target.validate();
    return out;
}

}  // namespace

GenResult gen_gaussian_shift(const SyntheticShiftSpec& spec) {
    spec.validate();
    Rng rng = Rng(spec.seed).fork("gaussian-shift");
    int C = spec.class_count, d = spec.input_dim, n = spec.per_class;

    std::vector<std::vector<double>> means(static_cast<std::size_t>(C),
                                           std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (int k = 0; k < C; ++k) {
        double angle = 2.0 * 3.14159265358979323846 * k / C;
        means[static_cast<std::size_t>(k)][0] = spec.radius * std::cos(angle);
        means[static_cast<std::size_t>(k)][1] = spec.radius * std::sin(angle);
    }

    auto draw_domain = [&](bool is_target, Matrix& feat, std::vector<int>& lab) {
        feat = Matrix(C * n, d);
        lab.resize(static_cast<std::size_t>(C) * n);
        double sigma = spec.noise_sigma * (is_target ? spec.target_noise_scale : 1.0);
        int row = 0;
        for (int k = 0; k < C; ++k) {
            std::vector<double> mu = means[static_cast<std::size_t>(k)];
            if (is_target) {
                rotate2(mu.data(), spec.rotation);
                for (int j = 0; j < d && j < static_cast<int>(spec.translation.size()); ++j)
                    mu[static_cast<std::size_t>(j)] += spec.translation[static_cast<std::size_t>(j)];
            }
            for (int i = 0; i < n; ++i, ++row) {
                double* out = feat.row_ptr(row);
                for (int j = 0; j < d; ++j)
                    out[j] = mu[static_cast<std::size_t>(j)] + sigma * rng.normal();
                lab[static_cast<std::size_t>(row)] = k;
            }
        }
    };

    Matrix src_feat, tgt_feat;
    std::vector<int> src_lab, tgt_lab;
    draw_domain(false, src_feat, src_lab);
    draw_domain(true, tgt_feat, tgt_lab);
    return finalize(std::move(src_feat), std::move(src_lab), std::move(tgt_feat), std::move(tgt_lab), C);
}

GenResult gen_two_moons_shift(const SyntheticShiftSpec& spec) {
    spec.validate();
    if (spec.class_count != 2) throw DataError("two moons: class_count must be 2");
    Rng rng = Rng(spec.seed).fork("two-moons-shift");
    int d = spec.input_dim, n = spec.per_class;
    double r = spec.radius;

    // Standard interleaved half circles, centered so rotation acts about the
    // cloud's middle.
    auto draw_domain = [&](bool is_target, Matrix& feat, std::vector<int>& lab) {
        feat = Matrix(2 * n, d);
        lab.resize(static_cast<std::size_t>(2) * n);
        double sigma = spec.noise_sigma * (is_target ? spec.target_noise_scale : 1.0);
        int row = 0;
        for (int k = 0; k < 2; ++k) {
            for (int i = 0; i < n; ++i, ++row) {
                double t = 3.14159265358979323846 * rng.uniform();
                double* out = feat.row_ptr(row);
                std::fill(out, out + d, 0.0);
                if (k == 0) {
                    out[0] = r * std::cos(t) - 0.5 * r;
                    out[1] = r * std::sin(t) - 0.25 * r;
                } else {
                    out[0] = r * (1.0 - std::cos(t)) - 0.5 * r;
                    out[1] = r * (0.5 - std::sin(t)) - 0.25 * r;
                }
                for (int j = 0; j < d; ++j) out[j] += sigma * rng.normal();
                if (is_target) {
                    rotate2(out, spec.rotation);
                    for (int j = 0; j < d && j < static_cast<int>(spec.translation.size()); ++j)
                        out[j] += spec.translation[static_cast<std::size_t>(j)];
                }
                lab[static_cast<std::size_t>(row)] = k;
            }
        }
    };

    Matrix src_feat, tgt_feat;
    std::vector<int> src_lab, tgt_lab;
    draw_domain(false, src_feat, src_lab);
    draw_domain(true, tgt_feat, tgt_lab);
    return finalize(std::move(src_feat), std::move(src_lab), std::move(tgt_feat), std::move(tgt_lab), 2);
}

std::vector<int> subsample_indices(int population, int n, std::uint64_t seed) {
    if (n > population)
        throw DataError("subsample: requested " + std::to_string(n) + " of " +
                        std::to_string(population));
    std::vector<int> idx(static_cast<std::size_t>(population));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    // Partial Fisher-Yates: the first n entries are the sample.
    for (int i = 0; i < n; ++i) {
        int j = i + rng.uniform_int(population - i);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(n));
    return idx;
}

DomainDataset subsample(const DomainDataset& ds, int n, std::uint64_t seed) {
    std::vector<int> idx = subsample_indices(ds.size(), n, seed);
    DomainDataset out;
    out.features = ds.features.gather_rows(idx);
    out.domain_tag = ds.domain_tag;
    out.class_count = ds.class_count;
    if (ds.labels) {
        std::vector<int> lab(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            lab[i] = (*ds.labels)[static_cast<std::size_t>(idx[i])];
        out.labels = std::move(lab);
    }
    return out;
}

std::vector<std::vector<int>> epoch_batches(int n, int batch_size, Rng& rng) {
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        int end = std::min(start + batch_size, n);
        batches.emplace_back(idx.begin() + start, idx.begin() + end);
    }
    return batches;
}

BatchCycler::BatchCycler(int n, int batch_size, Rng rng)
    : n_(n), batch_size_(batch_size), rng_(rng) {
    epoch_ = epoch_batches(n_, batch_size_, rng_);
}

const std::vector<int>& BatchCycler::next() {
    if (pos_ >= epoch_.size()) {
        epoch_ = epoch_batches(n_, batch_size_, rng_);
        pos_ = 0;
    }
    return epoch_[pos_++];
}

Matrix downsample_bilinear(const Matrix& images, int in_h, int in_w, int out_h, int out_w) {
    if (images.cols != in_h * in_w)
        throw DimensionError("downsample_bilinear: row length != in_h*in_w");
    Matrix out(images.rows, out_h * out_w);
    double sy = static_cast<double>(in_h) / out_h;
    double sx = static_cast<double>(in_w) / out_w;
    for (int img = 0; img < images.rows; ++img) {
        const double* src = images.row_ptr(img);
        double* dst = out.row_ptr(img);
        for (int oy = 0; oy < out_h; ++oy) {
            double fy = (oy + 0.5) * sy - 0.5;
            int y0 = static_cast<int>(std::floor(fy));
            double wy = fy - y0;
            int y0c = std::clamp(y0, 0, in_h - 1);
            int y1c = std::clamp(y0 + 1, 0, in_h - 1);
            for (int ox = 0; ox < out_w; ++ox) {
                double fx = (ox + 0.5) * sx - 0.5;
                int x0 = static_cast<int>(std::floor(fx));
                double wx = fx - x0;
                int x0c = std::clamp(x0, 0, in_w - 1);
                int x1c = std::clamp(x0 + 1, 0, in_w - 1);
                double v00 = src[y0c * in_w + x0c], v01 = src[y0c * in_w + x1c];
                double v10 = src[y1c * in_w + x0c], v11 = src[y1c * in_w + x1c];
                dst[oy * out_w + ox] = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                                       wy * ((1 - wx) * v10 + wx * v11);
            }
        }
    }
    return out;
}

}  // namespace pfan

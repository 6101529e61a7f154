#include "pfan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfan/csv.hpp"
#include "pfan/errors.hpp"
#include "pfan/layers.hpp"
#include "pfan/rng.hpp"

namespace pfan {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// accuracy
// ---------------------------------------------------------------------------

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.size() != truth.size())
        throw DimensionError("prediction and truth counts differ");
    if (predictions.empty()) throw DataError("accuracy of an empty set is undefined");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double accuracy(const PfanModel& model, const DomainDataset& data) {
    if (!data.labels) throw DataError("dataset has no labels to score against");
    return accuracy(model.predict(data.features), *data.labels);
}

std::optional<double> pseudo_label_accuracy(const PseudoLabeledSet& selection,
                                            const std::vector<int>& truth) {
    if (selection.empty()) return std::nullopt;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < selection.indices.size(); ++j) {
        int idx = selection.indices[j];
        if (idx < 0 || static_cast<std::size_t>(idx) >= truth.size())
            throw DataError("selection index " + std::to_string(idx) + " outside target set");
        if (selection.labels[j] == truth[static_cast<std::size_t>(idx)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(selection.size());
}

// ---------------------------------------------------------------------------
// TargetOracle
// ---------------------------------------------------------------------------

TargetOracle::TargetOracle(std::vector<int> truth) : truth_(std::move(truth)) {}

double TargetOracle::accuracy_of(const std::vector<int>& target_predictions) const {
    return accuracy(target_predictions, truth_);
}

std::optional<double> TargetOracle::selection_accuracy(const PseudoLabeledSet& selection) const {
    return pseudo_label_accuracy(selection, truth_);
}

MetricsProbe TargetOracle::make_probe() const {
    MetricsProbe probe;
    probe.target_accuracy = [this](const std::vector<int>& preds) { return accuracy_of(preds); };
    probe.selection_accuracy = [this](const PseudoLabeledSet& sel) {
        return selection_accuracy(sel);
    };
    return probe;
}

// ---------------------------------------------------------------------------
// proxy A-distance
// ---------------------------------------------------------------------------

namespace {

struct DomainProbe {
    LayerParams hidden;
    LayerParams out;

    explicit DomainProbe(int in_dim, Rng& rng) : hidden(in_dim, 16), out(16, 1) {
        hidden.init_glorot(rng);
        out.init_glorot(rng);
    }

    Matrix logits(const Matrix& x) const {
        return affine_forward(relu_forward(affine_forward(x, hidden)), out);
    }
};

double run_probe(const Matrix& pooled, const std::vector<double>& domain_labels,
                 const std::vector<int>& train_idx, const std::vector<int>& test_idx,
                 std::uint64_t probe_seed) {
    Rng rng(probe_seed);
    DomainProbe probe(pooled.cols, rng);

    const int batch = 64;
    const int epochs = 30;
    const double lr = 0.05;
    const double momentum = 0.9;

    std::vector<int> order = train_idx;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            std::size_t stop = std::min(order.size(), start + batch);
            std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
            Matrix x = pooled.gather_rows(idx);
            std::vector<double> y;
            y.reserve(idx.size());
            for (int i : idx) y.push_back(domain_labels[static_cast<std::size_t>(i)]);

            Matrix h_pre = affine_forward(x, probe.hidden);
            Matrix h = relu_forward(h_pre);
            Matrix z = affine_forward(h, probe.out);
            Matrix dz;
            disc_bce_loss(z, y, &dz);

            probe.hidden.zero_grad();
            probe.out.zero_grad();
            Matrix dh = affine_backward(h, probe.out, dz);
            Matrix dh_pre = relu_backward(h_pre, dh);
            affine_backward(x, probe.hidden, dh_pre);
            sgd_momentum_step(probe.hidden, lr, momentum);
            sgd_momentum_step(probe.out, lr, momentum);
        }
    }

    Matrix z = probe.logits(pooled.gather_rows(test_idx));
    int wrong = 0;
    for (std::size_t i = 0; i < test_idx.size(); ++i) {
        bool said_source = z.at(static_cast<int>(i), 0) > 0.0;
        bool is_source = domain_labels[static_cast<std::size_t>(test_idx[i])] > 0.5;
        if (said_source != is_source) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(test_idx.size());
}

}  // namespace

ProxyAResult proxy_a_distance(const Matrix& source_features, const Matrix& target_features,
                              std::uint64_t seed, int probe_seeds) {
    if (source_features.rows < 2 || target_features.rows < 2)
        throw DataError("need at least 2 samples per domain for the domain probe");
    if (source_features.cols != target_features.cols)
        throw DimensionError("source and target feature dims differ");
    if (probe_seeds < 1) throw ParameterError("need at least one probe seed");

    int n_s = source_features.rows;
    int n_t = target_features.rows;
    Matrix pooled(n_s + n_t, source_features.cols);
    std::vector<double> domain_labels(static_cast<std::size_t>(n_s + n_t));
    for (int i = 0; i < n_s; ++i) {
        std::copy_n(source_features.row_ptr(i), pooled.cols, pooled.row_ptr(i));
        domain_labels[static_cast<std::size_t>(i)] = 1.0;
    }
    for (int i = 0; i < n_t; ++i) {
        std::copy_n(target_features.row_ptr(i), pooled.cols, pooled.row_ptr(n_s + i));
        domain_labels[static_cast<std::size_t>(n_s + i)] = 0.0;
    }

    ProxyAResult result;
    for (int probe = 0; probe < probe_seeds; ++probe) {
        std::uint64_t probe_seed = Rng::derive_seed(seed, "probe-" + std::to_string(probe));
        Rng split_rng(Rng::derive_seed(probe_seed, "split"));

        // Stratified 80/20 split so both domains appear on both sides.
        std::vector<int> train_idx, test_idx;
        for (int domain_start : {0, n_s}) {
            int count = domain_start == 0 ? n_s : n_t;
            std::vector<int> idx(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = domain_start + i;
            split_rng.shuffle(idx);
            int cut = std::max(1, (count * 8) / 10);
            if (cut >= count) cut = count - 1;  // keep at least one held out
            train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + cut);
            test_idx.insert(test_idx.end(), idx.begin() + cut, idx.end());
        }

        double eps = run_probe(pooled, domain_labels, train_idx, test_idx, probe_seed);
        result.per_seed.push_back(2.0 * (1.0 - eps));
        result.value += 2.0 * (1.0 - eps);
        result.conventional += 2.0 * (1.0 - 2.0 * eps);
        result.epsilon_mean += eps;
    }
    result.value /= probe_seeds;
    result.conventional /= probe_seeds;
    result.epsilon_mean /= probe_seeds;
    return result;
}

// ---------------------------------------------------------------------------
// PCA export
// ---------------------------------------------------------------------------

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvectors are
// the columns of v, eigenvalues in w (unsorted).
void jacobi_eigen(Matrix a, std::vector<double>& w, Matrix& v) {
    int n = a.rows;
    v = Matrix(n, n);
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-26) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (int k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = a.at(i, i);
}

std::vector<double> column_of(const Matrix& v, int col) {
    std::vector<double> out(static_cast<std::size_t>(v.rows));
    for (int i = 0; i < v.rows; ++i) out[static_cast<std::size_t>(i)] = v.at(i, col);
    return out;
}

// Deterministic sign convention: largest-magnitude entry made positive.
void fix_sign(std::vector<double>& axis) {
    double best = 0.0;
    for (double x : axis)
        if (std::abs(x) > std::abs(best)) best = x;
    if (best < 0.0)
        for (double& x : axis) x = -x;
}

}  // namespace

Pca2d pca_project_2d(const Matrix& features) {
    if (features.rows < 1) throw DataError("cannot project an empty feature set");
    int n = features.rows;
    int d = features.cols;

    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = features.row_ptr(i);
        for (int c = 0; c < d; ++c) mean[static_cast<std::size_t>(c)] += row[c];
    }
    for (double& m : mean) m /= n;

    Matrix centered(n, d);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c)
            centered.at(i, c) = features.at(i, c) - mean[static_cast<std::size_t>(c)];

    Pca2d out;
    out.projected = Matrix(n, 2);

    if (d == 1) {
        out.axis1 = {1.0};
        out.axis2 = {0.0};
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            out.projected.at(i, 0) = centered.at(i, 0);
            var += centered.at(i, 0) * centered.at(i, 0);
        }
        out.var1 = n > 1 ? var / (n - 1) : 0.0;
        out.var2 = 0.0;
        return out;
    }

    Matrix cov = matmul_at_b(centered, centered);
    scale_inplace(cov, 1.0 / std::max(1, n - 1));

    std::vector<double> w;
    Matrix v;
    jacobi_eigen(cov, w, v);

    int first = 0, second = -1;
    for (int i = 1; i < d; ++i)
        if (w[static_cast<std::size_t>(i)] > w[static_cast<std::size_t>(first)]) first = i;
    for (int i = 0; i < d; ++i) {
        if (i == first) continue;
        if (second < 0 || w[static_cast<std::size_t>(i)] > w[static_cast<std::size_t>(second)])
            second = i;
    }

    out.axis1 = column_of(v, first);
    out.axis2 = column_of(v, second);
    fix_sign(out.axis1);
    fix_sign(out.axis2);
    out.var1 = w[static_cast<std::size_t>(first)];
    out.var2 = w[static_cast<std::size_t>(second)];

    for (int i = 0; i < n; ++i) {
        const double* row = centered.row_ptr(i);
        out.projected.at(i, 0) = dot(row, out.axis1.data(), d);
        out.projected.at(i, 1) = dot(row, out.axis2.data(), d);
    }
    return out;
}

void export_embedding_2d(const Matrix& features, const std::vector<int>& labels,
                         const std::vector<int>& domain_tags, const std::string& path) {
    if (static_cast<std::size_t>(features.rows) != labels.size() ||
        labels.size() != domain_tags.size())
        throw DimensionError("features, labels and domain tags must align");
    Pca2d pca = pca_project_2d(features);
    CsvWriter csv(path);
    csv.row({"x", "y", "class", "domain"});
    for (int i = 0; i < features.rows; ++i) {
        csv.row({format_real(pca.projected.at(i, 0)), format_real(pca.projected.at(i, 1)),
                 std::to_string(labels[static_cast<std::size_t>(i)]),
                 std::to_string(domain_tags[static_cast<std::size_t>(i)])});
    }
    csv.close();
}

// ---------------------------------------------------------------------------
// ablation table
// ---------------------------------------------------------------------------

double median(std::vector<double> values) {
    if (values.empty()) throw DataError("median of an empty list");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<AblationRow> ablation_table(const std::vector<VariantOutcome>& outcomes) {
    std::vector<AblationRow> rows;
    for (const VariantOutcome& o : outcomes) {
        AblationRow* row = nullptr;
        for (AblationRow& r : rows)
            if (r.variant == o.variant) row = &r;
        if (!row) {
            rows.push_back({o.variant, {}, {}, kNan});
            row = &rows.back();
        }
        row->seeds.push_back(o.seed);
        row->accuracies.push_back(o.final_target_accuracy);
    }
    if (rows.empty()) throw DataError("no outcomes to tabulate");

    for (AblationRow& r : rows) {
        std::vector<std::size_t> order(r.seeds.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return r.seeds[a] < r.seeds[b]; });
        std::vector<std::uint64_t> seeds;
        std::vector<double> accs;
        for (std::size_t i : order) {
            seeds.push_back(r.seeds[i]);
            accs.push_back(r.accuracies[i]);
        }
        r.seeds = std::move(seeds);
        r.accuracies = std::move(accs);
        r.median_accuracy = median(r.accuracies);
    }

    for (const AblationRow& r : rows)
        if (r.seeds != rows.front().seeds)
            throw DataError("variant " + r.variant + " does not cover the same seed set as " +
                            rows.front().variant);
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& table, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"variant", "seed", "target_accuracy"});
    for (const AblationRow& r : table)
        for (std::size_t i = 0; i < r.seeds.size(); ++i)
            csv.row({r.variant, std::to_string(r.seeds[i]), format_real(r.accuracies[i])});
    for (const AblationRow& r : table)
        csv.row({r.variant, "median", format_real(r.median_accuracy)});
    csv.close();
}

}  // namespace pfan

#ifndef PFAN_EVAL_HPP
#define PFAN_EVAL_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pfan/datasets.hpp"
#include "pfan/ehts.hpp"
#include "pfan/matrix.hpp"
#include "pfan/model.hpp"

namespace pfan {

// ============================================================================
// Diagnostics: accuracy, selection precision, domain-discrepancy probe and
// 2-D embedding export.  Target ground truth lives only here, behind
// TargetOracle; training code receives at most the opaque MetricsProbe.
// ============================================================================

// Fraction of predictions equal to truth.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& truth);

// Model accuracy on a labeled dataset (argmax of raw logits).
double accuracy(const PfanModel& model, const DomainDataset& data);

// Fraction of the selection whose pseudo-label matches the truth for that
// sample; empty selection -> nullopt (undefined, not zero).
std::optional<double> pseudo_label_accuracy(const PseudoLabeledSet& selection,
                                            const std::vector<int>& truth);

// ----------------------------------------------------------------------------
// Closures a trainer may call for monitoring without ever seeing the labels.
// ----------------------------------------------------------------------------
struct MetricsProbe {
    std::function<double(const std::vector<int>&)> target_accuracy;
    std::function<std::optional<double>(const PseudoLabeledSet&)> selection_accuracy;
};

// Sole owner of target ground truth.
class TargetOracle {
public:
    explicit TargetOracle(std::vector<int> truth);

    double accuracy_of(const std::vector<int>& target_predictions) const;
    std::optional<double> selection_accuracy(const PseudoLabeledSet& selection) const;
    int size() const { return static_cast<int>(truth_.size()); }

    // The probe holds a reference to this oracle; keep the oracle alive for
    // the probe's lifetime.
    MetricsProbe make_probe() const;

private:
    std::vector<int> truth_;
};

// ----------------------------------------------------------------------------
// Proxy A-distance: train a small domain probe (affine+ReLU+affine) on an
// 80/20 split of the pooled features, measure held-out error epsilon,
// report 2 * (1 - epsilon); the conventional 2 * (1 - 2 epsilon) is also
// returned.  Averages over `probe_seeds` fresh probes.
// ----------------------------------------------------------------------------
struct ProxyAResult {
    double value = 0.0;               // mean of 2(1 - eps) over probes
    double conventional = 0.0;        // mean of 2(1 - 2 eps)
    double epsilon_mean = 0.0;
    std::vector<double> per_seed;     // 2(1 - eps) per probe seed
};

ProxyAResult proxy_a_distance(const Matrix& source_features, const Matrix& target_features,
                              std::uint64_t seed, int probe_seeds = 3);

// ----------------------------------------------------------------------------
// 2-D embedding export: PCA via eigendecomposition of the feature covariance;
// writes CSV {x, y, class, domain}.  A single input column pads y with zeros.
// ----------------------------------------------------------------------------
struct Pca2d {
    Matrix projected;             // n x 2
    std::vector<double> axis1, axis2;  // principal directions
    double var1 = 0.0, var2 = 0.0;     // their variances
};

Pca2d pca_project_2d(const Matrix& features);

void export_embedding_2d(const Matrix& features, const std::vector<int>& labels,
                         const std::vector<int>& domain_tags, const std::string& path);

// ----------------------------------------------------------------------------
// Ablation table: final target accuracy per variant per seed, plus medians.
// Every variant must cover the same seed set.
// ----------------------------------------------------------------------------
struct VariantOutcome {
    std::string variant;
    std::uint64_t seed = 0;
    double final_target_accuracy = 0.0;
};

struct AblationRow {
    std::string variant;
    std::vector<std::uint64_t> seeds;
    std::vector<double> accuracies;  // aligned with seeds
    double median_accuracy = 0.0;
};

std::vector<AblationRow> ablation_table(const std::vector<VariantOutcome>& outcomes);

void write_ablation_csv(const std::vector<AblationRow>& table, const std::string& path);

double median(std::vector<double> values);

}  // namespace pfan

#endif

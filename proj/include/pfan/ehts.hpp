#ifndef PFAN_EHTS_HPP
#define PFAN_EHTS_HPP

#include <vector>

#include "pfan/matrix.hpp"

namespace pfan {

// ============================================================================
// Easy-to-hard selection: source class prototypes, cosine scoring of target
// samples, argmax pseudo-labels and a step-scheduled confidence threshold.
// ============================================================================

enum class ProtoTag { Source, TargetGlobal, TargetAccumulated, LocalBatch };

// Per-class mean embeddings.  A class with no contributing samples has
// count 0 and its centroid row is not meaningful ("invalid").
struct PrototypeSet {
    Matrix centroids;         // C x D
    std::vector<int> counts;  // per-class contributing sample counts
    ProtoTag tag = ProtoTag::Source;

    int class_count() const { return centroids.rows; }
    int dim() const { return centroids.cols; }
    bool valid(int k) const { return counts[static_cast<std::size_t>(k)] > 0; }
    int valid_class_count() const;
};

// centroid_k = mean of features rows whose label is k, summed in row order.
PrototypeSet compute_prototypes(const Matrix& features, const std::vector<int>& labels,
                                int class_count, ProtoTag tag = ProtoTag::Source);

// Entry (j, k) is the cosine similarity of target feature j to centroid k;
// invalid centroids score -infinity so they can never win the argmax.
Matrix similarity_scores(const Matrix& target_features, const PrototypeSet& prototypes);

struct PseudoAssignment {
    std::vector<int> labels;    // argmax class per sample, ties -> lowest index
    std::vector<double> scores; // the winning similarity per sample
};

// Row-wise argmax of a score matrix.  Throws DataError when every class is
// invalid (all scores -infinity).
PseudoAssignment assign_pseudo_labels(const Matrix& scores);

// tau = 1 / (1 + exp(-mu * (m + 1))) - 0.01, the step-m selection threshold.
double threshold(int m, double mu);

// The selected subset of the target set for one step.
struct PseudoLabeledSet {
    std::vector<int> indices;    // positions in the target dataset, ascending
    std::vector<int> labels;     // pseudo-labels for those positions
    std::vector<double> scores;  // winning similarities
    int step_m = 0;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
};

// Keeps samples with score >= tau (inclusive boundary).
PseudoLabeledSet select_easy(const PseudoAssignment& assignment, double tau, int step_m);

// Number of selected samples per pseudo-class.
std::vector<int> selection_class_counts(const PseudoLabeledSet& selection, int class_count);

}  // namespace pfan

#endif

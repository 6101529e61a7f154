#include "pfan/ehts.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pfan/errors.hpp"

namespace pfan {

int PrototypeSet::valid_class_count() const {
    int n = 0;
    for (int c : counts)
        if (c > 0) ++n;
    return n;
}

PrototypeSet compute_prototypes(const Matrix& features, const std::vector<int>& labels,
                                int class_count, ProtoTag tag) {
    if (static_cast<std::size_t>(features.rows) != labels.size())
        throw DimensionError("feature rows and label count differ");
    if (class_count <= 0) throw ParameterError("class_count must be positive");

    PrototypeSet out;
    out.centroids = Matrix(class_count, features.cols);
    out.counts.assign(static_cast<std::size_t>(class_count), 0);
    out.tag = tag;

    for (int i = 0; i < features.rows; ++i) {
        int k = labels[static_cast<std::size_t>(i)];
        if (k < 0 || k >= class_count)
            throw DataError("label " + std::to_string(k) + " outside [0, " +
                            std::to_string(class_count) + ")");
        const double* src = features.row_ptr(i);
        double* dst = out.centroids.row_ptr(k);
        for (int c = 0; c < features.cols; ++c) dst[c] += src[c];
        ++out.counts[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < class_count; ++k) {
        int n = out.counts[static_cast<std::size_t>(k)];
        if (n == 0) continue;
        double* row = out.centroids.row_ptr(k);
        for (int c = 0; c < features.cols; ++c) row[c] /= n;
    }
    return out;
}

Matrix similarity_scores(const Matrix& target_features, const PrototypeSet& prototypes) {
    if (target_features.cols != prototypes.dim())
        throw DimensionError("feature dim does not match prototype dim");
    const double neg_inf = -std::numeric_limits<double>::infinity();
    Matrix scores(target_features.rows, prototypes.class_count());
    for (int j = 0; j < target_features.rows; ++j) {
        const double* fj = target_features.row_ptr(j);
        double* row = scores.row_ptr(j);
        for (int k = 0; k < prototypes.class_count(); ++k) {
            row[k] = prototypes.valid(k)
                         ? cosine_similarity(fj, prototypes.centroids.row_ptr(k),
                                             target_features.cols)
                         : neg_inf;
        }
    }
    return scores;
}

PseudoAssignment assign_pseudo_labels(const Matrix& scores) {
    PseudoAssignment out;
    out.labels.resize(static_cast<std::size_t>(scores.rows));
    out.scores.resize(static_cast<std::size_t>(scores.rows));
    for (int j = 0; j < scores.rows; ++j) {
        const double* row = scores.row_ptr(j);
        int best = 0;
        for (int k = 1; k < scores.cols; ++k)
            if (row[k] > row[best]) best = k;
        if (std::isinf(row[best]) && row[best] < 0.0)
            throw DataError("no valid class prototype to score against");
        out.labels[static_cast<std::size_t>(j)] = best;
        out.scores[static_cast<std::size_t>(j)] = row[best];
    }
    return out;
}

double threshold(int m, double mu) {
    if (m < 0) throw ParameterError("step index must be >= 0");
    if (!(mu > 0.0)) throw ParameterError("mu must be > 0");
    return 1.0 / (1.0 + std::exp(-mu * (m + 1))) - 0.01;
}

PseudoLabeledSet select_easy(const PseudoAssignment& assignment, double tau, int step_m) {
    PseudoLabeledSet out;
    out.step_m = step_m;
    for (std::size_t j = 0; j < assignment.scores.size(); ++j) {
        if (assignment.scores[j] >= tau) {
            out.indices.push_back(static_cast<int>(j));
            out.labels.push_back(assignment.labels[j]);
            out.scores.push_back(assignment.scores[j]);
        }
    }
    return out;
}

std::vector<int> selection_class_counts(const PseudoLabeledSet& selection, int class_count) {
    std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
    for (int label : selection.labels) {
        if (label < 0 || label >= class_count)
            throw DataError("pseudo-label " + std::to_string(label) + " outside [0, " +
                            std::to_string(class_count) + ")");
        ++counts[static_cast<std::size_t>(label)];
    }
    return counts;
}

}  // namespace pfan

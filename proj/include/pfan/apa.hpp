#ifndef PFAN_APA_HPP
#define PFAN_APA_HPP

#include <vector>

#include "pfan/ehts.hpp"
#include "pfan/matrix.hpp"

namespace pfan {

// ============================================================================
// Adaptive prototype alignment: per-domain global prototypes refreshed each
// iteration by a cosine-weighted blend of the running mean of mini-batch
// (local) prototypes, plus the squared-distance alignment loss with analytic
// gradients w.r.t. the current batch's features.
// ============================================================================

// One domain's prototype machinery.
struct SideState {
    PrototypeSet global;            // c_(I) per class
    Matrix accum;                   // running mean of local prototypes, C x D
    std::vector<int> accum_counts;  // locals folded into accum, per class

    int class_count() const { return global.class_count(); }
    bool accum_valid(int k) const { return accum_counts[static_cast<std::size_t>(k)] > 0; }
};

struct GlobalPrototypeState {
    SideState source;
    SideState target;
    bool active = false;  // false when there were no selected target samples
    int iteration = 0;    // completed commits this step (I)
};

// Initial globals: full-set class means on each side.  An empty target
// selection yields an inactive state.
GlobalPrototypeState init_global(const Matrix& source_features,
                                 const std::vector<int>& source_labels,
                                 const Matrix& selected_target_features,
                                 const std::vector<int>& pseudo_labels, int class_count);

// Folds one set of local (mini-batch) prototypes into the running mean:
// accum_k <- (n_k * accum_k + local_k) / (n_k + 1) for classes present in the
// batch; absent classes keep their mean and count.
void update_accumulated(SideState& side, const PrototypeSet& locals);

// Blends each class's global toward its accumulated mean:
// rho_k = CS(accum_k, global_k); global_k <- rho^2 * accum_k + (1 - rho^2) * global_k.
// Classes lacking a valid accum or global are skipped.  With shared_rho, one
// rho is computed from the concatenation of all updatable classes' vectors
// and applied uniformly.  Returns per-class rho (NaN where skipped).
std::vector<double> adapt_global(SideState& side, bool shared_rho);

// Alignment loss on the current globals: sum over classes valid on both
// sides of || c_S - c_T ||^2.
double apa_loss(const GlobalPrototypeState& state);

// ----------------------------------------------------------------------------
// One differentiable APA iteration, evaluated without mutating the input
// state; `commit` adopts the result.  The gradients treat the existing
// accumulated means and previous globals as constants: the loss is
// differentiated only through the current batch's local prototypes.
// ----------------------------------------------------------------------------

struct ApaStepResult {
    double loss = 0.0;
    Matrix dfeat_source;  // d loss / d (source batch features)
    Matrix dfeat_target;  // d loss / d (target batch features)
    SideState next_source;
    SideState next_target;
    std::vector<double> rho_source;  // per class, NaN where the blend was skipped
    std::vector<double> rho_target;
};

ApaStepResult apa_step(const GlobalPrototypeState& state, const Matrix& source_batch_features,
                       const std::vector<int>& source_batch_labels,
                       const Matrix& target_batch_features,
                       const std::vector<int>& target_batch_pseudo_labels, bool shared_rho = false);

void commit_apa_step(GlobalPrototypeState& state, const ApaStepResult& result);

// ----------------------------------------------------------------------------
// Mini-batch-only alignment (no global or accumulated prototypes): the loss
// is the squared distance between the two batches' local prototypes, summed
// over classes present in both batches.
// ----------------------------------------------------------------------------

struct LocalAlignResult {
    double loss = 0.0;
    Matrix dfeat_source;
    Matrix dfeat_target;
};

LocalAlignResult local_prototype_alignment(const Matrix& source_batch_features,
                                           const std::vector<int>& source_batch_labels,
                                           const Matrix& target_batch_features,
                                           const std::vector<int>& target_batch_pseudo_labels,
                                           int class_count);

}  // namespace pfan

#endif

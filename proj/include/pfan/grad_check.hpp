#ifndef PFAN_GRAD_CHECK_HPP
#define PFAN_GRAD_CHECK_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "pfan/layers.hpp"

namespace pfan {

// Flat writable view over one parameter buffer and its analytic gradient.
struct ParamView {
    double* value = nullptr;
    const double* grad = nullptr;
    std::size_t count = 0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;          // over checked (non-excluded) coordinates
    std::size_t checked = 0;
    std::vector<std::size_t> excluded;   // flat ids of kink-flagged coordinates
    std::size_t worst_coordinate = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Central-difference check of analytic gradients: perturbs every coordinate by
// +/- epsilon, compares (f+ - f-)/(2 eps) against the recorded gradient.
//
// A coordinate whose curvature probe |f+ + f- - 2 f0| exceeds
// eps^1.5 * max(1, |f0|) straddles a non-smooth point (ReLU kink); it is
// excluded from the error maximum and reported instead.  Differences below the
// difference quotient's own roundoff resolution, about
// 100 * machine_eps * max(1, |f0|) / epsilon, count as exact agreement: a
// gradient that small cannot be measured by this probe, only bounded.
// loss_fn must be deterministic and must not cache state across calls.
GradCheckResult grad_check(const std::function<double()>& loss_fn,
                           const std::vector<ParamView>& params, double epsilon);

// Views over a layer's weight+bias buffers (analytic grads must already be
// populated before checking).
std::vector<ParamView> param_views(LayerParams& p);

}  // namespace pfan

#endif

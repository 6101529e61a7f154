#include "pfan/grad_check.hpp"

#include <cmath>
#include <limits>

namespace pfan {

GradCheckResult grad_check(const std::function<double()>& loss_fn,
                           const std::vector<ParamView>& params, double epsilon) {
    GradCheckResult res;
    double f0 = loss_fn();
    double scale = std::max(1.0, std::fabs(f0));
    double kink_tol = std::pow(epsilon, 1.5) * scale;
    // Cancellation in (f+ - f-) leaves roundoff of order machine_eps * |f|;
    // after dividing by 2 eps that is the finest gradient the quotient can
    // resolve.  Anything within a safety factor of it is indistinguishable
    // from zero.
    double resolution = 100.0 * std::numeric_limits<double>::epsilon() * scale / epsilon;
    std::size_t flat = 0;
    for (const ParamView& pv : params) {
        for (std::size_t i = 0; i < pv.count; ++i, ++flat) {
            double saved = pv.value[i];
            pv.value[i] = saved + epsilon;
            double fp = loss_fn();
            pv.value[i] = saved - epsilon;
            double fm = loss_fn();
            pv.value[i] = saved;

            if (std::fabs(fp + fm - 2.0 * f0) > kink_tol) {
                res.excluded.push_back(flat);
                continue;
            }
            double numeric = (fp - fm) / (2.0 * epsilon);
            double analytic = pv.grad[i];
            ++res.checked;
            if (std::fabs(numeric - analytic) <= resolution) continue;
            double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-10});
            double rel = std::fabs(numeric - analytic) / denom;
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_coordinate = flat;
                res.worst_analytic = analytic;
                res.worst_numeric = numeric;
            }
        }
    }
    return res;
}

std::vector<ParamView> param_views(LayerParams& p) {
    return {{p.weight.data.data(), p.grad_weight.data.data(), p.weight.data.size()},
            {p.bias.data(), p.grad_bias.data(), p.bias.size()}};
}

}  // namespace pfan

#include "pfan/apa.hpp"

#include <cmath>
#include <limits>

#include "pfan/errors.hpp"

namespace pfan {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

GlobalPrototypeState init_global(const Matrix& source_features,
                                 const std::vector<int>& source_labels,
                                 const Matrix& selected_target_features,
                                 const std::vector<int>& pseudo_labels, int class_count) {
    GlobalPrototypeState state;
    state.source.global =
        compute_prototypes(source_features, source_labels, class_count, ProtoTag::Source);
    state.target.global = compute_prototypes(selected_target_features, pseudo_labels, class_count,
                                             ProtoTag::TargetGlobal);
    int dim = source_features.cols;
    state.source.accum = Matrix(class_count, dim);
    state.target.accum = Matrix(class_count, dim);
    state.source.accum_counts.assign(static_cast<std::size_t>(class_count), 0);
    state.target.accum_counts.assign(static_cast<std::size_t>(class_count), 0);
    state.active = selected_target_features.rows > 0;
    state.iteration = 0;
    return state;
}

void update_accumulated(SideState& side, const PrototypeSet& locals) {
    if (locals.class_count() != side.class_count() || locals.dim() != side.accum.cols)
        throw DimensionError("local prototypes do not match state shape");
    for (int k = 0; k < locals.class_count(); ++k) {
        if (!locals.valid(k)) continue;
        int n = side.accum_counts[static_cast<std::size_t>(k)];
        double* acc = side.accum.row_ptr(k);
        const double* loc = locals.centroids.row_ptr(k);
        for (int c = 0; c < side.accum.cols; ++c) acc[c] = (n * acc[c] + loc[c]) / (n + 1);
        side.accum_counts[static_cast<std::size_t>(k)] = n + 1;
    }
}

namespace {

// Classes for which the blend can run: a valid accumulated mean and a valid global.
std::vector<int> updatable_classes(const SideState& side) {
    std::vector<int> out;
    for (int k = 0; k < side.class_count(); ++k)
        if (side.accum_valid(k) && side.global.valid(k)) out.push_back(k);
    return out;
}

}  // namespace

std::vector<double> adapt_global(SideState& side, bool shared_rho) {
    std::vector<double> rho(static_cast<std::size_t>(side.class_count()), kNan);
    std::vector<int> classes = updatable_classes(side);
    if (classes.empty()) return rho;
    int dim = side.accum.cols;

    if (shared_rho) {
        // One rho from the concatenation of every updatable class's vectors.
        std::vector<double> a, b;
        a.reserve(classes.size() * static_cast<std::size_t>(dim));
        b.reserve(classes.size() * static_cast<std::size_t>(dim));
        for (int k : classes) {
            const double* ak = side.accum.row_ptr(k);
            const double* bk = side.global.centroids.row_ptr(k);
            a.insert(a.end(), ak, ak + dim);
            b.insert(b.end(), bk, bk + dim);
        }
        double r = cosine_similarity(a.data(), b.data(), static_cast<int>(a.size()));
        double s = r * r;
        for (int k : classes) {
            double* g = side.global.centroids.row_ptr(k);
            const double* acc = side.accum.row_ptr(k);
            for (int c = 0; c < dim; ++c) g[c] = s * acc[c] + (1.0 - s) * g[c];
            rho[static_cast<std::size_t>(k)] = r;
        }
        return rho;
    }

    for (int k : classes) {
        double* g = side.global.centroids.row_ptr(k);
        const double* acc = side.accum.row_ptr(k);
        double r = cosine_similarity(acc, g, dim);
        double s = r * r;
        for (int c = 0; c < dim; ++c) g[c] = s * acc[c] + (1.0 - s) * g[c];
        rho[static_cast<std::size_t>(k)] = r;
    }
    return rho;
}

double apa_loss(const GlobalPrototypeState& state) {
    if (state.source.class_count() != state.target.class_count())
        throw DimensionError("source and target class counts differ");
    double loss = 0.0;
    int dim = state.source.global.dim();
    for (int k = 0; k < state.source.class_count(); ++k) {
        if (!state.source.global.valid(k) || !state.target.global.valid(k)) continue;
        const double* cs = state.source.global.centroids.row_ptr(k);
        const double* ct = state.target.global.centroids.row_ptr(k);
        for (int c = 0; c < dim; ++c) {
            double d = cs[c] - ct[c];
            loss += d * d;
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Differentiable iteration
// ---------------------------------------------------------------------------

namespace {

struct SideEval {
    SideState next;                 // after running-mean update + blend
    PrototypeSet locals;            // this batch's local prototypes
    std::vector<int> count_before;  // accumulation counts prior to this batch
    std::vector<double> rho;
    Matrix global_before;  // globals prior to the blend (its second operand)
};

SideEval eval_side(const SideState& side, const Matrix& batch_features,
                   const std::vector<int>& batch_labels, bool shared_rho) {
    SideEval ev;
    ev.locals = compute_prototypes(batch_features, batch_labels, side.class_count(),
                                   ProtoTag::LocalBatch);
    ev.next = side;
    ev.count_before = side.accum_counts;
    ev.global_before = side.global.centroids;
    update_accumulated(ev.next, ev.locals);
    ev.rho = adapt_global(ev.next, shared_rho);
    return ev;
}

// Accumulates d(loss)/d(batch features) for one side.  `gout` holds
// d(loss)/d(new global) per class (zero rows where the class is outside the
// loss sum); only classes present in the batch depend on the features.
void side_feature_grad(const SideEval& ev, const Matrix& batch_features,
                       const std::vector<int>& batch_labels, const Matrix& gout, bool shared_rho,
                       Matrix& dfeat) {
    int dim = batch_features.cols;
    int class_count = ev.locals.class_count();
    dfeat = Matrix(batch_features.rows, dim);

    // Norms over the vectors rho was computed from.
    std::vector<int> classes;
    for (int k = 0; k < class_count; ++k)
        if (!std::isnan(ev.rho[static_cast<std::size_t>(k)])) classes.push_back(k);
    if (classes.empty()) return;

    double aa = 0.0, bb = 0.0;
    double shared_r = 0.0;
    double weighted = 0.0;  // sum_k gout_k . (a_k - b_k), shared mode only
    if (shared_rho) {
        for (int k : classes) {
            const double* a = ev.next.accum.row_ptr(k);
            const double* b = ev.global_before.row_ptr(k);
            aa += dot(a, a, dim);
            bb += dot(b, b, dim);
            for (int c = 0; c < dim; ++c) weighted += gout.at(k, c) * (a[c] - b[c]);
        }
        shared_r = ev.rho[static_cast<std::size_t>(classes.front())];
    }

    std::vector<double> dl_da(static_cast<std::size_t>(dim));
    for (int k : classes) {
        if (!ev.locals.valid(k)) continue;  // no feature dependence without a batch local
        const double* a = ev.next.accum.row_ptr(k);
        const double* b = ev.global_before.row_ptr(k);
        const double* gk = gout.row_ptr(k);

        double r, s, ca, cb, g_dot_ab;
        if (shared_rho) {
            r = shared_r;
            ca = aa;
            cb = bb;
            g_dot_ab = weighted;
        } else {
            r = ev.rho[static_cast<std::size_t>(k)];
            ca = dot(a, a, dim);
            cb = dot(b, b, dim);
            g_dot_ab = 0.0;
            for (int c = 0; c < dim; ++c) g_dot_ab += gk[c] * (a[c] - b[c]);
        }
        s = r * r;

        // dL/da = s * gout + 2 r (gout.(a-b)) * drho/da, with
        // drho/da = b / (|a||b|) - r a / |a|^2; flat inside the zero-norm guard.
        double denom2 = ca * cb;
        bool guard = denom2 < 1e-24;
        double inv_ab = guard ? 0.0 : 1.0 / std::sqrt(denom2);
        double inv_aa = guard ? 0.0 : 1.0 / ca;
        for (int c = 0; c < dim; ++c) {
            double drho = guard ? 0.0 : b[c] * inv_ab - r * a[c] * inv_aa;
            dl_da[static_cast<std::size_t>(c)] = s * gk[c] + 2.0 * r * g_dot_ab * drho;
        }

        // Through the running-mean update into the local, then spread over the batch rows.
        double accum_factor = 1.0 / (ev.count_before[static_cast<std::size_t>(k)] + 1);
        double local_factor = accum_factor / ev.locals.counts[static_cast<std::size_t>(k)];
        for (int i = 0; i < batch_features.rows; ++i) {
            if (batch_labels[static_cast<std::size_t>(i)] != k) continue;
            double* row = dfeat.row_ptr(i);
            for (int c = 0; c < dim; ++c)
                row[c] += local_factor * dl_da[static_cast<std::size_t>(c)];
        }
    }
}

}  // namespace

ApaStepResult apa_step(const GlobalPrototypeState& state, const Matrix& source_batch_features,
                       const std::vector<int>& source_batch_labels,
                       const Matrix& target_batch_features,
                       const std::vector<int>& target_batch_pseudo_labels, bool shared_rho) {
    if (!state.active) throw ParameterError("alignment state is inactive");

    ApaStepResult out;
    SideEval es = eval_side(state.source, source_batch_features, source_batch_labels, shared_rho);
    SideEval et =
        eval_side(state.target, target_batch_features, target_batch_pseudo_labels, shared_rho);

    int class_count = state.source.class_count();
    int dim = state.source.global.dim();

    // Loss on the freshly adapted globals, plus d(loss)/d(new global) per side.
    Matrix gout_s(class_count, dim);
    Matrix gout_t(class_count, dim);
    double loss = 0.0;
    for (int k = 0; k < class_count; ++k) {
        if (!es.next.global.valid(k) || !et.next.global.valid(k)) continue;
        const double* cs = es.next.global.centroids.row_ptr(k);
        const double* ct = et.next.global.centroids.row_ptr(k);
        for (int c = 0; c < dim; ++c) {
            double d = cs[c] - ct[c];
            loss += d * d;
            gout_s.at(k, c) = 2.0 * d;
            gout_t.at(k, c) = -2.0 * d;
        }
    }
    out.loss = loss;

    side_feature_grad(es, source_batch_features, source_batch_labels, gout_s, shared_rho,
                      out.dfeat_source);
    side_feature_grad(et, target_batch_features, target_batch_pseudo_labels, gout_t, shared_rho,
                      out.dfeat_target);

    out.next_source = std::move(es.next);
    out.next_target = std::move(et.next);
    out.rho_source = std::move(es.rho);
    out.rho_target = std::move(et.rho);
    return out;
}

void commit_apa_step(GlobalPrototypeState& state, const ApaStepResult& result) {
    state.source = result.next_source;
    state.target = result.next_target;
    ++state.iteration;
}

// ---------------------------------------------------------------------------
// Mini-batch-only alignment
// ---------------------------------------------------------------------------

LocalAlignResult local_prototype_alignment(const Matrix& source_batch_features,
                                           const std::vector<int>& source_batch_labels,
                                           const Matrix& target_batch_features,
                                           const std::vector<int>& target_batch_pseudo_labels,
                                           int class_count) {
    PrototypeSet ls = compute_prototypes(source_batch_features, source_batch_labels, class_count,
                                         ProtoTag::LocalBatch);
    PrototypeSet lt = compute_prototypes(target_batch_features, target_batch_pseudo_labels,
                                         class_count, ProtoTag::LocalBatch);
    LocalAlignResult out;
    out.dfeat_source = Matrix(source_batch_features.rows, source_batch_features.cols);
    out.dfeat_target = Matrix(target_batch_features.rows, target_batch_features.cols);
    int dim = source_batch_features.cols;

    for (int k = 0; k < class_count; ++k) {
        if (!ls.valid(k) || !lt.valid(k)) continue;
        const double* ps = ls.centroids.row_ptr(k);
        const double* pt = lt.centroids.row_ptr(k);
        std::vector<double> diff(static_cast<std::size_t>(dim));
        for (int c = 0; c < dim; ++c) {
            diff[static_cast<std::size_t>(c)] = ps[c] - pt[c];
            out.loss += diff[static_cast<std::size_t>(c)] * diff[static_cast<std::size_t>(c)];
        }
        double fs = 2.0 / ls.counts[static_cast<std::size_t>(k)];
        double ft = -2.0 / lt.counts[static_cast<std::size_t>(k)];
        for (int i = 0; i < source_batch_features.rows; ++i) {
            if (source_batch_labels[static_cast<std::size_t>(i)] != k) continue;
            double* row = out.dfeat_source.row_ptr(i);
            for (int c = 0; c < dim; ++c) row[c] += fs * diff[static_cast<std::size_t>(c)];
        }
        for (int i = 0; i < target_batch_features.rows; ++i) {
            if (target_batch_pseudo_labels[static_cast<std::size_t>(i)] != k) continue;
            double* row = out.dfeat_target.row_ptr(i);
            for (int c = 0; c < dim; ++c) row[c] += ft * diff[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

}  // namespace pfan

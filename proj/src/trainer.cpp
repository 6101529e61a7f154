#include "pfan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pfan/csv.hpp"
#include "pfan/errors.hpp"
#include "pfan/layers.hpp"
#include "pfan/rng.hpp"

namespace pfan {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<int> gather_ints(const std::vector<int>& values, const std::vector<int>& indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(values[static_cast<std::size_t>(i)]);
    return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw DimensionError("vstack: column counts differ");
    Matrix out(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// variants and config
// ---------------------------------------------------------------------------

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> order = {Variant::Pfan,  Variant::Random, Variant::FullTarget,
                                               Variant::WoApa, Variant::WoA,    Variant::WoT,
                                               Variant::SourceOnly};
    return order;
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Pfan: return "PFAN";
        case Variant::Random: return "Random";
        case Variant::FullTarget: return "FullTarget";
        case Variant::WoApa: return "woAPA";
        case Variant::WoA: return "woA";
        case Variant::WoT: return "woT";
        case Variant::SourceOnly: return "SourceOnly";
    }
    throw ParameterError("unknown variant value");
}

Variant variant_from_string(const std::string& name) {
    for (Variant v : all_variants())
        if (variant_name(v) == name) return v;
    throw ConfigError("unknown variant: " + name +
                      " (expected PFAN, Random, FullTarget, woAPA, woA, woT or SourceOnly)");
}

void TrainConfig::validate() const {
    if (!(lr0 > 0.0)) throw ConfigError("lr0 must be > 0");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("lr anneal parameters must be >= 0");
    if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (!(mu > 0.0)) throw ConfigError("mu must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (!(lambda_scale >= 0.0 && gamma_scale >= 0.0))
        throw ConfigError("loss-term scales must be >= 0");
    if (batch < 2) throw ConfigError("batch must be at least 2");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (iters_per_step < 1) throw ConfigError("iters_per_step must be at least 1");
    if (pretrain_epochs < 1) throw ConfigError("pretrain_epochs must be at least 1");
    model.validate();
}

TrainConfig effective_config(const TrainConfig& cfg) {
    TrainConfig eff = cfg;
    switch (cfg.variant) {
        case Variant::Pfan:
        case Variant::SourceOnly: break;
        case Variant::Random: eff.selection_policy = SelectionPolicy::RandomMatched; break;
        case Variant::FullTarget: eff.selection_policy = SelectionPolicy::All; break;
        case Variant::WoApa: eff.gamma_scale = 0.0; break;
        case Variant::WoA: eff.align_mode = AlignMode::LocalOnly; break;
        case Variant::WoT: eff.temperature = 1.0; break;
    }
    eff.model.temperature = eff.temperature;
    return eff;
}

// ---------------------------------------------------------------------------
// schedules
// ---------------------------------------------------------------------------

double ProgressClock::p() const {
    if (total <= 0) return 0.0;
    return static_cast<double>(completed) / static_cast<double>(total);
}

double lr_schedule(double p, const TrainConfig& cfg) {
    if (p < 0.0 || p > 1.0) throw ParameterError("progress must lie in [0, 1]");
    return cfg.lr0 / std::pow(1.0 + cfg.alpha * p, cfg.beta);
}

LambdaGamma lambda_gamma_schedule(double p, const TrainConfig& cfg) {
    if (p < 0.0 || p > 1.0) throw ParameterError("progress must lie in [0, 1]");
    double base = 2.0 / (1.0 + std::exp(-cfg.delta * p)) - 1.0;
    return {cfg.lambda_scale * base, cfg.gamma_scale * base};
}

// ---------------------------------------------------------------------------
// stage 1
// ---------------------------------------------------------------------------

PretrainResult pretrain_source(const TrainConfig& raw_cfg, const DomainDataset& source) {
    TrainConfig cfg = effective_config(raw_cfg);
    cfg.validate();
    source.validate();
    if (!source.labels) throw DataError("pretraining needs labeled source data");
    if (cfg.model.input_dim != source.dim())
        throw ConfigError("model input_dim " + std::to_string(cfg.model.input_dim) +
                          " does not match dataset dim " + std::to_string(source.dim()));
    if (cfg.model.class_count != source.class_count)
        throw ConfigError("model class_count does not match dataset");

    Rng init_rng(Rng::derive_seed(cfg.seed, "init"));
    PfanModel model(cfg.model);
    model.init_params(init_rng);

    Rng shuffle_rng(Rng::derive_seed(cfg.seed, "pretrain"));
    std::vector<double> epoch_loss;
    epoch_loss.reserve(static_cast<std::size_t>(cfg.pretrain_epochs));

    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        double weighted = 0.0;
        for (const std::vector<int>& idx : epoch_batches(source.size(), cfg.batch, shuffle_rng)) {
            Matrix x = source.features.gather_rows(idx);
            std::vector<int> y = gather_ints(*source.labels, idx);

            model.zero_grad();
            FeatureTrace trace = model.forward_features_traced(x);
            Matrix probs = softmax_temperature(model.logits(trace.feat), cfg.temperature);
            double loss = cross_entropy(probs, y);
            if (!std::isfinite(loss))
                throw TrainingDivergence("pretraining loss became non-finite at epoch " +
                                         std::to_string(epoch));
            Matrix dlogits = softmax_ce_grad(probs, y, cfg.temperature);
            Matrix dfeat = model.backward_logits(trace.feat, dlogits);
            model.backward_features(trace, dfeat);

            sgd_momentum_step(model.g1, cfg.lr0, cfg.momentum);
            sgd_momentum_step(model.g2, cfg.lr0, cfg.momentum);
            sgd_momentum_step(model.f, cfg.lr0, cfg.momentum);
            weighted += loss * static_cast<double>(idx.size());
        }
        epoch_loss.push_back(weighted / source.size());
    }
    return {std::move(model), std::move(epoch_loss)};
}

// ---------------------------------------------------------------------------
// composite objective
// ---------------------------------------------------------------------------

CompositeResult composite_backward(PfanModel& model, const Matrix& xs, const std::vector<int>& ys,
                                   const Matrix& xt, const std::vector<int>& yt,
                                   const GlobalPrototypeState* proto_state, double lambda,
                                   double gamma, const TrainConfig& cfg, const Matrix* xt_domain) {
    CompositeResult out;
    out.loss_domain = kNan;
    out.loss_alignment = kNan;

    FeatureTrace trace_s = model.forward_features_traced(xs);
    Matrix probs = softmax_temperature(model.logits(trace_s.feat), cfg.temperature);
    out.loss_classification = cross_entropy(probs, ys);
    Matrix dlogits = softmax_ce_grad(probs, ys, cfg.temperature);
    Matrix dfeat_s = model.backward_logits(trace_s.feat, dlogits);

    double total = out.loss_classification;

    if (xt.rows > 0) {
        FeatureTrace trace_t = model.forward_features_traced(xt);
        Matrix dfeat_t(trace_t.feat.rows, trace_t.feat.cols);
        bool target_has_grad = false;

        // Domain term: discriminator sees source (label 1) above target
        // (label 0); its own gradient is unscaled, the reversal boundary
        // carries -lambda into the feature extractor.
        FeatureTrace trace_dom;
        bool separate_domain = xt_domain != nullptr;
        const Matrix* domain_feat = &trace_t.feat;
        if (separate_domain) {
            trace_dom = model.forward_features_traced(*xt_domain);
            domain_feat = &trace_dom.feat;
        }
        Matrix disc_in = vstack(trace_s.feat, *domain_feat);
        DiscTrace trace_d = model.forward_disc_traced(disc_in);
        std::vector<double> domain_targets(static_cast<std::size_t>(disc_in.rows), 0.0);
        for (int i = 0; i < xs.rows; ++i) domain_targets[static_cast<std::size_t>(i)] = 1.0;
        Matrix dlogit_d;
        out.loss_domain = disc_bce_loss(trace_d.logit, domain_targets, &dlogit_d);
        Matrix dfeat_disc = model.backward_disc(trace_d, dlogit_d);
        total += lambda * out.loss_domain;

        if (lambda != 0.0) {
            Matrix reversed = grl_backward(dfeat_disc, lambda);
            for (int i = 0; i < xs.rows; ++i)
                for (int c = 0; c < reversed.cols; ++c) dfeat_s.at(i, c) += reversed.at(i, c);
            Matrix dfeat_dom(reversed.rows - xs.rows, reversed.cols);
            for (int i = 0; i < dfeat_dom.rows; ++i)
                for (int c = 0; c < reversed.cols; ++c)
                    dfeat_dom.at(i, c) = reversed.at(xs.rows + i, c);
            if (separate_domain) {
                model.backward_features(trace_dom, dfeat_dom);
            } else {
                add_inplace(dfeat_t, dfeat_dom);
                target_has_grad = true;
            }
        }

        // Alignment term.
        if (cfg.align_mode == AlignMode::LocalOnly) {
            LocalAlignResult aligned = local_prototype_alignment(trace_s.feat, ys, trace_t.feat,
                                                                 yt, cfg.model.class_count);
            out.loss_alignment = aligned.loss;
            total += gamma * aligned.loss;
            if (gamma != 0.0) {
                add_scaled_inplace(dfeat_s, aligned.dfeat_source, gamma);
                add_scaled_inplace(dfeat_t, aligned.dfeat_target, gamma);
                target_has_grad = true;
            }
        } else if (proto_state && proto_state->active) {
            out.apa = apa_step(*proto_state, trace_s.feat, ys, trace_t.feat, yt, cfg.shared_rho);
            out.apa_ran = true;
            out.loss_alignment = out.apa.loss;
            total += gamma * out.apa.loss;
            if (gamma != 0.0) {
                add_scaled_inplace(dfeat_s, out.apa.dfeat_source, gamma);
                add_scaled_inplace(dfeat_t, out.apa.dfeat_target, gamma);
                target_has_grad = true;
            }
        }

        if (target_has_grad) model.backward_features(trace_t, dfeat_t);
    }

    model.backward_features(trace_s, dfeat_s);
    out.loss_total = total;
    if (!std::isfinite(total))
        throw TrainingDivergence("composite loss became non-finite (classification " +
                                 format_real(out.loss_classification) + ", domain " +
                                 format_real(out.loss_domain) + ", alignment " +
                                 format_real(out.loss_alignment) + ")");
    return out;
}

// ---------------------------------------------------------------------------
// stage 2
// ---------------------------------------------------------------------------

namespace {

PseudoLabeledSet pick_from_assignment(const PseudoAssignment& assign, std::vector<int> indices,
                                      int step_m) {
    std::sort(indices.begin(), indices.end());
    PseudoLabeledSet out;
    out.step_m = step_m;
    for (int i : indices) {
        out.indices.push_back(i);
        out.labels.push_back(assign.labels[static_cast<std::size_t>(i)]);
        out.scores.push_back(assign.scores[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace

StepOutcome adaptation_step(PfanModel& model, int m, const TrainConfig& raw_cfg,
                            const DomainDataset& source, const Matrix& target_features,
                            const MetricsProbe* probe, bool collect_proto_trace) {
    TrainConfig cfg = effective_config(raw_cfg);
    cfg.validate();
    if (m < 1) throw ParameterError("adaptation steps are numbered from 1");
    if (m > cfg.steps) throw ParameterError("step index exceeds configured step count");
    if (!source.labels) throw DataError("adaptation needs labeled source data");
    const std::vector<int>& source_labels = *source.labels;
    const int class_count = cfg.model.class_count;

    // Selection with the model as it stands (threshold index m-1: the first
    // adaptation step uses m=0 in the sigmoid).
    Matrix source_embed = model.forward_features(source.features);
    Matrix target_embed = model.forward_features(target_features);
    PrototypeSet prototypes =
        compute_prototypes(source_embed, source_labels, class_count, ProtoTag::Source);
    Matrix scores = similarity_scores(target_embed, prototypes);
    PseudoAssignment assign = assign_pseudo_labels(scores);
    double tau = threshold(m - 1, cfg.mu);

    PseudoLabeledSet selected;
    switch (cfg.selection_policy) {
        case SelectionPolicy::EasyToHard: selected = select_easy(assign, tau, m); break;
        case SelectionPolicy::RandomMatched: {
            int n = static_cast<int>(select_easy(assign, tau, m).size());
            std::vector<int> idx = subsample_indices(
                target_features.rows, n,
                Rng::derive_seed(cfg.seed, "random-select-" + std::to_string(m)));
            selected = pick_from_assignment(assign, std::move(idx), m);
            break;
        }
        case SelectionPolicy::All: {
            std::vector<int> idx(static_cast<std::size_t>(target_features.rows));
            for (int i = 0; i < target_features.rows; ++i) idx[static_cast<std::size_t>(i)] = i;
            selected = pick_from_assignment(assign, std::move(idx), m);
            break;
        }
    }

    StepOutcome out;
    out.selection.step = m;
    out.selection.tau = tau;
    out.selection.n_selected = static_cast<int>(selected.size());
    out.selection.class_counts = selection_class_counts(selected, class_count);
    out.selection.precision = kNan;
    out.selection.random_precision = kNan;
    if (probe && probe->selection_accuracy) {
        if (auto precision = probe->selection_accuracy(selected))
            out.selection.precision = *precision;
        if (!selected.empty()) {
            std::vector<int> idx = subsample_indices(
                target_features.rows, static_cast<int>(selected.size()),
                Rng::derive_seed(cfg.seed, "random-baseline-" + std::to_string(m)));
            PseudoLabeledSet baseline = pick_from_assignment(assign, std::move(idx), m);
            if (auto precision = probe->selection_accuracy(baseline))
                out.selection.random_precision = *precision;
        }
    }

    const bool degraded = selected.empty();
    if (degraded)
        std::fprintf(stderr,
                     "warning: step %d selected no target samples; "
                     "falling back to source-classification-only updates\n",
                     m);

    GlobalPrototypeState proto_state;
    Matrix selected_features;
    if (!degraded) {
        selected_features = target_features.gather_rows(selected.indices);
        Matrix selected_embed = target_embed.gather_rows(selected.indices);
        proto_state =
            init_global(source_embed, source_labels, selected_embed, selected.labels, class_count);
    }

    ProgressClock clock{static_cast<long long>(cfg.steps) * cfg.iters_per_step,
                       static_cast<long long>(m - 1) * cfg.iters_per_step};
    const int batch_source = std::min(cfg.batch / 2, source.size());
    const int batch_target = cfg.batch - cfg.batch / 2;

    out.iterations.reserve(static_cast<std::size_t>(cfg.iters_per_step));
    for (int j = 0; j < cfg.iters_per_step; ++j) {
        double p = clock.p();
        double lr = lr_schedule(p, cfg);
        LambdaGamma ramp = lambda_gamma_schedule(p, cfg);
        std::uint64_t iter_seed =
            Rng::derive_seed(cfg.seed, "adapt-" + std::to_string(clock.completed));

        std::vector<int> source_idx =
            subsample_indices(source.size(), batch_source, Rng::derive_seed(iter_seed, "source"));
        Matrix xs = source.features.gather_rows(source_idx);
        std::vector<int> ys = gather_ints(source_labels, source_idx);

        Matrix xt;
        std::vector<int> yt;
        if (!degraded) {
            std::vector<int> pos;
            int n_sel = static_cast<int>(selected.size());
            if (n_sel >= batch_target) {
                pos = subsample_indices(n_sel, batch_target, Rng::derive_seed(iter_seed, "target"));
            } else {
                Rng draw(Rng::derive_seed(iter_seed, "target"));
                pos.reserve(static_cast<std::size_t>(batch_target));
                for (int i = 0; i < batch_target; ++i) pos.push_back(draw.uniform_int(n_sel));
            }
            xt = selected_features.gather_rows(pos);
            yt = gather_ints(selected.labels, pos);
        }

        Matrix xdom;
        const Matrix* xdom_ptr = nullptr;
        if (!degraded && cfg.domain_loss_target == DomainLossTarget::Full) {
            std::vector<int> idx = subsample_indices(target_features.rows, batch_target,
                                                     Rng::derive_seed(iter_seed, "domain"));
            xdom = target_features.gather_rows(idx);
            xdom_ptr = &xdom;
        }

        model.zero_grad();
        CompositeResult result =
            composite_backward(model, xs, ys, xt, yt, degraded ? nullptr : &proto_state,
                               ramp.lambda, ramp.gamma, cfg, xdom_ptr);
        if (result.apa_ran) commit_apa_step(proto_state, result.apa);

        for (LayerParams* layer : model.all_layers()) sgd_momentum_step(*layer, lr, cfg.momentum);

        out.iterations.push_back({m, j, p, lr, ramp.lambda, ramp.gamma, result.loss_total,
                                  result.loss_classification, result.loss_domain,
                                  result.loss_alignment});

        if (collect_proto_trace && result.apa_ran) {
            for (int k = 0; k < class_count; ++k) {
                double dist = kNan;
                if (proto_state.source.global.valid(k) && proto_state.target.global.valid(k)) {
                    const double* cs = proto_state.source.global.centroids.row_ptr(k);
                    const double* ct = proto_state.target.global.centroids.row_ptr(k);
                    double sum = 0.0;
                    for (int c = 0; c < proto_state.source.global.dim(); ++c) {
                        double d = cs[c] - ct[c];
                        sum += d * d;
                    }
                    dist = std::sqrt(sum);
                }
                out.proto_trace.push_back({m, proto_state.iteration, k,
                                           result.apa.rho_source[static_cast<std::size_t>(k)],
                                           result.apa.rho_target[static_cast<std::size_t>(k)],
                                           dist});
            }
        }
        clock.advance();
    }

    out.selected = std::move(selected);
    return out;
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

void continue_adaptation(PfanModel& model, int start_m, const TrainConfig& raw_cfg,
                         const DomainDataset& source, const DomainDataset& target,
                         const RunOptions& opts, RunReport& report) {
    TrainConfig cfg = effective_config(raw_cfg);
    cfg.validate();
    if (target.labels)
        throw ConfigError("target dataset must be label-free during training; "
                          "metrics flow through the eval probe");
    if (start_m < 0 || start_m > cfg.steps)
        throw ParameterError("resume step outside [0, steps]");

    for (int m = start_m + 1; m <= cfg.steps; ++m) {
        if (cfg.reset_momentum_each_step) model.zero_momentum();
        StepOutcome outcome = adaptation_step(model, m, cfg, source, target.features, opts.probe,
                                              opts.collect_proto_trace);

        double sum_c = 0.0, sum_d = 0.0, sum_a = 0.0;
        int n_d = 0, n_a = 0;
        for (const IterRow& r : outcome.iterations) {
            sum_c += r.loss_classification;
            if (!std::isnan(r.loss_domain)) {
                sum_d += r.loss_domain;
                ++n_d;
            }
            if (!std::isnan(r.loss_alignment)) {
                sum_a += r.loss_alignment;
                ++n_a;
            }
        }
        const IterRow& last = outcome.iterations.back();

        StepRow row;
        row.step = m;
        row.iter = static_cast<long long>(m) * cfg.iters_per_step;
        row.p = last.p;
        row.lr = last.lr;
        row.lambda = last.lambda;
        row.gamma = last.gamma;
        row.loss_classification = sum_c / static_cast<double>(outcome.iterations.size());
        row.loss_domain = n_d ? sum_d / n_d : kNan;
        row.loss_alignment = n_a ? sum_a / n_a : kNan;
        row.tau = outcome.selection.tau;
        row.n_selected = outcome.selection.n_selected;
        row.source_accuracy = accuracy(model, source);
        row.target_accuracy = kNan;
        row.pseudo_accuracy = outcome.selection.precision;
        if (opts.probe && opts.probe->target_accuracy)
            row.target_accuracy = opts.probe->target_accuracy(model.predict(target.features));

        report.rows.push_back(row);
        report.selections.push_back(std::move(outcome.selection));
        report.iterations.insert(report.iterations.end(), outcome.iterations.begin(),
                                 outcome.iterations.end());
        report.proto_trace.insert(report.proto_trace.end(), outcome.proto_trace.begin(),
                                  outcome.proto_trace.end());

        if (!opts.snapshot_dir.empty())
            save_snapshot(opts.snapshot_dir + "/model_" + std::to_string(m) + ".snap", model, m);
    }
}

RunReport run(const TrainConfig& raw_cfg, const DomainDataset& source, const DomainDataset& target,
              const RunOptions& opts) {
    TrainConfig cfg = effective_config(raw_cfg);
    cfg.validate();
    source.validate();
    target.validate();
    if (target.labels)
        throw ConfigError("target dataset must be label-free during training; "
                          "metrics flow through the eval probe");
    if (source.dim() != target.dim()) throw DataError("source and target dims differ");

    RunReport report;
    report.variant = variant_name(raw_cfg.variant);
    report.seed = cfg.seed;

    PretrainResult pretrained = pretrain_source(cfg, source);
    report.pretrain_epoch_loss = pretrained.epoch_loss;
    if (!opts.snapshot_dir.empty())
        save_snapshot(opts.snapshot_dir + "/model_0.snap", pretrained.model, 0);

    PfanModel model = pretrained.model;
    if (opts.keep_models) report.stage1_model = std::move(pretrained.model);

    if (cfg.variant == Variant::SourceOnly) {
        StepRow row;
        row.step = 0;
        row.iter = 0;
        row.p = 0.0;
        row.lr = cfg.lr0;
        row.lambda = 0.0;
        row.gamma = 0.0;
        row.loss_classification = report.pretrain_epoch_loss.back();
        row.loss_domain = kNan;
        row.loss_alignment = kNan;
        row.tau = kNan;
        row.n_selected = 0;
        row.source_accuracy = accuracy(model, source);
        row.target_accuracy = kNan;
        row.pseudo_accuracy = kNan;
        if (opts.probe && opts.probe->target_accuracy)
            row.target_accuracy = opts.probe->target_accuracy(model.predict(target.features));
        report.rows.push_back(row);
        report.final_source_accuracy = row.source_accuracy;
        report.final_target_accuracy = row.target_accuracy;
        if (!opts.snapshot_dir.empty())
            save_snapshot(opts.snapshot_dir + "/model_final.snap", model, 0);
        if (opts.keep_models) report.final_model = std::move(model);
        return report;
    }

    continue_adaptation(model, 0, cfg, source, target, opts, report);
    report.final_source_accuracy = report.rows.back().source_accuracy;
    report.final_target_accuracy = report.rows.back().target_accuracy;
    if (!opts.snapshot_dir.empty())
        save_snapshot(opts.snapshot_dir + "/model_final.snap", model, cfg.steps);
    if (opts.keep_models) report.final_model = std::move(model);
    return report;
}

// ---------------------------------------------------------------------------
// report writers
// ---------------------------------------------------------------------------

void write_run_report_csv(const RunReport& report, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"step", "iter", "p", "lr", "lambda", "gamma", "L_c", "L_d", "L_apa", "tau",
             "n_selected", "source_acc", "target_acc", "pseudo_acc"});
    for (const StepRow& r : report.rows) {
        csv.row({std::to_string(r.step), std::to_string(r.iter), format_real(r.p),
                 format_real(r.lr), format_real(r.lambda), format_real(r.gamma),
                 format_real(r.loss_classification), format_real_or_empty(r.loss_domain),
                 format_real_or_empty(r.loss_alignment), format_real_or_empty(r.tau),
                 std::to_string(r.n_selected), format_real(r.source_accuracy),
                 format_real_or_empty(r.target_accuracy),
                 format_real_or_empty(r.pseudo_accuracy)});
    }
    csv.close();
}

void write_pretrain_curve_csv(const RunReport& report, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"epoch", "loss"});
    for (std::size_t e = 0; e < report.pretrain_epoch_loss.size(); ++e)
        csv.row({std::to_string(e), format_real(report.pretrain_epoch_loss[e])});
    csv.close();
}

void write_selection_log_csv(const RunReport& report, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"step", "tau", "n_selected", "class_counts", "precision", "random_precision"});
    for (const SelectionRecord& s : report.selections) {
        std::string counts;
        for (std::size_t k = 0; k < s.class_counts.size(); ++k) {
            if (k) counts += ';';
            counts += std::to_string(s.class_counts[k]);
        }
        csv.row({std::to_string(s.step), format_real(s.tau), std::to_string(s.n_selected), counts,
                 format_real_or_empty(s.precision), format_real_or_empty(s.random_precision)});
    }
    csv.close();
}

void write_proto_trace_csv(const RunReport& report, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"step", "iteration", "class", "rho_source", "rho_target", "proto_distance"});
    for (const ProtoTraceRow& r : report.proto_trace)
        csv.row({std::to_string(r.step), std::to_string(r.iteration), std::to_string(r.klass),
                 format_real_or_empty(r.rho_source), format_real_or_empty(r.rho_target),
                 format_real_or_empty(r.prototype_distance)});
    csv.close();
}

void write_iteration_log_csv(const RunReport& report, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"step", "iter", "p", "lr", "lambda", "gamma", "loss_total", "L_c", "L_d", "L_apa"});
    for (const IterRow& r : report.iterations)
        csv.row({std::to_string(r.step), std::to_string(r.iter), format_real(r.p),
                 format_real(r.lr), format_real(r.lambda), format_real(r.gamma),
                 format_real(r.loss_total), format_real(r.loss_classification),
                 format_real_or_empty(r.loss_domain), format_real_or_empty(r.loss_alignment)});
    csv.close();
}

}  // namespace pfan

#ifndef PFAN_TRAINER_HPP
#define PFAN_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pfan/apa.hpp"
#include "pfan/datasets.hpp"
#include "pfan/ehts.hpp"
#include "pfan/eval.hpp"
#include "pfan/model.hpp"

namespace pfan {

// ============================================================================
// Two-stage training: source pretraining, then alternating easy-to-hard
// selection and adversarial adaptation with prototype alignment, under the
// annealed lr / ramped lambda,gamma schedules.  Ablation variants are pure
// config rewrites so that toggling a term reproduces the variant bit-for-bit.
// ============================================================================

enum class Variant { Pfan, Random, FullTarget, WoApa, WoA, WoT, SourceOnly };

Variant variant_from_string(const std::string& name);
std::string variant_name(Variant v);
const std::vector<Variant>& all_variants();

enum class SelectionPolicy { EasyToHard, RandomMatched, All };
enum class DomainLossTarget { Selected, Full };
enum class AlignMode { Global, LocalOnly };

struct TrainConfig {
    double lr0 = 0.01;
    double alpha = 10.0;
    double beta = 0.75;  // lr_p = lr0 / (1 + alpha p)^beta
    double delta = 10.0; // lambda = gamma = 2 / (1 + exp(-delta p)) - 1
    double temperature = 1.8;
    double mu = 0.8;      // selection threshold growth rate
    double momentum = 0.9;
    double lambda_scale = 1.0;  // multipliers on the shared ramp, normally 1
    double gamma_scale = 1.0;
    int batch = 128;  // split evenly between the domains in stage 2
    int steps = 6;
    int iters_per_step = 200;
    int pretrain_epochs = 30;
    std::uint64_t seed = 0;
    Variant variant = Variant::Pfan;
    SelectionPolicy selection_policy = SelectionPolicy::EasyToHard;
    DomainLossTarget domain_loss_target = DomainLossTarget::Selected;
    AlignMode align_mode = AlignMode::Global;
    bool shared_rho = false;
    bool reset_momentum_each_step = false;
    ModelConfig model;

    void validate() const;
};

// Folds the variant into concrete toggles (gamma_scale, temperature,
// selection_policy, align_mode); everything else is left untouched.
TrainConfig effective_config(const TrainConfig& cfg);

// Fraction of stage-2 iterations completed; drives every schedule.
struct ProgressClock {
    long long total = 0;
    long long completed = 0;

    double p() const;
    void advance() { ++completed; }
};

double lr_schedule(double p, const TrainConfig& cfg);

struct LambdaGamma {
    double lambda = 0.0;
    double gamma = 0.0;
};
LambdaGamma lambda_gamma_schedule(double p, const TrainConfig& cfg);

// ----------------------------------------------------------------------------
// Records
// ----------------------------------------------------------------------------

// One stage-2 mini-batch update.  Absent quantities (e.g. domain loss while
// the selection is empty) are NaN.
struct IterRow {
    int step = 0;
    int iter = 0;  // within the step
    double p = 0.0, lr = 0.0, lambda = 0.0, gamma = 0.0;
    double loss_total = 0.0, loss_classification = 0.0;
    double loss_domain = 0.0, loss_alignment = 0.0;
};

struct SelectionRecord {
    int step = 0;
    double tau = 0.0;
    int n_selected = 0;
    std::vector<int> class_counts;
    double precision = 0.0;         // NaN without an oracle probe or when empty
    double random_precision = 0.0;  // size-matched random baseline, NaN likewise
};

struct ProtoTraceRow {
    int step = 0;
    int iteration = 0;
    int klass = 0;
    double rho_source = 0.0, rho_target = 0.0;  // NaN where the blend was skipped
    double prototype_distance = 0.0;            // || c_S - c_T ||, NaN when a side is invalid
};

// One row of the per-step report CSV.
struct StepRow {
    int step = 0;
    long long iter = 0;  // cumulative stage-2 iterations completed
    double p = 0.0, lr = 0.0, lambda = 0.0, gamma = 0.0;
    double loss_classification = 0.0;  // step means; NaN = absent
    double loss_domain = 0.0;
    double loss_alignment = 0.0;
    double tau = 0.0;  // NaN on the source-only row
    int n_selected = 0;
    double source_accuracy = 0.0;
    double target_accuracy = 0.0;  // NaN without a probe
    double pseudo_accuracy = 0.0;  // NaN without a probe or when empty
};

struct RunReport {
    std::string variant;
    std::uint64_t seed = 0;
    std::vector<StepRow> rows;
    std::vector<IterRow> iterations;
    std::vector<double> pretrain_epoch_loss;
    std::vector<SelectionRecord> selections;
    std::vector<ProtoTraceRow> proto_trace;
    double final_source_accuracy = 0.0;
    double final_target_accuracy = 0.0;  // NaN without a probe
    std::optional<PfanModel> stage1_model;
    std::optional<PfanModel> final_model;
};

// ----------------------------------------------------------------------------
// Stage 1
// ----------------------------------------------------------------------------

struct PretrainResult {
    PfanModel model;
    std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Trains G and F on the labeled source with temperature cross-entropy only.
PretrainResult pretrain_source(const TrainConfig& cfg, const DomainDataset& source);

// ----------------------------------------------------------------------------
// Stage 2
// ----------------------------------------------------------------------------

// One full objective evaluation and backward pass on explicit batches,
// accumulating parameter gradients: classification + lambda * domain
// (reversed into the feature extractor) + gamma * alignment.  The prototype
// state is read but not advanced; the caller commits the returned alignment
// update.  Null / inactive state or an empty target batch degrades to the
// terms that remain.  xt_domain substitutes a different batch for the
// discriminator only (domain_loss_target = Full); defaults to xt.
struct CompositeResult {
    double loss_total = 0.0;
    double loss_classification = 0.0;
    double loss_domain = 0.0;     // NaN when the term did not run
    double loss_alignment = 0.0;  // NaN when the term did not run
    ApaStepResult apa;
    bool apa_ran = false;
};

CompositeResult composite_backward(PfanModel& model, const Matrix& xs, const std::vector<int>& ys,
                                   const Matrix& xt, const std::vector<int>& yt,
                                   const GlobalPrototypeState* proto_state, double lambda,
                                   double gamma, const TrainConfig& cfg,
                                   const Matrix* xt_domain = nullptr);

struct StepOutcome {
    SelectionRecord selection;
    PseudoLabeledSet selected;
    std::vector<IterRow> iterations;
    std::vector<ProtoTraceRow> proto_trace;
};

// Runs step m (1-based): selection with threshold(m-1), prototype
// initialization from the current model, then iters_per_step updates.
StepOutcome adaptation_step(PfanModel& model, int m, const TrainConfig& cfg,
                            const DomainDataset& source, const Matrix& target_features,
                            const MetricsProbe* probe = nullptr,
                            bool collect_proto_trace = false);

// ----------------------------------------------------------------------------
// Orchestration
// ----------------------------------------------------------------------------

struct RunOptions {
    const MetricsProbe* probe = nullptr;
    bool collect_proto_trace = false;
    bool keep_models = true;     // retain stage-1 and final models in the report
    std::string snapshot_dir;    // when set, model files are written here
};

// Stage-2 steps start_m+1 .. cfg.steps on a model that has completed
// start_m, appending rows to the report.  cfg must already be effective.
void continue_adaptation(PfanModel& model, int start_m, const TrainConfig& cfg,
                         const DomainDataset& source, const DomainDataset& target,
                         const RunOptions& opts, RunReport& report);

// The whole algorithm: pretrain, then adapt (SourceOnly stops after stage 1).
// The target dataset must be label-free; ground truth reaches the report only
// through the opaque probe.
RunReport run(const TrainConfig& cfg, const DomainDataset& source, const DomainDataset& target,
              const RunOptions& opts = {});

// ----------------------------------------------------------------------------
// Report writers (UTF-8, comma-separated, header row, %.17g reals)
// ----------------------------------------------------------------------------

void write_run_report_csv(const RunReport& report, const std::string& path);
void write_pretrain_curve_csv(const RunReport& report, const std::string& path);
void write_selection_log_csv(const RunReport& report, const std::string& path);
void write_proto_trace_csv(const RunReport& report, const std::string& path);
void write_iteration_log_csv(const RunReport& report, const std::string& path);

}  // namespace pfan

#endif

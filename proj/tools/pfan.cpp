// ============================================================================
// pfan: command-line driver for the progressive feature alignment trainer.
//
// Subcommands: gen-data | pretrain | adapt | ablate | eval.  Every run is
// described by a JSON manifest; selected flags override manifest keys so
// sweeps don't need one file per run.  The effective manifest is copied into
// the output directory, and partial outputs are removed when a command fails.
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 training divergence.
// ============================================================================

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pfan/dataset_csv.hpp"
#include "pfan/datasets.hpp"
#include "pfan/ehts.hpp"
#include "pfan/errors.hpp"
#include "pfan/eval.hpp"
#include "pfan/idx.hpp"
#include "pfan/model.hpp"
#include "pfan/rng.hpp"
#include "pfan/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ----------------------------------------------------------------------------
// Output directory: resolves against PFAN_OUTPUT_ROOT, tracks every path the
// command intends to write so a failure can remove partial outputs.
// ----------------------------------------------------------------------------
class OutputDir {
public:
    explicit OutputDir(const json& manifest) {
        fs::path p(manifest.value("output_dir", std::string("pfan-out")));
        if (const char* root = std::getenv("PFAN_OUTPUT_ROOT"); root && *root && p.is_relative())
            p = fs::path(root) / p;
        path_ = p;
        created_root_ = !fs::exists(p);
        fs::create_directories(p);
    }

    // Registers `name` for cleanup and returns its full path.
    std::string file(const std::string& name) {
        std::lock_guard<std::mutex> lock(mu_);
        fs::path p = path_ / name;
        written_.push_back(p);
        return p.string();
    }

    // Creates (and registers) a subdirectory.
    std::string subdir(const std::string& name) {
        std::lock_guard<std::mutex> lock(mu_);
        fs::path p = path_ / name;
        fs::create_directories(p);
        written_.push_back(p);
        return p.string();
    }

    const fs::path& path() const { return path_; }

    void remove_outputs() noexcept {
        std::lock_guard<std::mutex> lock(mu_);
        std::error_code ec;
        for (auto it = written_.rbegin(); it != written_.rend(); ++it) fs::remove_all(*it, ec);
        if (created_root_) fs::remove(path_, ec);  // only succeeds when empty
    }

private:
    fs::path path_;
    bool created_root_ = false;
    std::vector<fs::path> written_;
    std::mutex mu_;
};

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pfan::DataError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw pfan::DataError("failed writing " + path);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

// ----------------------------------------------------------------------------
// Manifest handling
// ----------------------------------------------------------------------------
json load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pfan::ConfigError("cannot open manifest " + path);
    json m;
    try {
        m = json::parse(in);
    } catch (const json::parse_error& e) {
        throw pfan::ConfigError("manifest " + path + ": " + e.what());
    }
    if (!m.is_object()) throw pfan::ConfigError("manifest " + path + ": expected a JSON object");
    return m;
}

struct Overrides {
    std::string output;
    std::optional<std::uint64_t> seed;
    std::string variant;
    std::optional<int> steps;
    std::optional<int> iters_per_step;
    std::optional<int> pretrain_epochs;
    std::string start_model;  // adapt: resume snapshot
    std::string snapshot;     // eval: model to inspect
};

// Flags override manifest keys; the stored manifest copy reflects the result.
json apply_overrides(json m, const Overrides& o) {
    if (!o.output.empty()) m["output_dir"] = o.output;
    if (o.seed) m["seed"] = *o.seed;
    if (!o.variant.empty()) m["train"]["variant"] = o.variant;
    if (o.steps) m["train"]["steps"] = *o.steps;
    if (o.iters_per_step) m["train"]["iters_per_step"] = *o.iters_per_step;
    if (o.pretrain_epochs) m["train"]["pretrain_epochs"] = *o.pretrain_epochs;
    if (!o.start_model.empty()) m["train"]["start_model"] = o.start_model;
    if (!o.snapshot.empty()) m["eval"]["snapshot"] = o.snapshot;
    return m;
}

std::uint64_t manifest_seed(const json& m) { return m.value("seed", std::uint64_t{0}); }

pfan::SelectionPolicy policy_from_string(const std::string& s) {
    if (s == "easy_to_hard") return pfan::SelectionPolicy::EasyToHard;
    if (s == "random_matched") return pfan::SelectionPolicy::RandomMatched;
    if (s == "all") return pfan::SelectionPolicy::All;
    throw pfan::ConfigError("unknown selection_policy: " + s);
}

pfan::TrainConfig train_config(const json& m) {
    const json t = m.value("train", json::object());
    pfan::TrainConfig cfg;
    cfg.lr0 = t.value("lr0", cfg.lr0);
    cfg.alpha = t.value("alpha", cfg.alpha);
    cfg.beta = t.value("beta", cfg.beta);
    cfg.delta = t.value("delta", cfg.delta);
    cfg.temperature = t.value("temperature", cfg.temperature);
    cfg.mu = t.value("mu", cfg.mu);
    cfg.momentum = t.value("momentum", cfg.momentum);
    cfg.lambda_scale = t.value("lambda_scale", cfg.lambda_scale);
    cfg.gamma_scale = t.value("gamma_scale", cfg.gamma_scale);
    cfg.batch = t.value("batch", cfg.batch);
    cfg.steps = t.value("steps", cfg.steps);
    cfg.iters_per_step = t.value("iters_per_step", cfg.iters_per_step);
    cfg.pretrain_epochs = t.value("pretrain_epochs", cfg.pretrain_epochs);
    cfg.seed = t.value("seed", manifest_seed(m));
    cfg.variant = pfan::variant_from_string(t.value("variant", std::string("PFAN")));
    if (t.contains("selection_policy"))
        cfg.selection_policy = policy_from_string(t.at("selection_policy").get<std::string>());
    if (t.contains("domain_loss_target")) {
        std::string d = t.at("domain_loss_target").get<std::string>();
        if (d == "selected") cfg.domain_loss_target = pfan::DomainLossTarget::Selected;
        else if (d == "full") cfg.domain_loss_target = pfan::DomainLossTarget::Full;
        else throw pfan::ConfigError("unknown domain_loss_target: " + d);
    }
    if (t.contains("align_mode")) {
        std::string a = t.at("align_mode").get<std::string>();
        if (a == "global") cfg.align_mode = pfan::AlignMode::Global;
        else if (a == "local") cfg.align_mode = pfan::AlignMode::LocalOnly;
        else throw pfan::ConfigError("unknown align_mode: " + a);
    }
    cfg.shared_rho = t.value("shared_rho", cfg.shared_rho);
    cfg.reset_momentum_each_step = t.value("reset_momentum_each_step", cfg.reset_momentum_each_step);
    cfg.model.hidden_dim = t.value("hidden_dim", cfg.model.hidden_dim);
    cfg.model.feature_dim = t.value("feature_dim", cfg.model.feature_dim);
    cfg.model.disc_hidden = t.value("disc_hidden", cfg.model.disc_hidden);
    cfg.model.temperature = cfg.temperature;
    return cfg;
}

// ----------------------------------------------------------------------------
// Dataset loading: synthetic generation ("task"), CSV/IDX files ("data").
// Ground truth, when available, goes into the side channel only.
// ----------------------------------------------------------------------------
struct LoadedData {
    pfan::DomainDataset source;  // labeled
    pfan::DomainDataset target;  // labels stripped
    std::vector<int> truth;      // empty when unavailable
    bool has_truth = false;
    json provenance;
};

pfan::SyntheticShiftSpec task_spec(const json& m) {
    const json t = m.at("task");
    pfan::SyntheticShiftSpec s;
    s.class_count = t.value("class_count", s.class_count);
    s.input_dim = t.value("input_dim", s.input_dim);
    s.per_class = t.value("per_class", s.per_class);
    s.radius = t.value("radius", s.radius);
    s.rotation = t.value("rotation_degrees", 0.0) * std::numbers::pi / 180.0;
    s.translation = t.value("translation", std::vector<double>{});
    s.noise_sigma = t.value("noise_sigma", s.noise_sigma);
    s.target_noise_scale = t.value("target_noise_scale", s.target_noise_scale);
    s.seed = t.value("seed", pfan::Rng::derive_seed(manifest_seed(m), "data"));
    return s;
}

LoadedData from_generator(const json& m) {
    const json t = m.at("task");
    std::string kind = t.value("kind", std::string("gaussian"));
    pfan::SyntheticShiftSpec spec = task_spec(m);
    pfan::GenResult gen;
    if (kind == "gaussian") gen = pfan::gen_gaussian_shift(spec);
    else if (kind == "two_moons") gen = pfan::gen_two_moons_shift(spec);
    else throw pfan::ConfigError("unknown task kind: " + kind);

    LoadedData out;
    out.source = std::move(gen.source);
    out.target = std::move(gen.target);
    out.truth = std::move(gen.target_truth);
    out.has_truth = true;
    out.provenance = {{"kind", kind},
                      {"class_count", spec.class_count},
                      {"input_dim", spec.input_dim},
                      {"per_class", spec.per_class},
                      {"radius", spec.radius},
                      {"rotation_degrees", t.value("rotation_degrees", 0.0)},
                      {"noise_sigma", spec.noise_sigma},
                      {"target_noise_scale", spec.target_noise_scale},
                      {"data_seed", spec.seed},
                      {"standardizer_mean", gen.standardizer.mean},
                      {"standardizer_std_dev", gen.standardizer.std_dev}};
    return out;
}

pfan::DomainDataset load_idx_domain(const json& d, const char* img_key, const char* lbl_key,
                                    int image_size, pfan::DomainTag tag) {
    pfan::IdxTensor img = pfan::load_idx(d.at(img_key).get<std::string>());
    pfan::Matrix x = pfan::decode_images(img);
    int h = static_cast<int>(img.dims[1]);
    int w = static_cast<int>(img.dims[2]);
    if (image_size > 0 && (h != image_size || w != image_size))
        x = pfan::downsample_bilinear(x, h, w, image_size, image_size);
    std::vector<int> labels = pfan::decode_labels(pfan::load_idx(d.at(lbl_key).get<std::string>()));
    if (static_cast<int>(labels.size()) != x.rows)
        throw pfan::DataError("image/label counts differ for " + d.at(img_key).get<std::string>());
    int class_count = 0;
    for (int y : labels) class_count = std::max(class_count, y + 1);
    pfan::DomainDataset out;
    out.features = std::move(x);
    out.labels = std::move(labels);
    out.domain_tag = tag;
    out.class_count = class_count;
    return out;
}

LoadedData from_files(const json& m) {
    const json d = m.at("data");
    LoadedData out;

    if (d.contains("source_images")) {
        int image_size = d.value("image_size", 0);
        std::uint64_t data_seed =
            d.value("seed", pfan::Rng::derive_seed(manifest_seed(m), "data"));
        pfan::DomainDataset source = load_idx_domain(d, "source_images", "source_labels",
                                                     image_size, pfan::DomainTag::Source);
        pfan::DomainDataset target = load_idx_domain(d, "target_images", "target_labels",
                                                     image_size, pfan::DomainTag::Target);
        int class_count = std::max(source.class_count, target.class_count);
        source.class_count = target.class_count = class_count;
        if (int n = d.value("source_count", 0); n > 0 && n < source.size())
            source = pfan::subsample(source, n, pfan::Rng::derive_seed(data_seed, "source-subset"));
        if (int n = d.value("target_count", 0); n > 0 && n < target.size())
            target = pfan::subsample(target, n, pfan::Rng::derive_seed(data_seed, "target-subset"));
        if (d.value("standardize", true)) {
            pfan::Standardizer std_xform = pfan::Standardizer::fit(source.features);
            std_xform.apply(source.features);
            std_xform.apply(target.features);
        }
        out.truth = *target.labels;
        out.has_truth = true;
        target.labels.reset();
        out.source = std::move(source);
        out.target = std::move(target);
        out.provenance = {{"kind", "idx"},
                          {"class_count", class_count},
                          {"image_size", image_size},
                          {"data_seed", data_seed}};
        return out;
    }

    std::string dir = d.value("dir", std::string());
    auto resolve = [&](const char* key, const std::string& fallback) {
        if (d.contains(key)) return d.at(key).get<std::string>();
        if (dir.empty()) throw pfan::ConfigError(std::string("data section needs '") + key +
                                                 "' or a 'dir' containing " + fallback);
        return (fs::path(dir) / fallback).string();
    };
    std::string source_path = resolve("source_csv", "source.csv");
    std::string target_path = resolve("target_csv", "target.csv");
    int class_count = d.value("class_count", 0);
    if (class_count <= 0) throw pfan::ConfigError("data section needs a positive class_count");

    out.source = pfan::load_labeled_csv(source_path, class_count, pfan::DomainTag::Source);
    out.target.features = pfan::load_features_csv(target_path);
    out.target.domain_tag = pfan::DomainTag::Target;
    out.target.class_count = class_count;

    std::string truth_path;
    if (d.contains("truth_csv")) truth_path = d.at("truth_csv").get<std::string>();
    else if (!dir.empty()) {
        fs::path candidate = fs::path(dir) / "target_truth.csv";
        if (fs::exists(candidate)) truth_path = candidate.string();
    }
    if (!truth_path.empty()) {
        out.truth = pfan::load_truth_csv(truth_path);
        if (static_cast<int>(out.truth.size()) != out.target.size())
            throw pfan::DataError("ground truth size does not match target dataset");
        out.has_truth = true;
    }
    out.provenance = {{"kind", "csv"},
                      {"source_csv", source_path},
                      {"target_csv", target_path},
                      {"class_count", class_count}};
    return out;
}

LoadedData load_data(const json& m) {
    if (m.contains("task")) return from_generator(m);
    if (m.contains("data")) return from_files(m);
    throw pfan::ConfigError("manifest needs a 'task' (synthetic) or 'data' (files) section");
}

pfan::TrainConfig configured_for(const json& m, const LoadedData& data) {
    pfan::TrainConfig cfg = train_config(m);
    cfg.model.input_dim = data.source.dim();
    cfg.model.class_count = data.source.class_count;
    return cfg;
}

// ----------------------------------------------------------------------------
// Commands
// ----------------------------------------------------------------------------
int cmd_gen_data(const json& m) {
    OutputDir out(m);
    try {
        LoadedData data = load_data(m);
        pfan::write_labeled_csv(data.source, out.file("source.csv"));
        pfan::write_features_csv(data.target.features, out.file("target.csv"));
        if (data.has_truth) pfan::write_truth_csv(data.truth, out.file("target_truth.csv"));

        json prov = data.provenance;
        prov["source_count"] = data.source.size();
        prov["target_count"] = data.target.size();
        prov["source_class_histogram"] = data.source.class_histogram();
        write_json_file(out.file("provenance.json"), prov);
        write_json_file(out.file("manifest.json"), m);
        std::cout << "wrote " << data.source.size() << " source / " << data.target.size()
                  << " target samples to " << out.path().string() << "\n";
        return 0;
    } catch (...) {
        out.remove_outputs();
        throw;
    }
}

int cmd_pretrain(const json& m) {
    OutputDir out(m);
    try {
        LoadedData data = load_data(m);
        pfan::TrainConfig cfg = configured_for(m, data);
        pfan::PretrainResult pre = pfan::pretrain_source(cfg, data.source);
        pfan::save_snapshot(out.file("model_0.snap"), pre.model, 0);

        pfan::RunReport curve;
        curve.pretrain_epoch_loss = pre.epoch_loss;
        pfan::write_pretrain_curve_csv(curve, out.file("pretrain_curve.csv"));

        double src_acc = pfan::accuracy(pre.model, data.source);
        write_json_file(out.file("summary.json"),
                        {{"command", "pretrain"},
                         {"seed", cfg.seed},
                         {"epochs", cfg.pretrain_epochs},
                         {"final_epoch_loss", pre.epoch_loss.back()},
                         {"source_accuracy", src_acc}});
        write_json_file(out.file("manifest.json"), m);
        std::cout << "pretrained " << cfg.pretrain_epochs << " epochs; source accuracy "
                  << src_acc << "; model at " << (out.path() / "model_0.snap").string() << "\n";
        return 0;
    } catch (...) {
        out.remove_outputs();
        throw;
    }
}

json summarize_run(const pfan::RunReport& report) {
    return {{"variant", report.variant},
            {"seed", report.seed},
            {"steps", report.rows.size()},
            {"final_source_accuracy", finite_or_null(report.final_source_accuracy)},
            {"final_target_accuracy", finite_or_null(report.final_target_accuracy)}};
}

int cmd_adapt(const json& m) {
    OutputDir out(m);
    try {
        LoadedData data = load_data(m);
        pfan::TrainConfig cfg = configured_for(m, data);
        const json t = m.value("train", json::object());
        const json metrics = m.value("metrics", json::object());

        std::optional<pfan::TargetOracle> oracle;
        pfan::MetricsProbe probe;
        pfan::RunOptions opts;
        if (data.has_truth) {
            oracle.emplace(data.truth);
            probe = oracle->make_probe();
            opts.probe = &probe;
        }
        opts.collect_proto_trace = metrics.value("proto_trace", false);
        opts.keep_models = false;
        opts.snapshot_dir = out.path().string();
        for (int s = 0; s <= cfg.steps; ++s) out.file("model_" + std::to_string(s) + ".snap");
        out.file("model_final.snap");

        pfan::RunReport report;
        std::string start_model = t.value("start_model", std::string());
        if (!start_model.empty()) {
            if (cfg.variant == pfan::Variant::SourceOnly)
                throw pfan::ConfigError("start_model cannot be combined with SourceOnly");
            pfan::TrainConfig eff = pfan::effective_config(cfg);
            pfan::PfanModel model(eff.model);
            int start_m = pfan::load_snapshot(start_model, model);
            report.variant = pfan::variant_name(cfg.variant);
            report.seed = cfg.seed;
            pfan::continue_adaptation(model, start_m, cfg, data.source, data.target, opts, report);
            if (report.rows.empty())
                throw pfan::ConfigError("start_model is already at the final step");
            report.final_source_accuracy = report.rows.back().source_accuracy;
            report.final_target_accuracy = report.rows.back().target_accuracy;
            pfan::save_snapshot(out.file("model_final.snap"), model, cfg.steps);
        } else {
            report = pfan::run(cfg, data.source, data.target, opts);
        }

        pfan::write_run_report_csv(report, out.file("run_report.csv"));
        if (!report.selections.empty())
            pfan::write_selection_log_csv(report, out.file("selection_log.csv"));
        if (!report.pretrain_epoch_loss.empty())
            pfan::write_pretrain_curve_csv(report, out.file("pretrain_curve.csv"));
        if (metrics.value("iteration_log", false))
            pfan::write_iteration_log_csv(report, out.file("iteration_log.csv"));
        if (opts.collect_proto_trace && !report.proto_trace.empty())
            pfan::write_proto_trace_csv(report, out.file("proto_trace.csv"));
        write_json_file(out.file("summary.json"), summarize_run(report));
        write_json_file(out.file("manifest.json"), m);
        std::cout << report.variant << " seed " << report.seed << ": source accuracy "
                  << report.final_source_accuracy;
        if (std::isfinite(report.final_target_accuracy))
            std::cout << ", target accuracy " << report.final_target_accuracy;
        std::cout << "; report at " << (out.path() / "run_report.csv").string() << "\n";
        return 0;
    } catch (...) {
        out.remove_outputs();
        throw;
    }
}

int cmd_ablate(const json& m) {
    OutputDir out(m);
    try {
        LoadedData data = load_data(m);
        if (!data.has_truth)
            throw pfan::ConfigError("ablation needs target ground truth for its table; "
                                    "use a synthetic task or provide target_truth.csv");
        pfan::TrainConfig base = configured_for(m, data);
        const json ab = m.value("ablate", json::object());

        std::vector<std::string> names;
        if (ab.contains("variants")) names = ab.at("variants").get<std::vector<std::string>>();
        else
            for (pfan::Variant v : pfan::all_variants()) names.push_back(pfan::variant_name(v));
        std::vector<std::uint64_t> seeds =
            ab.value("seeds", std::vector<std::uint64_t>{0, 1, 2, 3, 4});
        if (names.empty() || seeds.empty())
            throw pfan::ConfigError("ablation needs at least one variant and one seed");
        bool per_run_reports = ab.value("per_run_reports", true);

        struct Job {
            pfan::Variant variant;
            std::uint64_t seed;
        };
        std::vector<Job> jobs;
        for (const std::string& n : names)
            for (std::uint64_t s : seeds) jobs.push_back({pfan::variant_from_string(n), s});

        pfan::TargetOracle oracle(data.truth);
        pfan::MetricsProbe probe = oracle.make_probe();

        int workers = ab.value("workers", 0);
        if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
        workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));

        std::vector<pfan::VariantOutcome> outcomes(jobs.size());
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
        std::atomic<std::size_t> cursor{0};

        auto work = [&](int worker_id) {
            try {
                std::size_t i;
                while ((i = cursor.fetch_add(1)) < jobs.size()) {
                    pfan::TrainConfig cfg = base;
                    cfg.variant = jobs[i].variant;
                    cfg.seed = jobs[i].seed;
                    pfan::RunOptions opts;
                    opts.probe = &probe;
                    opts.keep_models = false;
                    pfan::RunReport report = pfan::run(cfg, data.source, data.target, opts);
                    outcomes[i] = {report.variant, report.seed, report.final_target_accuracy};
                    if (per_run_reports) {
                        std::string run_dir = out.subdir(
                            "runs/" + report.variant + "-s" + std::to_string(report.seed));
                        pfan::write_run_report_csv(report, run_dir + "/run_report.csv");
                        if (!report.selections.empty())
                            pfan::write_selection_log_csv(report, run_dir + "/selection_log.csv");
                    }
                }
            } catch (...) {
                failures[static_cast<std::size_t>(worker_id)] = std::current_exception();
            }
        };

        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (std::thread& th : pool) th.join();
        for (std::exception_ptr& e : failures)
            if (e) std::rethrow_exception(e);

        std::vector<pfan::AblationRow> table = pfan::ablation_table(outcomes);
        pfan::write_ablation_csv(table, out.file("ablation_table.csv"));

        json medians = json::object();
        for (const pfan::AblationRow& row : table) medians[row.variant] = row.median_accuracy;
        write_json_file(out.file("summary.json"), {{"command", "ablate"},
                                                   {"seeds", seeds},
                                                   {"runs", jobs.size()},
                                                   {"median_target_accuracy", medians}});
        write_json_file(out.file("manifest.json"), m);

        std::cout << "ablation over " << jobs.size() << " runs:\n";
        for (const pfan::AblationRow& row : table)
            std::cout << "  " << row.variant << ": median target accuracy " << row.median_accuracy
                      << "\n";
        return 0;
    } catch (...) {
        out.remove_outputs();
        throw;
    }
}

int cmd_eval(const json& m) {
    OutputDir out(m);
    try {
        LoadedData data = load_data(m);
        pfan::TrainConfig cfg = configured_for(m, data);
        pfan::TrainConfig eff = pfan::effective_config(cfg);
        const json ev = m.value("eval", json::object());

        std::string snap = ev.value("snapshot", std::string());
        if (snap.empty()) snap = (out.path() / "model_final.snap").string();
        else if (fs::path(snap).is_relative() && !fs::exists(snap) &&
                 fs::exists(out.path() / snap))
            snap = (out.path() / snap).string();

        pfan::PfanModel model(eff.model);
        int step_m = pfan::load_snapshot(snap, model);

        pfan::Matrix source_embed = model.forward_features(data.source.features);
        pfan::Matrix target_embed = model.forward_features(data.target.features);

        json result = {{"command", "eval"}, {"snapshot", snap}, {"snapshot_step", step_m}};
        result["source_accuracy"] = pfan::accuracy(model, data.source);

        pfan::PrototypeSet protos =
            pfan::compute_prototypes(source_embed, *data.source.labels,
                                     data.source.class_count, pfan::ProtoTag::Source);
        pfan::Matrix scores = pfan::similarity_scores(target_embed, protos);
        pfan::PseudoAssignment assign = pfan::assign_pseudo_labels(scores);

        if (data.has_truth) {
            result["target_accuracy"] =
                pfan::accuracy(model.predict(data.target.features), data.truth);
            result["pseudo_label_accuracy"] = pfan::accuracy(assign.labels, data.truth);
            json selections = json::array();
            for (int s = 1; s <= eff.steps; ++s) {
                double tau = pfan::threshold(s - 1, eff.mu);
                pfan::PseudoLabeledSet sel = pfan::select_easy(assign, tau, s);
                std::optional<double> precision = pfan::pseudo_label_accuracy(sel, data.truth);
                selections.push_back({{"step", s},
                                      {"tau", tau},
                                      {"n_selected", sel.size()},
                                      {"precision", precision ? json(*precision) : json()}});
            }
            result["selection_by_step"] = selections;
        } else {
            result["target_accuracy"] = nullptr;
            result["pseudo_label_accuracy"] = nullptr;
        }

        if (ev.value("a_distance", true)) {
            std::uint64_t probe_seed =
                ev.value("probe_seed", pfan::Rng::derive_seed(manifest_seed(m), "probe"));
            pfan::ProxyAResult ad = pfan::proxy_a_distance(source_embed, target_embed, probe_seed,
                                                           ev.value("probe_seeds", 3));
            result["proxy_a_distance"] = {{"value", ad.value},
                                          {"conventional", ad.conventional},
                                          {"epsilon_mean", ad.epsilon_mean},
                                          {"per_seed", ad.per_seed}};
        }

        if (ev.value("export_embedding", true)) {
            pfan::Matrix stacked(source_embed.rows + target_embed.rows, source_embed.cols);
            std::copy(source_embed.data.begin(), source_embed.data.end(), stacked.data.begin());
            std::copy(target_embed.data.begin(), target_embed.data.end(),
                      stacked.data.begin() + static_cast<std::ptrdiff_t>(source_embed.data.size()));
            std::vector<int> classes = *data.source.labels;
            const std::vector<int>& target_classes = data.has_truth ? data.truth : assign.labels;
            classes.insert(classes.end(), target_classes.begin(), target_classes.end());
            std::vector<int> domains(static_cast<std::size_t>(stacked.rows), 0);
            for (int i = source_embed.rows; i < stacked.rows; ++i)
                domains[static_cast<std::size_t>(i)] = 1;
            pfan::export_embedding_2d(stacked, classes, domains, out.file("embedding.csv"));
        }

        write_json_file(out.file("eval.json"), result);
        write_json_file(out.file("manifest.json"), m);
        std::cout << "eval of " << snap << ": source accuracy "
                  << result["source_accuracy"].get<double>();
        if (data.has_truth)
            std::cout << ", target accuracy " << result["target_accuracy"].get<double>();
        std::cout << "; details in " << (out.path() / "eval.json").string() << "\n";
        return 0;
    } catch (...) {
        out.remove_outputs();
        throw;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"progressive feature alignment: two-stage unsupervised domain adaptation"};
    app.require_subcommand(1);

    Overrides o;
    std::string manifest_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-m,--manifest", manifest_path, "JSON experiment manifest")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--output", o.output, "override manifest output_dir");
        sub->add_option("--seed", o.seed, "override the manifest seed");
    };
    auto add_train_flags = [&](CLI::App* sub) {
        sub->add_option("--variant", o.variant,
                        "override train.variant (PFAN, Random, FullTarget, woAPA, woA, woT, "
                        "SourceOnly)");
        sub->add_option("--steps", o.steps, "override train.steps");
        sub->add_option("--iters-per-step", o.iters_per_step, "override train.iters_per_step");
        sub->add_option("--pretrain-epochs", o.pretrain_epochs, "override train.pretrain_epochs");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate or re-export a dataset");
    add_common(gen);
    CLI::App* pre = app.add_subcommand("pretrain", "stage 1: source-only pretraining");
    add_common(pre);
    add_train_flags(pre);
    CLI::App* ada = app.add_subcommand("adapt", "full run: pretraining plus staged adaptation");
    add_common(ada);
    add_train_flags(ada);
    ada->add_option("--model", o.start_model, "resume stage 2 from this snapshot");
    CLI::App* abl = app.add_subcommand("ablate", "run the variant grid and tabulate medians");
    add_common(abl);
    add_train_flags(abl);
    CLI::App* evl = app.add_subcommand("eval", "diagnostics for a saved model");
    add_common(evl);
    evl->add_option("--snapshot", o.snapshot, "snapshot to evaluate (default model_final.snap)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        json manifest = apply_overrides(load_manifest(manifest_path), o);
        if (app.got_subcommand(gen)) return cmd_gen_data(manifest);
        if (app.got_subcommand(pre)) return cmd_pretrain(manifest);
        if (app.got_subcommand(ada)) return cmd_adapt(manifest);
        if (app.got_subcommand(abl)) return cmd_ablate(manifest);
        if (app.got_subcommand(evl)) return cmd_eval(manifest);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const pfan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pfan::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pfan::DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pfan::TrainingDivergence& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 4;
    } catch (const pfan::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// Command-line front end: encode, inject-noise, recov, fastrecov, simulate,
// plan-runs, clean-retrain, report.
//
// Exit codes: 0 success, 2 usage/validation error, 3 runtime failure.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "recov/csv.hpp"
#include "recov/dataset.hpp"
#include "recov/errors.hpp"
#include "recov/fastrecov.hpp"
#include "recov/metrics.hpp"
#include "recov/noise.hpp"
#include "recov/recov.hpp"
#include "recov/report.hpp"
#include "recov/rng.hpp"
#include "recov/theory.hpp"

namespace {

using nlohmann::json;
using namespace recov;

std::atomic<bool> g_interrupted{false};

void handle_signal(int) { g_interrupted.store(true); }

int default_jobs() {
    if (const char* env = std::getenv("RECOV_JOBS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

struct SchemaFlags {
    std::string task = "clf";
    std::string id_col, label_col, time_col, event_col;
    int grade_min = 0, grade_max = 0;
};

void add_schema_flags(CLI::App* cmd, SchemaFlags& flags) {
    cmd->add_option("--task", flags.task, "Task type: clf, surv or ord")->default_val("clf");
    cmd->add_option("--id-col", flags.id_col, "Sample id column (row index when absent)");
    cmd->add_option("--label-col", flags.label_col, "Label column (clf/ord)");
    cmd->add_option("--time-col", flags.time_col, "Survival time column");
    cmd->add_option("--event-col", flags.event_col, "Survival event column");
    cmd->add_option("--grade-min", flags.grade_min, "Declared ordinal minimum");
    cmd->add_option("--grade-max", flags.grade_max, "Declared ordinal maximum");
}

DatasetSchema schema_from_flags(const SchemaFlags& flags) {
    DatasetSchema schema;
    schema.task = label_kind_from_string(flags.task);
    schema.id_column = flags.id_col;
    schema.label_column = flags.label_col;
    schema.time_column = flags.time_col;
    schema.event_column = flags.event_col;
    if (schema.task == LabelKind::classification || schema.task == LabelKind::ordinal) {
        if (schema.label_column.empty()) schema.label_column = "label";
    } else {
        if (schema.time_column.empty()) schema.time_column = "time";
        if (schema.event_column.empty()) schema.event_column = "event";
    }
    if (flags.grade_min != 0 || flags.grade_max != 0) {
        schema.grade_min = flags.grade_min;
        schema.grade_max = flags.grade_max;
    }
    return schema;
}

json schema_to_json(const SchemaFlags& flags) {
    return json{{"task", flags.task},
                {"id_col", flags.id_col},
                {"label_col", flags.label_col},
                {"time_col", flags.time_col},
                {"event_col", flags.event_col}};
}

struct LearnerFlags {
    std::string model = "auto";
    std::string command;
    double l2 = 1e-4;
    int max_iterations = 500;
    double tolerance = 1e-8;
};

void add_learner_flags(CLI::App* cmd, LearnerFlags& flags) {
    cmd->add_option("--model", flags.model,
                    "Learner: auto, logistic, ridge, cox or subprocess")
        ->default_val("auto");
    cmd->add_option("--model-cmd", flags.command,
                    "Subprocess learner command (invoked: cmd train.csv test.csv out.csv seed)");
    cmd->add_option("--l2", flags.l2, "L2 penalty")->default_val(1e-4);
    cmd->add_option("--max-iters", flags.max_iterations, "Fit iteration cap")->default_val(500);
    cmd->add_option("--fit-tol", flags.tolerance, "Fit convergence tolerance")->default_val(1e-8);
}

LearnerSpec learner_from_flags(const LearnerFlags& flags, LabelKind task) {
    LearnerSpec spec;
    spec.kind = flags.model == "auto" ? default_learner_for(task)
                                      : learner_kind_from_string(flags.model);
    spec.command = flags.command;
    spec.config.l2_penalty = flags.l2;
    spec.config.max_iterations = flags.max_iterations;
    spec.config.tolerance = flags.tolerance;
    if (spec.kind == LearnerSpec::Kind::subprocess && spec.command.empty())
        throw ValidationError("subprocess learner needs --model-cmd");
    return spec;
}

json learner_to_json(const LearnerSpec& spec) {
    json j{{"kind", to_string(spec.kind)},
           {"l2_penalty", spec.config.l2_penalty},
           {"max_iterations", spec.config.max_iterations},
           {"tolerance", spec.config.tolerance}};
    if (spec.kind == LearnerSpec::Kind::subprocess) j["command"] = spec.command;
    return j;
}

// ---------------------------------------------------------------------------

int cmd_encode(const std::string& in, const std::string& out, const std::string& id_col,
               const std::vector<std::string>& passthrough, bool zscore) {
    EncodeOptions opt;
    opt.id_column = id_col;
    opt.passthrough_columns = passthrough;
    opt.zscore_numeric = zscore;
    const std::size_t n = encode_csv(in, out, opt);
    std::cout << "encoded " << in << " -> " << out << " (" << n << " feature columns)\n";
    return 0;
}

int cmd_inject_noise(const std::string& in, const std::string& out, const std::string& mask_path,
                     const SchemaFlags& schema_flags, double eps, bool bernoulli,
                     std::uint64_t seed) {
    const Dataset data = load_dataset(in, schema_from_flags(schema_flags));
    const auto [noisy, mask] = inject_noise(data, NoiseModel::uniform_flip(eps), !bernoulli, seed);
    save_dataset(noisy, out);
    if (!mask_path.empty()) save_noise_mask(mask, noisy.ids, mask_path);
    std::cout << "flipped " << mask.n_noisy() << " of " << noisy.n() << " labels (eps " << eps
              << ", seed " << seed << ")\n";
    return 0;
}

void fill_recov_report(RunReport& report, const RecovResult& result) {
    report.runs_completed = result.pool.runs;
    report.ids = result.pool.ids;
    report.counts = result.pool.counts;
    report.total_occurrences = result.pool.total_occurrences;
    report.run_trace = result.trace;
}

int cmd_recov(const std::string& in, const std::string& out, const SchemaFlags& schema_flags,
              const LearnerFlags& learner_flags, const std::string& metric_name, int k,
              std::int64_t runs, std::uint64_t seed, int jobs, const std::string& resume_path,
              double threshold, bool has_threshold, bool no_warm_start,
              std::int64_t checkpoint_interval) {
    const Dataset data = load_dataset(in, schema_from_flags(schema_flags));

    RecovOptions opt;
    opt.k = k;
    opt.n_runs = runs;
    opt.master_seed = seed;
    opt.jobs = jobs;
    opt.metric = metric_name.empty() ? default_metric_for(data.labels.kind)
                                     : metric_kind_from_string(metric_name);
    opt.learner = learner_from_flags(learner_flags, data.labels.kind);
    opt.warm_start = !no_warm_start;
    opt.checkpoint_interval = checkpoint_interval;
    opt.interrupt = &g_interrupted;

    RunReport report;
    report.mode = "recov";
    report.n_runs_target = runs;
    report.config = json{{"subcommand", "recov"},
                         {"dataset", in},
                         {"schema", schema_to_json(schema_flags)},
                         {"k", k},
                         {"n_runs", runs},
                         {"master_seed", seed},
                         {"metric", to_string(opt.metric)},
                         {"learner", learner_to_json(opt.learner)},
                         {"warm_start", opt.warm_start},
                         {"checkpoint_interval", checkpoint_interval}};
    if (has_threshold) report.config["threshold"] = threshold;

    RecovResult resume_state;
    const RecovResult* resume = nullptr;
    if (!resume_path.empty()) {
        const RunReport prev = load_report(resume_path);
        if (prev.mode != "recov") throw ValidationError("--resume: not a recov report");
        resume_state.pool.ids = prev.ids;
        resume_state.pool.counts = prev.counts;
        resume_state.pool.runs = prev.runs_completed;
        resume_state.pool.total_occurrences = prev.total_occurrences;
        resume_state.trace = prev.run_trace;
        resume = &resume_state;
        std::cerr << "resuming from " << resume_path << " at run " << prev.runs_completed << '\n';
    }

    const auto t0 = std::chrono::steady_clock::now();
    RecovResult result;
    opt.on_checkpoint = [&](const RecovResult& r) {
        fill_recov_report(report, r);
        report.total_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        save_report(report, out);
    };
    opt.on_progress = [&](std::int64_t done, std::int64_t total) {
        std::cerr << "run " << done << "/" << total << '\n';
    };
    result = recov_run_loop(data, opt, resume);

    if (has_threshold) {
        const NoiseMask mask = separate(result.pool, threshold);
        report.detected_ids.clear();
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask.flags[i]) report.detected_ids.push_back(result.pool.ids[i]);
        }
        report.has_threshold = true;
        report.separation_threshold = threshold;
    }

    fill_recov_report(report, result);
    report.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_report(report, out);
    std::cout << (result.interrupted ? "interrupted at " : "completed ") << result.pool.runs
              << " runs; report written to " << out << '\n';
    if (has_threshold)
        std::cout << "detected " << report.detected_ids.size() << " samples above threshold "
                  << threshold << '\n';
    return result.interrupted ? 3 : 0;
}

int cmd_fastrecov(const std::string& in, const std::string& out, const SchemaFlags& schema_flags,
                  const LearnerFlags& learner_flags, std::int64_t runs, int k, double tau,
                  double alpha, double beta, const std::string& threshold_text, std::uint64_t seed,
                  int jobs, const std::string& resume_path) {
    const Dataset data = load_dataset(in, schema_from_flags(schema_flags));
    FastRecovConfig cfg = fastrecov_defaults(data.labels.kind);
    if (runs > 0) cfg.n_runs = runs;
    if (k > 0) cfg.k = k;
    if (tau > 0.0) cfg.tau = tau;
    if (alpha >= 0.0) cfg.alpha = alpha;
    if (beta >= 0.0) cfg.beta = beta;
    if (!threshold_text.empty()) cfg.threshold = parse_threshold(threshold_text);
    cfg.master_seed = seed;
    cfg.fold_jobs = jobs;
    cfg.interrupt = &g_interrupted;
    cfg.validate();

    const LearnerSpec spec = learner_from_flags(learner_flags, data.labels.kind);

    RunReport report;
    report.mode = "fastrecov";
    report.n_runs_target = cfg.n_runs;
    report.ids = data.ids;
    report.config = json{{"subcommand", "fastrecov"},
                         {"dataset", in},
                         {"schema", schema_to_json(schema_flags)},
                         {"k", cfg.k},
                         {"n_runs", cfg.n_runs},
                         {"tau", cfg.tau},
                         {"alpha", cfg.alpha},
                         {"beta", cfg.beta},
                         {"threshold", to_string(cfg.threshold)},
                         {"master_seed", seed},
                         {"metric", to_string(default_metric_for(data.labels.kind))},
                         {"learner", learner_to_json(spec)}};

    FastRecovResult resume_state;
    const FastRecovResult* resume = nullptr;
    if (!resume_path.empty()) {
        const RunReport prev = load_report(resume_path);
        if (prev.mode != "fastrecov") throw ValidationError("--resume: not a fastrecov report");
        resume_state.memory.values = prev.memory;
        resume_state.memory.updates = prev.memory_updates;
        resume_state.runs_completed = prev.runs_completed;
        resume_state.trace = prev.run_trace;
        for (const auto& id : prev.detected_ids)
            resume_state.detected.push_back(static_cast<std::int32_t>(data.row_of(id)));
        resume = &resume_state;
        std::cerr << "resuming from " << resume_path << " at run " << prev.runs_completed << '\n';
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto snapshot = [&](const FastRecovResult& r) {
        report.runs_completed = r.runs_completed;
        report.memory = r.memory.values;
        report.memory_updates = r.memory.updates;
        report.detected_ids.clear();
        for (const auto row : r.detected)
            report.detected_ids.push_back(data.ids[static_cast<std::size_t>(row)]);
        report.run_trace = r.trace;
        report.total_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        save_report(report, out);
    };
    cfg.on_checkpoint = snapshot;
    cfg.on_progress = [&](std::int64_t done, std::int64_t total) {
        if (done % 50 == 0 || done == total) std::cerr << "run " << done << "/" << total << '\n';
    };

    const FastRecovResult result = fastrecov_loop(data, cfg, spec, resume);
    snapshot(result);
    std::cout << (result.interrupted ? "interrupted at " : "completed ") << result.runs_completed
              << " runs; detected " << result.detected.size() << " samples; report written to "
              << out << '\n';
    return result.interrupted ? 3 : 0;
}

int cmd_simulate(std::int64_t n, double eps, int k, std::int64_t runs, std::uint64_t seed,
                 int jobs, const std::string& out) {
    const SimulatedOccurrences sim = simulate_occurrences(n, eps, k, runs, seed, jobs);
    std::int64_t max_count = 0;
    for (const auto c : sim.counts) max_count = std::max(max_count, c);
    std::int64_t n_noisy = 0;
    for (const auto f : sim.noisy) n_noisy += f;
    const std::int64_t n_clean = n - n_noisy;

    std::vector<std::int64_t> clean_hist(static_cast<std::size_t>(max_count) + 1, 0);
    std::vector<std::int64_t> noisy_hist(static_cast<std::size_t>(max_count) + 1, 0);
    for (std::size_t i = 0; i < sim.counts.size(); ++i)
        ++(sim.noisy[i] ? noisy_hist : clean_hist)[static_cast<std::size_t>(sim.counts[i])];

    std::vector<std::vector<std::string>> rows;
    char buf[64];
    for (std::int64_t c = 0; c <= max_count; ++c) {
        const double cf = n_clean > 0 ? static_cast<double>(clean_hist[static_cast<std::size_t>(c)]) /
                                            static_cast<double>(n_clean)
                                      : 0.0;
        const double nf = n_noisy > 0 ? static_cast<double>(noisy_hist[static_cast<std::size_t>(c)]) /
                                            static_cast<double>(n_noisy)
                                      : 0.0;
        std::vector<std::string> row{std::to_string(c)};
        std::snprintf(buf, sizeof(buf), "%.17g", cf);
        row.emplace_back(buf);
        std::snprintf(buf, sizeof(buf), "%.17g", nf);
        row.emplace_back(buf);
        rows.push_back(std::move(row));
    }
    write_csv(out, {"count", "clean_freq", "noisy_freq"}, rows);
    std::cout << "simulated " << runs << " runs over " << n << " samples (" << n_noisy
              << " noisy); histogram written to " << out << '\n';
    return 0;
}

int cmd_plan_runs(std::int64_t n, double eps, int k, const std::string& target,
                  std::int64_t trials, std::uint64_t seed, int jobs) {
    double sigma = 0.0;
    if (target == "2sigma") sigma = 2.0;
    else if (target == "3sigma") sigma = 3.0;
    else {
        char* end = nullptr;
        sigma = std::strtod(target.c_str(), &end);
        if (target.empty() || end != target.c_str() + target.size() || !(sigma > 0.0))
            throw ValidationError("--target must be 2sigma, 3sigma or a positive sigma multiple");
    }
    const OccurrenceModel model = build_occurrence_model(n, eps, k, trials, seed, jobs);
    const OccurrencePlan plan = plan_runs(model, sigma);
    std::cout << "N " << model.N << "  eps " << model.eps << "  k " << model.k << '\n'
              << "n_fold " << model.n_fold << "  E(n_mean) " << model.e_n_mean << '\n'
              << "E(n_most) " << model.e_n_most << " (se " << model.e_n_most_se
              << ", Monte Carlo; mode-based reading " << model.e_n_most_mode << ")\n"
              << "E(n_diff) " << model.e_n_diff << '\n'
              << "p_noisy " << model.p_noisy << "  p_clean " << model.p_clean << '\n'
              << "q_noisy " << plan.q_noisy << "  q_clean " << plan.q_clean << '\n'
              << "target " << sigma << " sigma\n"
              << "planned runs " << plan.n_runs << '\n'
              << "separation threshold " << plan.threshold << '\n';
    return 0;
}

int cmd_clean_retrain(const std::string& report_path, const std::string& train_path,
                      const std::string& heldout_path, const SchemaFlags& schema_flags,
                      const LearnerFlags& learner_flags, std::uint64_t seed) {
    const RunReport report = load_report(report_path);
    const DatasetSchema schema = schema_from_flags(schema_flags);
    const std::string train_csv =
        train_path.empty() ? report.config.value("dataset", std::string()) : train_path;
    if (train_csv.empty()) throw ValidationError("clean-retrain: no training dataset (pass --train)");
    const Dataset train = load_dataset(train_csv, schema);
    const Dataset heldout = load_dataset(heldout_path, schema);

    NoiseMask mask;
    mask.source = NoiseMask::Source::detected;
    mask.flags.assign(train.n(), 0);
    for (const auto& id : report.detected_ids)
        mask.flags[static_cast<std::size_t>(train.row_of(id))] = 1;

    const MetricKind metric = default_metric_for(train.labels.kind);
    const LearnerSpec spec = learner_from_flags(learner_flags, train.labels.kind);
    const double cleaned = clean_retrain(train, mask, spec, heldout, metric, seed);

    std::vector<std::int32_t> all_rows(train.n());
    for (std::size_t i = 0; i < train.n(); ++i) all_rows[i] = static_cast<std::int32_t>(i);
    const double baseline = evaluate_holdout(train, all_rows, spec, heldout, metric, seed);

    std::cout << "removed " << report.detected_ids.size() << " detected samples\n"
              << "baseline " << to_string(metric) << " " << baseline << '\n'
              << "cleaned " << to_string(metric) << " " << cleaned << '\n';
    return 0;
}

int cmd_report(const std::string& in, const std::string& per_sample_out,
               const std::string& hist_out, const std::string& mask_path) {
    const RunReport report = load_report(in);
    std::cout << "mode " << report.mode << '\n'
              << "runs " << report.runs_completed << "/" << report.n_runs_target << '\n'
              << "samples " << report.ids.size() << '\n'
              << "detected " << report.detected_ids.size() << '\n';
    if (report.has_threshold)
        std::cout << "separation threshold " << report.separation_threshold << '\n';
    std::cout << "wall clock " << report.total_seconds << " s\n"
              << "config " << report.config.dump() << '\n';

    const bool is_recov = report.mode == "recov";
    if (!per_sample_out.empty()) {
        std::set<std::string> detected(report.detected_ids.begin(), report.detected_ids.end());
        std::vector<std::vector<std::string>> rows;
        char buf[64];
        for (std::size_t i = 0; i < report.ids.size(); ++i) {
            std::vector<std::string> row{report.ids[i]};
            if (is_recov) {
                row.push_back(std::to_string(report.counts[i]));
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", report.memory[i]);
                row.emplace_back(buf);
            }
            row.push_back(detected.count(report.ids[i]) ? "1" : "0");
            rows.push_back(std::move(row));
        }
        write_csv(per_sample_out, {"id", is_recov ? "count" : "memory", "detected"}, rows);
        std::cout << "per-sample table written to " << per_sample_out << '\n';
    }

    if (!hist_out.empty()) {
        NoiseMask mask;
        const bool have_mask = !mask_path.empty();
        if (have_mask) mask = load_noise_mask(mask_path, report.ids, NoiseMask::Source::ground_truth);
        auto freq_rows = [&](auto bin_of, std::size_t bins, auto bin_label) {
            std::vector<std::int64_t> clean_hist(bins, 0), noisy_hist(bins, 0);
            std::int64_t n_noisy = 0;
            for (std::size_t i = 0; i < report.ids.size(); ++i) {
                const bool noisy = have_mask && mask.flags[i];
                n_noisy += noisy;
                ++(noisy ? noisy_hist : clean_hist)[bin_of(i)];
            }
            const std::int64_t n_clean = static_cast<std::int64_t>(report.ids.size()) - n_noisy;
            std::vector<std::vector<std::string>> rows;
            char buf[64];
            for (std::size_t b = 0; b < bins; ++b) {
                std::vector<std::string> row{bin_label(b)};
                const double cf = n_clean ? static_cast<double>(clean_hist[b]) / static_cast<double>(n_clean) : 0.0;
                const double nf = n_noisy ? static_cast<double>(noisy_hist[b]) / static_cast<double>(n_noisy) : 0.0;
                std::snprintf(buf, sizeof(buf), "%.17g", cf);
                row.emplace_back(buf);
                std::snprintf(buf, sizeof(buf), "%.17g", nf);
                row.emplace_back(buf);
                rows.push_back(std::move(row));
            }
            return rows;
        };
        if (is_recov) {
            std::int64_t max_count = 0;
            for (const auto c : report.counts) max_count = std::max(max_count, c);
            const auto rows = freq_rows(
                [&](std::size_t i) { return static_cast<std::size_t>(report.counts[i]); },
                static_cast<std::size_t>(max_count) + 1,
                [](std::size_t b) { return std::to_string(b); });
            write_csv(hist_out, {"count", "clean_freq", "noisy_freq"}, rows);
        } else {
            const int bins = 50;
            const auto rows = freq_rows(
                [&](std::size_t i) {
                    return static_cast<std::size_t>(std::clamp(
                        static_cast<int>(report.memory[i] * bins), 0, bins - 1));
                },
                static_cast<std::size_t>(bins),
                [&](std::size_t b) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.3f", (static_cast<double>(b) + 0.5) / bins);
                    return std::string(buf);
                });
            write_csv(hist_out, {"memory", "clean_freq", "noisy_freq"}, rows);
        }
        std::cout << "histogram written to " << hist_out << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    CLI::App app{"Label-noise detection by repeated cross-validations"};
    app.require_subcommand(1);

    auto* encode = app.add_subcommand("encode", "One-hot encode categorical feature columns");
    std::string enc_in, enc_out, enc_id;
    std::vector<std::string> enc_pass;
    bool enc_zscore = false;
    encode->add_option("--in", enc_in, "Input CSV")->required();
    encode->add_option("--out", enc_out, "Output CSV")->required();
    encode->add_option("--id-col", enc_id, "Id column to pass through");
    encode->add_option("--passthrough", enc_pass, "Label columns to pass through verbatim");
    encode->add_flag("--z-score", enc_zscore, "Z-score numeric feature columns");

    auto* inject = app.add_subcommand("inject-noise", "Flip labels with class-conditional noise");
    std::string inj_in, inj_out, inj_mask;
    SchemaFlags inj_schema;
    double inj_eps = 0.1;
    bool inj_bernoulli = false;
    std::uint64_t inj_seed = 1;
    inject->add_option("--in", inj_in)->required();
    inject->add_option("--out", inj_out)->required();
    inject->add_option("--mask", inj_mask, "Ground-truth mask CSV to write");
    inject->add_option("--eps", inj_eps, "Noise ratio in [0, 0.5)")->required();
    inject->add_flag("--bernoulli", inj_bernoulli, "Per-sample flips instead of an exact count");
    inject->add_option("--seed", inj_seed)->default_val(1);
    add_schema_flags(inject, inj_schema);

    auto* recov_cmd = app.add_subcommand("recov", "Repeated cross-validations (occurrence counts)");
    std::string rc_in, rc_out = "report.json", rc_resume, rc_metric;
    SchemaFlags rc_schema;
    LearnerFlags rc_learner;
    int rc_k = 5, rc_jobs = default_jobs();
    std::int64_t rc_runs = 0, rc_checkpoint = 100;
    std::uint64_t rc_seed = 1;
    double rc_threshold = 0.0;
    bool rc_no_warm = false;
    recov_cmd->add_option("--in", rc_in)->required();
    recov_cmd->add_option("--out", rc_out)->default_val("report.json");
    recov_cmd->add_option("--k", rc_k, "Folds")->default_val(5);
    recov_cmd->add_option("--runs", rc_runs, "Number of repeated runs")
        ->required()
        ->check(CLI::PositiveNumber);
    recov_cmd->add_option("--seed", rc_seed, "Master seed")->default_val(1);
    recov_cmd->add_option("--jobs", rc_jobs, "Parallel run workers (env RECOV_JOBS)")
        ->default_val(default_jobs());
    recov_cmd->add_option("--metric", rc_metric,
                          "Fold metric: accuracy, cindex or qwk (task default when omitted)");
    recov_cmd->add_option("--threshold", rc_threshold,
                          "Separation threshold on occurrence counts (from plan-runs)");
    recov_cmd->add_option("--resume", rc_resume, "Resume from a checkpoint report");
    recov_cmd->add_option("--checkpoint-interval", rc_checkpoint)->default_val(100);
    recov_cmd->add_flag("--no-warm-start", rc_no_warm, "Disable the shared warm start");
    add_schema_flags(recov_cmd, rc_schema);
    add_learner_flags(recov_cmd, rc_learner);

    auto* fast = app.add_subcommand("fastrecov", "Memory-guided accelerated detection");
    std::string fr_in, fr_out = "report.json", fr_threshold, fr_resume;
    SchemaFlags fr_schema;
    LearnerFlags fr_learner;
    std::int64_t fr_runs = 0;
    int fr_k = 0, fr_jobs = default_jobs();
    double fr_tau = 0.0, fr_alpha = -1.0, fr_beta = -1.0;
    std::uint64_t fr_seed = 1;
    fast->add_option("--in", fr_in)->required();
    fast->add_option("--out", fr_out)->default_val("report.json");
    fast->add_option("--runs", fr_runs, "Runs (task default when omitted)")
        ->check(CLI::PositiveNumber);
    fast->add_option("--k", fr_k, "Folds (default 5)")->check(CLI::PositiveNumber);
    fast->add_option("--tau", fr_tau, "Sampling temperature (task default when omitted)")
        ->check(CLI::PositiveNumber);
    fast->add_option("--alpha", fr_alpha, "EMA weight (default 0.3)")->check(CLI::Range(0.0, 1.0));
    fast->add_option("--beta", fr_beta, "Drop rate (task default when omitted)")
        ->check(CLI::Range(0.0, 1.0));
    fast->add_option("--threshold", fr_threshold, "abs:<v>, pct:<v> or gmm (task default)");
    fast->add_option("--seed", fr_seed)->default_val(1);
    fast->add_option("--jobs", fr_jobs, "Parallel fold workers")->default_val(default_jobs());
    fast->add_option("--resume", fr_resume, "Resume from a checkpoint report");
    add_schema_flags(fast, fr_schema);
    add_learner_flags(fast, fr_learner);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo occurrence simulation (no training)");
    std::int64_t sm_n = 0, sm_runs = 0;
    double sm_eps = 0.1;
    int sm_k = 5, sm_jobs = default_jobs();
    std::uint64_t sm_seed = 1;
    std::string sm_out = "hist.csv";
    sim->add_option("--n", sm_n, "Dataset size")->required()->check(CLI::PositiveNumber);
    sim->add_option("--eps", sm_eps, "Noise ratio")->required();
    sim->add_option("--k", sm_k)->default_val(5);
    sim->add_option("--runs", sm_runs)->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", sm_seed)->default_val(1);
    sim->add_option("--jobs", sm_jobs)->default_val(default_jobs());
    sim->add_option("--out", sm_out)->default_val("hist.csv");

    auto* plan = app.add_subcommand("plan-runs", "Occurrence model and required run count");
    std::int64_t pl_n = 0, pl_trials = 200000;
    double pl_eps = 0.1;
    int pl_k = 5, pl_jobs = default_jobs();
    std::string pl_target = "3sigma";
    std::uint64_t pl_seed = 1;
    plan->add_option("--n", pl_n)->required()->check(CLI::PositiveNumber);
    plan->add_option("--eps", pl_eps)->required();
    plan->add_option("--k", pl_k)->default_val(5);
    plan->add_option("--target", pl_target, "2sigma, 3sigma or a sigma multiple")
        ->default_val("3sigma");
    plan->add_option("--trials", pl_trials, "Monte Carlo trials for E(n_most)")->default_val(200000);
    plan->add_option("--seed", pl_seed)->default_val(1);
    plan->add_option("--jobs", pl_jobs)->default_val(default_jobs());

    auto* retrain = app.add_subcommand("clean-retrain",
                                       "Retrain without detected samples, score held-out data");
    std::string ct_report, ct_train, ct_heldout;
    SchemaFlags ct_schema;
    LearnerFlags ct_learner;
    std::uint64_t ct_seed = 1;
    retrain->add_option("--report", ct_report)->required();
    retrain->add_option("--train", ct_train, "Training CSV (defaults to the report's dataset)");
    retrain->add_option("--heldout", ct_heldout)->required();
    retrain->add_option("--seed", ct_seed)->default_val(1);
    add_schema_flags(retrain, ct_schema);
    add_learner_flags(retrain, ct_learner);

    auto* render = app.add_subcommand("report", "Render a report to summary text and CSVs");
    std::string rp_in, rp_per_sample, rp_hist, rp_mask;
    render->add_option("--in", rp_in)->required();
    render->add_option("--per-sample", rp_per_sample, "Per-sample CSV to write");
    render->add_option("--hist", rp_hist, "Histogram CSV to write");
    render->add_option("--mask", rp_mask, "Ground-truth mask for split histograms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    try {
        if (encode->parsed()) return cmd_encode(enc_in, enc_out, enc_id, enc_pass, enc_zscore);
        if (inject->parsed())
            return cmd_inject_noise(inj_in, inj_out, inj_mask, inj_schema, inj_eps, inj_bernoulli,
                                    inj_seed);
        if (recov_cmd->parsed())
            return cmd_recov(rc_in, rc_out, rc_schema, rc_learner, rc_metric, rc_k, rc_runs,
                             rc_seed, rc_jobs, rc_resume, rc_threshold,
                             recov_cmd->count("--threshold") > 0, rc_no_warm, rc_checkpoint);
        if (fast->parsed())
            return cmd_fastrecov(fr_in, fr_out, fr_schema, fr_learner, fr_runs, fr_k, fr_tau,
                                 fr_alpha, fr_beta, fr_threshold, fr_seed, fr_jobs, fr_resume);
        if (sim->parsed())
            return cmd_simulate(sm_n, sm_eps, sm_k, sm_runs, sm_seed, sm_jobs, sm_out);
        if (plan->parsed())
            return cmd_plan_runs(pl_n, pl_eps, pl_k, pl_target, pl_trials, pl_seed, pl_jobs);
        if (retrain->parsed())
            return cmd_clean_retrain(ct_report, ct_train, ct_heldout, ct_schema, ct_learner,
                                     ct_seed);
        if (render->parsed()) return cmd_report(rp_in, rp_per_sample, rp_hist, rp_mask);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}

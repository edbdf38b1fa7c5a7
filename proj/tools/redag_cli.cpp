// Command-line front end: workload generation, single runs, parameter
// sweeps, policy comparison, analytical schedulability, and trace
// enforcement validation.
//
// Exit codes: 0 success, 1 input error, 2 unschedulable (analyze only),
// 3 internal invariant violation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "redag/analysis.hpp"
#include "redag/metrics.hpp"
#include "redag/sweep.hpp"
#include "redag/trace_io.hpp"
#include "redag/workload_gen.hpp"
#include "redag/workload_io.hpp"

namespace fs = std::filesystem;
using namespace redag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitUnschedulable = 2;
constexpr int kExitInternal = 3;

std::vector<std::optional<int>> parse_caps(const std::string& caps) {
    std::vector<std::optional<int>> out;
    if (caps.empty()) return out;
    std::stringstream ss(caps);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "u" || item == "none" || item == "-" || item.empty())
            out.push_back(std::nullopt);
        else
            out.push_back(std::stoi(item));
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path.string(), "cannot open file for writing");
    out << content;
}

Policy parse_policy(const std::string& s) {
    auto p = policy_from_string(s);
    if (!p) throw CLI::ValidationError("--policy", "unknown policy '" + s + "'");
    return *p;
}

struct GenArgs {
    std::string preset;
    std::string output = "workload.json";
    GenSpec spec;
    std::string caps;
    std::string period_mode = "non-harmonic";
    int workers = 1;  // context for the over-utilization warning only
};

int cmd_gen(const GenArgs& args, bool preset_used, const CLI::App& sub) {
    GenSpec spec;
    if (preset_used) {
        const Preset* p = find_preset(args.preset);
        if (!p) {
            std::cerr << "error: unknown preset '" << args.preset << "'\n";
            return kExitInput;
        }
        spec = p->spec;
    }
    // Explicit flags override the preset.
    auto given = [&](const std::string& name) { return sub.count(name) > 0; };
    if (!preset_used || given("--seed")) spec.seed = args.spec.seed;
    if (!preset_used || given("--dags")) spec.n_dags = args.spec.n_dags;
    if (!preset_used || given("--tasks-per-dag")) spec.tasks_per_dag = args.spec.tasks_per_dag;
    if (!preset_used || given("--utilization"))
        spec.target_utilization = args.spec.target_utilization;
    if (!preset_used || given("--period-min")) spec.period_min = args.spec.period_min;
    if (!preset_used || given("--period-max")) spec.period_max = args.spec.period_max;
    if (!preset_used || given("--edge-prob")) spec.edge_probability = args.spec.edge_probability;
    if (!preset_used || given("--deadline-scale")) spec.deadline_scale = args.spec.deadline_scale;
    if (!preset_used || given("--max-task-util"))
        spec.max_task_utilization = args.spec.max_task_utilization;
    if (given("--period-mode")) {
        auto m = period_mode_from_string(args.period_mode);
        if (!m) {
            std::cerr << "error: unknown period mode '" << args.period_mode << "'\n";
            return kExitInput;
        }
        spec.period_mode = *m;
    } else if (!preset_used) {
        spec.period_mode = PeriodMode::NonHarmonic;
    }
    if (given("--max-active")) spec.max_active = parse_caps(args.caps);

    if (spec.target_utilization > static_cast<double>(args.workers))
        std::cerr << "warning: target utilization " << spec.target_utilization << " exceeds "
                  << args.workers << " worker(s); expect overload\n";

    GeneratedWorkload gw = generate_workload(spec);
    auto prov = provenance_json(gw);
    save_workload(gw.workload, args.output, &prov);

    mpq_class u = total_utilization(gw.workload);
    std::cout << "wrote " << args.output << "\n";
    std::cout << "tasks: " << gw.workload.task_count() << "  achieved_utilization: " << u.get_str()
              << " (" << format_double(u.get_d()) << ")\n";
    std::cout << "hyperperiod_us: " << hyperperiod(gw.workload) << "\n";
    return kExitOk;
}

struct RunArgs {
    std::string workload;
    std::string policy = "redag-rt";
    int workers = 1;
    time_us horizon = 0;
    int hyperperiods = 1;
    time_us csc = 0;
    bool export_trace = false;
    std::string outdir = "runs";
    std::vector<std::string> offsets;  // "task_id=offset_us"
};

void print_violations(const std::string& file, const Workload& w,
                      const std::vector<Violation>& viol) {
    std::cerr << "invalid workload " << file << ":\n";
    for (const auto& v : viol)
        std::cerr << "  - " << to_string(v) << " at " << element_path(w, v.dag_id, v.task_id)
                  << "\n";
}

int cmd_run(const RunArgs& args) {
    Workload w = load_workload(args.workload);
    auto validated = validate_workload(w);
    if (auto* viol = std::get_if<std::vector<Violation>>(&validated)) {
        print_violations(args.workload, w, *viol);
        return kExitInput;
    }
    const auto& vw = std::get<ValidatedWorkload>(validated);

    SimConfig cfg;
    cfg.policy = parse_policy(args.policy);
    cfg.workers = args.workers;
    cfg.horizon = args.horizon;
    cfg.hyperperiods = args.hyperperiods;
    cfg.context_switch_cost = args.csc;
    for (const auto& spec : args.offsets) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--offset expects task_id=offset_us, got '" + spec + "'");
        cfg.release_offsets[std::stoi(spec.substr(0, eq))] = std::stoll(spec.substr(eq + 1));
    }

    RunOutput out = run_once(vw, cfg);

    // Run directory keyed by a content hash over the workload bytes and the
    // full simulation config.
    std::ostringstream canon;
    canon << read_file(args.workload) << "|" << to_string(cfg.policy) << "|" << cfg.workers << "|"
          << cfg.horizon << "|" << cfg.hyperperiods << "|" << cfg.context_switch_cost;
    for (const auto& [id, off] : cfg.release_offsets) canon << "|" << id << "=" << off;
    fs::path dir = fs::path(args.outdir) / ("run-" + content_hash_hex(canon.str()));
    fs::create_directories(dir);

    {
        std::ostringstream jobs;
        write_jobs_csv(out.trace, jobs);
        write_file(dir / "jobs.csv", jobs.str());
    }
    {
        std::ostringstream metrics;
        write_metrics_csv(out.metrics, metrics);
        write_file(dir / "metrics.csv", metrics.str());
    }
    {
        auto group = [](const GroupMetrics& g) {
            nlohmann::json j;
            j["released"] = g.released;
            j["completed"] = g.completed;
            j["censored"] = g.censored;
            j["misses"] = g.misses;
            j["miss_rate"] = g.miss_rate;
            j["max_lateness_us"] = g.max_lateness;
            j["mean_response_us"] = g.mean_response;
            j["p50_us"] = g.p50;
            j["p95_us"] = g.p95;
            j["p99_us"] = g.p99;
            return j;
        };
        nlohmann::json doc;
        doc["per_task"] = nlohmann::json::array();
        for (const auto& t : out.metrics.per_task) {
            nlohmann::json j = group(t);
            j["task_id"] = t.task_id;
            j["dag_id"] = t.dag_id;
            j["deferred"] = t.deferral_episodes;
            j["preemptions"] = t.preemptions;
            doc["per_task"].push_back(std::move(j));
        }
        doc["per_dag"] = nlohmann::json::array();
        for (const auto& dg : out.metrics.per_dag) {
            nlohmann::json j = group(dg);
            j["dag_id"] = dg.dag_id;
            doc["per_dag"].push_back(std::move(j));
        }
        doc["combined"] = group(out.metrics.combined);
        doc["per_dag_mean_miss_rate"] = out.metrics.per_dag_mean_miss_rate;
        doc["deferred"] = out.metrics.deferral_episodes;
        doc["preemptions"] = out.metrics.preemptions;
        doc["all_enforced"] = out.enforcement.all_enforced;
        doc["censored"] = out.trace.censored;
        doc["horizon_us"] = out.trace.horizon;
        write_file(dir / "metrics.json", doc.dump(2) + "\n");
    }
    if (out.metrics.combined.completed > 0) {
        std::vector<JobRecord> completed;
        for (const auto& j : out.trace.jobs)
            if (j.completed()) completed.push_back(j);
        std::ostringstream cdf;
        write_cdf_csv(cdf_table(completed), cdf);
        write_file(dir / "cdf.csv", cdf.str());
    }
    if (args.export_trace) {
        std::ostringstream trace;
        write_trace_csv(out.trace, trace);
        write_file(dir / "trace.csv", trace.str());
    }

    std::cout << "run_dir: " << dir.string() << "\n";
    std::cout << "policy=" << to_string(cfg.policy) << " workers=" << cfg.workers
              << " horizon_us=" << out.trace.horizon
              << " combined_mr=" << format_double(out.metrics.combined.miss_rate)
              << " max_lateness_us=" << out.metrics.combined.max_lateness
              << " p99_us=" << out.metrics.combined.p99 << " censored=" << out.trace.censored
              << " all_enforced=" << (out.enforcement.all_enforced ? 1 : 0) << "\n";
    return kExitOk;
}

struct SweepArgs {
    std::string config;
    std::string outdir = "sweep_out";
    int jobs = 1;
};

int cmd_sweep(const SweepArgs& args) {
    SweepConfig cfg;
    if (!args.config.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(args.config));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(args.config, e.what());
        }
        cfg = sweep_config_from_json(j);
    } else {
        cfg.base = find_preset("sweep_default")->spec;
    }

    std::cerr << "sweep: " << cfg.cell_count() << " cells x " << cfg.seeds.size() << " seeds = "
              << cfg.cell_count() * cfg.seeds.size() << " rows\n";

    SweepResult result = run_sweep(cfg, args.jobs);

    fs::create_directories(args.outdir);
    auto emit = [&](const char* name, auto writer) {
        std::ostringstream ss;
        writer(result, ss);
        write_file(fs::path(args.outdir) / name, ss.str());
    };
    emit("results.csv", write_sweep_csv);
    emit("mr_vs_workers.csv", write_mr_vs_workers_csv);
    emit("mr_vs_scale.csv", write_mr_vs_scale_csv);
    emit("cap_heatmap.csv", write_cap_heatmap_csv);
    {
        std::ostringstream ss;
        ss << sweep_config_to_json(cfg).dump(2) << "\n";
        write_file(fs::path(args.outdir) / "config.json", ss.str());
    }

    long failed = 0, unenforced = 0;
    for (const auto& row : result.rows) {
        if (!row.error.empty()) ++failed;
        else if (!row.all_enforced) ++unenforced;
    }
    std::cout << "rows: " << result.rows.size() << "  failed: " << failed
              << "  cap_violating: " << unenforced << "\n";
    std::cout << "wrote " << args.outdir << "/{results,mr_vs_workers,mr_vs_scale,cap_heatmap}.csv\n";
    return kExitOk;
}

struct CompareArgs {
    std::string workload;
    int workers = 4;
    int hyperperiods = 1;
    std::string csv;
};

int cmd_compare(const CompareArgs& args) {
    Workload w = load_workload(args.workload);
    ValidatedWorkload vw = validate_or_throw(w);
    CompareResult cmp = run_compare(vw, args.workers, args.hyperperiods);

    std::cout << std::left << std::setw(14) << "policy" << std::right << std::setw(12)
              << "combined_mr" << std::setw(16) << "max_lateness_us" << std::setw(10) << "p50_us"
              << std::setw(10) << "p95_us" << std::setw(10) << "p99_us" << "\n";
    for (const auto& row : cmp.rows) {
        std::cout << std::left << std::setw(14) << to_string(row.policy) << std::right
                  << std::setw(12) << format_double(row.combined_mr) << std::setw(16)
                  << row.max_lateness << std::setw(10) << row.p50 << std::setw(10) << row.p95
                  << std::setw(10) << row.p99 << "\n";
    }
    std::cout << "mr_improvement_vs_fifo_multi: "
              << format_double(cmp.mr_improvement_vs_fifo_multi) << "\n";
    std::cout << "mr_improvement_vs_fifo_single: "
              << format_double(cmp.mr_improvement_vs_fifo_single) << "\n";
    std::cout << "p99_reduction_vs_fifo_multi: "
              << format_double(cmp.p99_reduction_vs_fifo_multi) << "\n";

    if (!args.csv.empty()) {
        std::ostringstream ss;
        write_compare_csv(cmp, ss);
        write_file(args.csv, ss.str());
    }
    return kExitOk;
}

struct AnalyzeArgs {
    std::string workload;
    std::string json_out;
};

int cmd_analyze(const AnalyzeArgs& args) {
    Workload w = load_workload(args.workload);
    auto validated = validate_workload(w);
    if (auto* viol = std::get_if<std::vector<Violation>>(&validated)) {
        print_violations(args.workload, w, *viol);
        return kExitInput;
    }
    const auto& vw = std::get<ValidatedWorkload>(validated);
    SchedReport rep = schedulability_report(vw);

    std::cout << std::left << std::setw(8) << "task" << std::setw(6) << "rank" << std::right
              << std::setw(12) << "C_us" << std::setw(12) << "T_us" << std::setw(12) << "D_us"
              << std::setw(12) << "R_us" << "  verdict\n";
    nlohmann::json per_task = nlohmann::json::array();
    for (std::size_t rank = 0; rank < rep.per_task.size(); ++rank) {
        const auto& r = rep.per_task[rank];
        const Task& t = vw.task(r.task_id);
        std::cout << std::left << std::setw(8) << r.task_id << std::setw(6) << rank << std::right
                  << std::setw(12) << t.wcet << std::setw(12) << t.period << std::setw(12)
                  << t.deadline << std::setw(12) << r.response << "  "
                  << (r.converged ? "converged" : "UNSCHEDULABLE") << "\n";
        nlohmann::json row;
        row["task_id"] = r.task_id;
        row["rank"] = rank;
        row["response_us"] = r.response;
        row["iterations"] = r.iterations;
        row["converged"] = r.converged;
        per_task.push_back(row);
    }
    std::cout << "utilization: " << rep.utilization.get_str() << " ("
              << format_double(rep.utilization.get_d()) << ")  rm_bound("
              << rep.per_task.size() << "): " << format_double(rep.rm_bound) << "  "
              << (rep.within_bound ? "WithinBound" : "AboveBound") << "\n";
    std::cout << (rep.all_schedulable ? "AllSchedulable" : "SomeUnschedulable") << "\n";

    if (!args.json_out.empty()) {
        nlohmann::json doc;
        doc["per_task"] = per_task;
        doc["utilization"] = rep.utilization.get_d();
        doc["utilization_exact"] = rep.utilization.get_str();
        doc["rm_bound"] = rep.rm_bound;
        doc["within_bound"] = rep.within_bound;
        doc["all_schedulable"] = rep.all_schedulable;
        write_file(args.json_out, doc.dump(2) + "\n");
    }
    return rep.all_schedulable ? kExitOk : kExitUnschedulable;
}

struct ValidateArgs {
    std::string trace;
    std::string workload;
};

int cmd_validate(const ValidateArgs& args) {
    Workload w = load_workload(args.workload);
    auto events = load_trace_csv(args.trace);
    EnforcementReport rep = verify_enforcement(std::span<const TraceEvent>(events), w);
    std::cout << "all_enforced=" << (rep.all_enforced ? 1 : 0) << "\n";
    for (const auto& v : rep.violations)
        std::cout << "violation t=" << v.timestamp << " dag=" << v.dag_id << " count=" << v.count
                  << " cap=" << v.cap << "\n";
    return rep.all_enforced ? kExitOk : kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-DAG real-time scheduling simulator and analyzer"};
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic workload file");
    gen->add_option("--preset", gen_args.preset, "Named regime (single_baseline, multi_baseline, sweep_default)");
    gen->add_option("--seed", gen_args.spec.seed, "Generator seed");
    gen->add_option("--dags", gen_args.spec.n_dags, "Number of DAGs");
    gen->add_option("--tasks-per-dag", gen_args.spec.tasks_per_dag, "Tasks per DAG");
    gen->add_option("--utilization", gen_args.spec.target_utilization, "Target total utilization");
    gen->add_option("--period-mode", gen_args.period_mode, "harmonic | non-harmonic");
    gen->add_option("--period-min", gen_args.spec.period_min, "Minimum period (us)");
    gen->add_option("--period-max", gen_args.spec.period_max, "Maximum period (us)");
    gen->add_option("--edge-prob", gen_args.spec.edge_probability, "Adjacent-layer edge probability");
    gen->add_option("--deadline-scale", gen_args.spec.deadline_scale, "Deadline scale factor");
    gen->add_option("--max-task-util", gen_args.spec.max_task_utilization,
                    "Per-task utilization cap for the split");
    gen->add_option("--max-active", gen_args.caps, "Per-DAG caps, e.g. 2,5 ('u' = unbounded)");
    gen->add_option("--workers", gen_args.workers, "Worker count used only for the overload warning");
    gen->add_option("-o,--output", gen_args.output, "Output workload file");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Simulate one workload under one policy");
    run->add_option("workload", run_args.workload, "Workload file")->required();
    run->add_option("--policy", run_args.policy, "redag-rt | fifo-single | fifo-multi");
    run->add_option("--workers", run_args.workers, "Worker threads");
    run->add_option("--horizon-us", run_args.horizon, "Explicit horizon (0 = hyperperiod rule)");
    run->add_option("--hyperperiods", run_args.hyperperiods, "Horizon in whole hyperperiods");
    run->add_option("--context-switch-us", run_args.csc, "Preemption context-switch cost");
    run->add_option("--offset", run_args.offsets,
                    "Release offset per task as task_id=offset_us (repeatable)");
    run->add_flag("--trace", run_args.export_trace, "Export the event trace");
    run->add_option("-o,--outdir", run_args.outdir, "Directory for run artifacts");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Run the parameter sweep grid");
    sweep->add_option("config", sweep_args.config, "Sweep config JSON (defaults to the built-in grid)");
    sweep->add_option("-o,--outdir", sweep_args.outdir, "Directory for sweep CSVs");
    sweep->add_option("--jobs", sweep_args.jobs, "Parallel sweep workers");

    CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "Run all three policies on one workload");
    compare->add_option("workload", compare_args.workload, "Workload file")->required();
    compare->add_option("--workers", compare_args.workers, "Worker threads");
    compare->add_option("--hyperperiods", compare_args.hyperperiods, "Horizon in hyperperiods");
    compare->add_option("--csv", compare_args.csv, "Also write the table as CSV");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "Response-time analysis and schedulability report");
    analyze->add_option("workload", analyze_args.workload, "Workload file")->required();
    analyze->add_option("--json", analyze_args.json_out, "Also write a JSON report");

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Replay a trace against the per-DAG caps");
    validate->add_option("trace", validate_args.trace, "Trace CSV from `run --trace`")->required();
    validate->add_option("workload", validate_args.workload, "Workload file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_args, gen->count("--preset") > 0, *gen);
        if (run->parsed()) return cmd_run(run_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (compare->parsed()) return cmd_compare(compare_args);
        if (analyze->parsed()) return cmd_analyze(analyze_args);
        if (validate->parsed()) return cmd_validate(validate_args);
    } catch (const InternalInvariantViolation& e) {
        std::cerr << "internal invariant violation: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}

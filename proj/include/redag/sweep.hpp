#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "redag/metrics.hpp"
#include "redag/sim.hpp"
#include "redag/workload_gen.hpp"

namespace redag {

struct SweepConfig {
    GenSpec base;                              // regenerated per seed
    std::optional<std::string> workload_file;  // fixed workload instead, when set
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<int> worker_counts = {4, 6, 8, 10};
    std::vector<double> deadline_scales = {0.8, 0.9, 1.1, 1.2};
    std::vector<std::pair<int, int>> concurrency_pairs = {{2, 2}, {3, 2}, {2, 5}, {5, 5}};
    std::vector<Policy> policies = {Policy::ReDagRT};
    int hyperperiods = 1;
    time_us horizon_us = 0;  // explicit override; 0 keeps the hyperperiod rule

    std::size_t cell_count() const {
        return policies.size() * worker_counts.size() * deadline_scales.size() *
               concurrency_pairs.size();
    }
};

SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json sweep_config_to_json(const SweepConfig& cfg);

struct SweepRow {
    std::uint64_t seed = 0;
    Policy policy = Policy::ReDagRT;
    int workers = 0;
    double deadline_scale = 1.0;
    int cap1 = 0, cap2 = 0;
    double dag1_mr = 0.0, dag2_mr = 0.0, combined_mr = 0.0;
    time_us max_lateness = 0;
    double mean_response = 0.0;
    time_us p50 = 0, p95 = 0, p99 = 0;
    bool all_enforced = false;  // recomputed by the trace replayer, never copied
    long deferred = 0, executed = 0, censored = 0;
    long runtime_us = 0;  // in-memory diagnostic; never serialized
    std::string error;    // non-empty marks a failed cell (sweep continues)
};

struct SweepResult {
    SweepConfig config;
    std::vector<SweepRow> rows;  // sorted by policy, workers, scale, caps, then seed

    struct Aggregate {
        std::string key;
        double median_mr = 0.0;
        double mean_mr = 0.0;
        long rows = 0;
        // (MR at the first key - MR here) / MR at the first key; unset when
        // the reference is 0.
        std::optional<double> relative_reduction;
    };
    std::vector<Aggregate> mr_vs_workers;
    std::vector<Aggregate> mr_vs_scale;

    struct HeatCell {
        int cap1 = 0, cap2 = 0;
        double median_mr = 0.0;
    };
    std::vector<HeatCell> cap_heatmap;
};

SweepResult run_sweep(const SweepConfig& cfg, int jobs = 1);

// Fixed header:
// seed,policy,workers,deadline_scale,cap1,cap2,dag1_mr,dag2_mr,combined_mr,
// max_lateness_us,mean_response_us,p50_us,p95_us,p99_us,all_enforced,
// deferred,executed,censored,error
void write_sweep_csv(const SweepResult& r, std::ostream& os);
void write_mr_vs_workers_csv(const SweepResult& r, std::ostream& os);
void write_mr_vs_scale_csv(const SweepResult& r, std::ostream& os);
void write_cap_heatmap_csv(const SweepResult& r, std::ostream& os);

struct CompareRow {
    Policy policy = Policy::ReDagRT;
    double combined_mr = 0.0;
    time_us max_lateness = 0;
    double mean_response = 0.0;
    time_us p50 = 0, p95 = 0, p99 = 0;
};

struct CompareResult {
    std::vector<CompareRow> rows;  // ReDagRT, FifoMulti, FifoSingle
    // (MR_baseline - MR_redag) / MR_baseline; 0 when both sides are miss-free.
    double mr_improvement_vs_fifo_multi = 0.0;
    double mr_improvement_vs_fifo_single = 0.0;
    double p99_reduction_vs_fifo_multi = 0.0;
};

CompareResult run_compare(const ValidatedWorkload& w, int workers, int hyperperiods = 1,
                          time_us horizon = 0);
void write_compare_csv(const CompareResult& r, std::ostream& os);

struct RunOutput {
    SimTrace trace;
    MetricsReport metrics;
    EnforcementReport enforcement;  // independent replay of the trace
};

RunOutput run_once(const ValidatedWorkload& w, const SimConfig& cfg);

// Stable run-id fragment: FNV-1a 64 over a canonical config string.
std::string content_hash_hex(const std::string& canonical);

// Fixed-width-free, locale-free double formatting shared by all CSV writers.
std::string format_double(double v);

}  // namespace redag

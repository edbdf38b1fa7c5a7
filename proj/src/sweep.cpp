#include "redag/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <thread>

#include "redag/workload_io.hpp"

namespace redag {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string content_hash_hex(const std::string& canonical) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig cfg;
    if (j.contains("base")) cfg.base = genspec_from_json(j.at("base"));
    if (j.contains("preset")) {
        const Preset* p = find_preset(j.at("preset").get<std::string>());
        if (!p) throw std::invalid_argument("unknown preset " + j.at("preset").get<std::string>());
        cfg.base = p->spec;
        if (j.contains("base")) {
            // explicit base fields override the preset
            GenSpec over = genspec_from_json(j.at("base"));
            cfg.base = over;
        }
    }
    if (j.contains("workload_file")) cfg.workload_file = j.at("workload_file").get<std::string>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("worker_counts")) cfg.worker_counts = j.at("worker_counts").get<std::vector<int>>();
    if (j.contains("deadline_scales"))
        cfg.deadline_scales = j.at("deadline_scales").get<std::vector<double>>();
    if (j.contains("concurrency_pairs")) {
        cfg.concurrency_pairs.clear();
        for (const auto& p : j.at("concurrency_pairs"))
            cfg.concurrency_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    }
    if (j.contains("policies")) {
        cfg.policies.clear();
        for (const auto& p : j.at("policies")) {
            auto pol = policy_from_string(p.get<std::string>());
            if (!pol) throw std::invalid_argument("unknown policy " + p.get<std::string>());
            cfg.policies.push_back(*pol);
        }
    }
    if (j.contains("hyperperiods")) cfg.hyperperiods = j.at("hyperperiods").get<int>();
    if (j.contains("horizon_us")) cfg.horizon_us = j.at("horizon_us").get<time_us>();
    if (cfg.seeds.empty() || cfg.worker_counts.empty() || cfg.deadline_scales.empty() ||
        cfg.concurrency_pairs.empty() || cfg.policies.empty())
        throw std::invalid_argument("sweep config needs non-empty seed/worker/scale/pair/policy lists");
    return cfg;
}

nlohmann::json sweep_config_to_json(const SweepConfig& cfg) {
    nlohmann::json j;
    j["base"] = genspec_to_json(cfg.base);
    if (cfg.workload_file) j["workload_file"] = *cfg.workload_file;
    j["seeds"] = cfg.seeds;
    j["worker_counts"] = cfg.worker_counts;
    j["deadline_scales"] = cfg.deadline_scales;
    j["concurrency_pairs"] = nlohmann::json::array();
    for (const auto& [a, b] : cfg.concurrency_pairs)
        j["concurrency_pairs"].push_back(nlohmann::json::array({a, b}));
    j["policies"] = nlohmann::json::array();
    for (auto p : cfg.policies) j["policies"].push_back(to_string(p));
    j["hyperperiods"] = cfg.hyperperiods;
    j["horizon_us"] = cfg.horizon_us;
    return j;
}

RunOutput run_once(const ValidatedWorkload& w, const SimConfig& cfg) {
    RunOutput out;
    PriorityMap pm = assign_rm_priorities(w);
    out.trace = simulate(w, cfg, pm);
    out.metrics = compute_metrics(out.trace, w);
    out.enforcement = verify_enforcement(out.trace, w.workload());
    return out;
}

namespace {

struct Cell {
    std::uint64_t seed;
    Policy policy;
    int workers;
    double scale;
    int cap1, cap2;
};

SweepRow run_cell(const Workload& base, const Cell& c, const SweepConfig& cfg) {
    SweepRow row;
    row.seed = c.seed;
    row.policy = c.policy;
    row.workers = c.workers;
    row.deadline_scale = c.scale;
    row.cap1 = c.cap1;
    row.cap2 = c.cap2;

    auto started = std::chrono::steady_clock::now();
    try {
        Workload w = scale_deadlines(base, c.scale);
        if (!w.dags.empty()) w.dags[0].max_active = c.cap1;
        if (w.dags.size() > 1) w.dags[1].max_active = c.cap2;
        ValidatedWorkload vw = validate_or_throw(w);

        SimConfig sim_cfg;
        sim_cfg.policy = c.policy;
        sim_cfg.workers = c.workers;
        sim_cfg.horizon = cfg.horizon_us;
        sim_cfg.hyperperiods = cfg.hyperperiods;
        RunOutput out = run_once(vw, sim_cfg);

        const auto& m = out.metrics;
        if (m.per_dag.size() > 0 && m.per_dag[0].completed > 0) row.dag1_mr = m.per_dag[0].miss_rate;
        if (m.per_dag.size() > 1 && m.per_dag[1].completed > 0) row.dag2_mr = m.per_dag[1].miss_rate;
        row.combined_mr = m.combined.miss_rate;
        row.max_lateness = m.combined.max_lateness;
        row.mean_response = m.combined.mean_response;
        row.p50 = m.combined.p50;
        row.p95 = m.combined.p95;
        row.p99 = m.combined.p99;
        row.all_enforced = out.enforcement.all_enforced;
        row.deferred = m.deferral_episodes;
        row.executed = m.combined.completed;
        row.censored = m.combined.censored;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    row.runtime_us = std::chrono::duration_cast<std::chrono::microseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    return row;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<SweepResult::Aggregate> aggregate_by(
    const std::vector<SweepRow>& rows, const std::vector<std::string>& ordered_keys,
    const std::function<std::string(const SweepRow&)>& key_of) {
    std::map<std::string, std::vector<double>> groups;
    for (const auto& r : rows) {
        if (!r.error.empty()) continue;
        groups[key_of(r)].push_back(r.combined_mr);
    }
    std::vector<SweepResult::Aggregate> out;
    std::optional<double> reference;
    for (const auto& key : ordered_keys) {
        auto it = groups.find(key);
        if (it == groups.end()) continue;
        SweepResult::Aggregate a;
        a.key = key;
        a.rows = static_cast<long>(it->second.size());
        a.median_mr = median(it->second);
        double sum = 0;
        for (double v : it->second) sum += v;
        a.mean_mr = sum / static_cast<double>(it->second.size());
        if (!reference) {
            reference = a.median_mr;
        } else if (*reference > 0.0) {
            a.relative_reduction = (*reference - a.median_mr) / *reference;
        }
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, int jobs) {
    SweepResult result;
    result.config = cfg;

    // One base workload per seed, shared by all its cells.
    std::map<std::uint64_t, Workload> base_by_seed;
    for (auto seed : cfg.seeds) {
        if (cfg.workload_file) {
            base_by_seed[seed] = load_workload(*cfg.workload_file);
        } else {
            GenSpec spec = cfg.base;
            spec.seed = seed;
            base_by_seed[seed] = generate_workload(spec).workload;
        }
    }

    std::vector<Cell> cells;
    for (auto policy : cfg.policies)
        for (int workers : cfg.worker_counts)
            for (double scale : cfg.deadline_scales)
                for (const auto& [c1, c2] : cfg.concurrency_pairs)
                    for (auto seed : cfg.seeds)
                        cells.push_back({seed, policy, workers, scale, c1, c2});

    result.rows.resize(cells.size());
    int nthreads = std::max(1, jobs);
    if (nthreads == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            result.rows[i] = run_cell(base_by_seed.at(cells[i].seed), cells[i], cfg);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                result.rows[i] = run_cell(base_by_seed.at(cells[i].seed), cells[i], cfg);
            }
        };
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Row order is part of the output contract.
    std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        auto key = [](const SweepRow& r) {
            return std::tuple<int, int, double, int, int, std::uint64_t>(
                static_cast<int>(r.policy), r.workers, r.deadline_scale, r.cap1, r.cap2, r.seed);
        };
        return key(a) < key(b);
    });

    std::vector<std::string> worker_keys, scale_keys;
    for (int w : cfg.worker_counts) worker_keys.push_back(std::to_string(w));
    for (double s : cfg.deadline_scales) scale_keys.push_back(format_double(s));
    result.mr_vs_workers = aggregate_by(result.rows, worker_keys, [](const SweepRow& r) {
        return std::to_string(r.workers);
    });
    result.mr_vs_scale = aggregate_by(result.rows, scale_keys, [](const SweepRow& r) {
        return format_double(r.deadline_scale);
    });

    std::map<std::pair<int, int>, std::vector<double>> heat;
    for (const auto& r : result.rows)
        if (r.error.empty()) heat[{r.cap1, r.cap2}].push_back(r.combined_mr);
    for (const auto& [caps, mrs] : heat)
        result.cap_heatmap.push_back({caps.first, caps.second, median(mrs)});

    return result;
}

namespace {

// The error column must stay a single CSV field.
std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace

void write_sweep_csv(const SweepResult& r, std::ostream& os) {
    os << "seed,policy,workers,deadline_scale,cap1,cap2,dag1_mr,dag2_mr,combined_mr,"
          "max_lateness_us,mean_response_us,p50_us,p95_us,p99_us,all_enforced,"
          "deferred,executed,censored,error\n";
    for (const auto& row : r.rows) {
        os << row.seed << "," << to_string(row.policy) << "," << row.workers << ","
           << format_double(row.deadline_scale) << "," << row.cap1 << "," << row.cap2 << ","
           << format_double(row.dag1_mr) << "," << format_double(row.dag2_mr) << ","
           << format_double(row.combined_mr) << "," << row.max_lateness << ","
           << format_double(row.mean_response) << "," << row.p50 << "," << row.p95 << ","
           << row.p99 << "," << (row.all_enforced ? 1 : 0) << "," << row.deferred << ","
           << row.executed << "," << row.censored << "," << csv_safe(row.error) << "\n";
    }
}

namespace {

void write_aggregates(const std::vector<SweepResult::Aggregate>& aggs, const char* key_name,
                      std::ostream& os) {
    os << key_name << ",median_combined_mr,mean_combined_mr,rows,relative_reduction\n";
    for (const auto& a : aggs) {
        os << a.key << "," << format_double(a.median_mr) << "," << format_double(a.mean_mr) << ","
           << a.rows << ",";
        if (a.relative_reduction) os << format_double(*a.relative_reduction);
        os << "\n";
    }
}

}  // namespace

void write_mr_vs_workers_csv(const SweepResult& r, std::ostream& os) {
    write_aggregates(r.mr_vs_workers, "workers", os);
}

void write_mr_vs_scale_csv(const SweepResult& r, std::ostream& os) {
    write_aggregates(r.mr_vs_scale, "deadline_scale", os);
}

void write_cap_heatmap_csv(const SweepResult& r, std::ostream& os) {
    os << "cap1,cap2,median_combined_mr\n";
    for (const auto& c : r.cap_heatmap)
        os << c.cap1 << "," << c.cap2 << "," << format_double(c.median_mr) << "\n";
}

namespace {

double relative_improvement(double baseline, double redag) {
    if (baseline <= 0.0) return 0.0;
    return (baseline - redag) / baseline;
}

}  // namespace

CompareResult run_compare(const ValidatedWorkload& w, int workers, int hyperperiods,
                          time_us horizon) {
    CompareResult result;
    std::map<Policy, CompareRow> by_policy;
    for (Policy p : {Policy::ReDagRT, Policy::FifoMulti, Policy::FifoSingle}) {
        SimConfig cfg;
        cfg.policy = p;
        cfg.workers = workers;
        cfg.hyperperiods = hyperperiods;
        cfg.horizon = horizon;
        RunOutput out = run_once(w, cfg);
        CompareRow row;
        row.policy = p;
        row.combined_mr = out.metrics.combined.miss_rate;
        row.max_lateness = out.metrics.combined.max_lateness;
        row.mean_response = out.metrics.combined.mean_response;
        row.p50 = out.metrics.combined.p50;
        row.p95 = out.metrics.combined.p95;
        row.p99 = out.metrics.combined.p99;
        result.rows.push_back(row);
        by_policy[p] = row;
    }
    result.mr_improvement_vs_fifo_multi = relative_improvement(
        by_policy[Policy::FifoMulti].combined_mr, by_policy[Policy::ReDagRT].combined_mr);
    result.mr_improvement_vs_fifo_single = relative_improvement(
        by_policy[Policy::FifoSingle].combined_mr, by_policy[Policy::ReDagRT].combined_mr);
    result.p99_reduction_vs_fifo_multi = relative_improvement(
        static_cast<double>(by_policy[Policy::FifoMulti].p99),
        static_cast<double>(by_policy[Policy::ReDagRT].p99));
    return result;
}

void write_compare_csv(const CompareResult& r, std::ostream& os) {
    os << "policy,combined_mr,max_lateness_us,mean_response_us,p50_us,p95_us,p99_us,"
          "mr_improvement_vs_policy,p99_reduction_vs_policy\n";
    for (const auto& row : r.rows) {
        os << to_string(row.policy) << "," << format_double(row.combined_mr) << ","
           << row.max_lateness << "," << format_double(row.mean_response) << "," << row.p50 << ","
           << row.p95 << "," << row.p99 << ",";
        if (row.policy == Policy::FifoMulti)
            os << format_double(r.mr_improvement_vs_fifo_multi) << ","
               << format_double(r.p99_reduction_vs_fifo_multi);
        else if (row.policy == Policy::FifoSingle)
            os << format_double(r.mr_improvement_vs_fifo_single) << ",";
        else
            os << ",";
        os << "\n";
    }
}

}  // namespace redag

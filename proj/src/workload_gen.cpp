#include "redag/workload_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace redag {

const char* to_string(PeriodMode m) {
    return m == PeriodMode::Harmonic ? "harmonic" : "non-harmonic";
}

std::optional<PeriodMode> period_mode_from_string(std::string_view s) {
    if (s == "harmonic") return PeriodMode::Harmonic;
    if (s == "non-harmonic" || s == "nonharmonic") return PeriodMode::NonHarmonic;
    return std::nullopt;
}

namespace {

constexpr const char* kGeneratorVersion = "redag-gen/1.0.0";

// Non-harmonic periods snap to divisors of this smooth master value (units of
// 100us; 36000 * 100us = 3.6s), so any drawn set has hyperperiod <= 3.6e6 us.
constexpr std::int64_t kSmoothMasterUnits = 36'000;  // 2^5 * 3^2 * 5^3
constexpr time_us kGridUnit = 100;

std::vector<time_us> smooth_grid(time_us lo, time_us hi) {
    std::vector<time_us> grid;
    for (std::int64_t d = 1; d * d <= kSmoothMasterUnits; ++d) {
        if (kSmoothMasterUnits % d != 0) continue;
        for (std::int64_t div : {d, kSmoothMasterUnits / d}) {
            time_us p = div * kGridUnit;
            if (p >= lo && p <= hi) grid.push_back(p);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

// Classic UUniFast split of `total` into n shares.
std::vector<double> uunifast(int n, double total, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(n));
    double sum = total;
    for (int i = 1; i < n; ++i) {
        double next = sum * std::pow(unit(rng), 1.0 / static_cast<double>(n - i));
        u[static_cast<std::size_t>(i - 1)] = sum - next;
        sum = next;
    }
    u[static_cast<std::size_t>(n - 1)] = sum;
    return u;
}

}  // namespace

std::vector<double> uunifast_shares(int n, double total, double cap, std::mt19937_64& rng) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto u = uunifast(n, total, rng);
        if (std::all_of(u.begin(), u.end(), [&](double x) { return x <= cap; })) return u;
    }
    throw InfeasibleSpec("could not draw a utilization split with every share <= " +
                         std::to_string(cap));
}

GeneratedWorkload generate_workload(const GenSpec& spec) {
    if (spec.n_dags < 1) throw InfeasibleSpec("n_dags must be >= 1");
    if (spec.tasks_per_dag < 1) throw InfeasibleSpec("tasks_per_dag must be >= 1");
    if (!(spec.target_utilization > 0.0))
        throw InfeasibleSpec("target_utilization must be > 0");
    if (spec.edge_probability < 0.0 || spec.edge_probability > 1.0)
        throw InfeasibleSpec("edge_probability must lie in [0, 1]");
    if (spec.period_min < 1 || spec.period_min > spec.period_max)
        throw InfeasibleSpec("period range invalid");
    if (!(spec.max_task_utilization > 0.0) || spec.max_task_utilization > 1.0)
        throw InfeasibleSpec("max_task_utilization must lie in (0, 1]");

    std::mt19937_64 rng(spec.seed);
    const int n = spec.n_dags * spec.tasks_per_dag;

    // Periods.
    std::vector<time_us> periods(static_cast<std::size_t>(n));
    if (spec.period_mode == PeriodMode::Harmonic) {
        std::vector<time_us> chain;
        for (time_us p = spec.period_min; p <= spec.period_max; p *= 2) chain.push_back(p);
        std::uniform_int_distribution<std::size_t> pick(0, chain.size() - 1);
        for (auto& p : periods) p = chain[pick(rng)];
    } else {
        auto grid = smooth_grid(spec.period_min, spec.period_max);
        if (grid.empty())
            throw InfeasibleSpec("no grid period inside [" + std::to_string(spec.period_min) +
                                 ", " + std::to_string(spec.period_max) + "] us");
        std::uniform_real_distribution<double> logu(std::log(static_cast<double>(spec.period_min)),
                                                    std::log(static_cast<double>(spec.period_max)));
        for (auto& p : periods) {
            double want = std::exp(logu(rng));
            // Nearest grid value in log space.
            auto it = std::lower_bound(grid.begin(), grid.end(), static_cast<time_us>(want));
            if (it == grid.end()) {
                p = grid.back();
            } else if (it == grid.begin()) {
                p = grid.front();
            } else {
                double hi = static_cast<double>(*it), lo = static_cast<double>(*(it - 1));
                p = (std::log(hi) - std::log(want) < std::log(want) - std::log(lo)) ? *it : *(it - 1);
            }
        }
    }

    auto shares = uunifast_shares(n, spec.target_utilization, spec.max_task_utilization, rng);

    Workload w;
    w.deadline_scale = 1.0;
    int next_id = 1;
    for (int dg = 0; dg < spec.n_dags; ++dg) {
        DagSpec dag;
        dag.dag_id = dg + 1;
        if (static_cast<std::size_t>(dg) < spec.max_active.size())
            dag.max_active = spec.max_active[static_cast<std::size_t>(dg)];

        std::vector<int> ids;
        for (int k = 0; k < spec.tasks_per_dag; ++k) {
            int flat = dg * spec.tasks_per_dag + k;
            Task t;
            t.id = next_id++;
            t.dag_id = dag.dag_id;
            t.period = periods[static_cast<std::size_t>(flat)];
            t.wcet = std::max<time_us>(
                1, std::llround(shares[static_cast<std::size_t>(flat)] *
                                static_cast<double>(t.period)));
            if (t.wcet > t.period)
                throw InfeasibleSpec("rounded wcet exceeds period for task " + std::to_string(t.id));
            t.deadline = t.period;
            t.criticality = 0;
            t.label = "d" + std::to_string(dag.dag_id) + "_t" + std::to_string(k);
            ids.push_back(t.id);
            dag.tasks.push_back(std::move(t));
        }

        // Layered topology: ceil(sqrt(n)) layers, edges only between adjacent
        // layers, each drawn with probability p. Acyclic by construction.
        int layers = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.tasks_per_dag))));
        std::vector<std::vector<int>> layer_ids(static_cast<std::size_t>(layers));
        for (int k = 0; k < spec.tasks_per_dag; ++k)
            layer_ids[static_cast<std::size_t>(k % layers)].push_back(ids[static_cast<std::size_t>(k)]);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int l = 0; l + 1 < layers; ++l)
            for (int from : layer_ids[static_cast<std::size_t>(l)])
                for (int to : layer_ids[static_cast<std::size_t>(l + 1)])
                    if (unit(rng) < spec.edge_probability) dag.edges.push_back({from, to});

        w.dags.push_back(std::move(dag));
    }

    if (spec.deadline_scale != 1.0) {
        try {
            w = scale_deadlines(w, spec.deadline_scale);
        } catch (const WorkloadError& e) {
            throw InfeasibleSpec(std::string("deadline scale makes the workload infeasible: ") +
                                 e.what());
        }
    }

    // Generator contract: output always validates.
    auto check = validate_workload(w);
    if (auto* viol = std::get_if<std::vector<Violation>>(&check))
        throw InfeasibleSpec("generated workload failed validation: " + to_string(viol->front()));

    GeneratedWorkload out;
    out.workload = std::move(w);
    out.spec = spec;
    out.generator_version = kGeneratorVersion;
    out.achieved_utilization = total_utilization(out.workload).get_d();
    return out;
}

nlohmann::json genspec_to_json(const GenSpec& s) {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["n_dags"] = s.n_dags;
    j["tasks_per_dag"] = s.tasks_per_dag;
    j["target_utilization"] = s.target_utilization;
    j["period_mode"] = to_string(s.period_mode);
    j["period_min_us"] = s.period_min;
    j["period_max_us"] = s.period_max;
    j["edge_probability"] = s.edge_probability;
    j["deadline_scale"] = s.deadline_scale;
    j["max_task_utilization"] = s.max_task_utilization;
    j["max_active"] = nlohmann::json::array();
    for (const auto& c : s.max_active) j["max_active"].push_back(c ? nlohmann::json(*c) : nullptr);
    return j;
}

GenSpec genspec_from_json(const nlohmann::json& j) {
    GenSpec s;
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("n_dags")) s.n_dags = j.at("n_dags").get<int>();
    if (j.contains("tasks_per_dag")) s.tasks_per_dag = j.at("tasks_per_dag").get<int>();
    if (j.contains("target_utilization"))
        s.target_utilization = j.at("target_utilization").get<double>();
    if (j.contains("period_mode")) {
        auto m = period_mode_from_string(j.at("period_mode").get<std::string>());
        if (!m) throw std::invalid_argument("unknown period_mode");
        s.period_mode = *m;
    }
    if (j.contains("period_min_us")) s.period_min = j.at("period_min_us").get<time_us>();
    if (j.contains("period_max_us")) s.period_max = j.at("period_max_us").get<time_us>();
    if (j.contains("edge_probability")) s.edge_probability = j.at("edge_probability").get<double>();
    if (j.contains("deadline_scale")) s.deadline_scale = j.at("deadline_scale").get<double>();
    if (j.contains("max_task_utilization"))
        s.max_task_utilization = j.at("max_task_utilization").get<double>();
    if (j.contains("max_active"))
        for (const auto& c : j.at("max_active"))
            s.max_active.push_back(c.is_null() ? std::optional<int>{} : std::optional<int>(c.get<int>()));
    return s;
}

nlohmann::json provenance_json(const GeneratedWorkload& gw) {
    nlohmann::json j;
    j["generator"] = gw.generator_version;
    j["spec"] = genspec_to_json(gw.spec);
    j["achieved_utilization"] = gw.achieved_utilization;
    return j;
}

std::vector<Preset> builtin_presets() {
    std::vector<Preset> presets;

    {
        Preset p;
        p.name = "single_baseline";
        p.description = "Harmonic periods at U*=0.6; the serialization-stress regime for the "
                        "single-threaded baseline.";
        p.spec.seed = 1;
        p.spec.n_dags = 2;
        p.spec.tasks_per_dag = 6;
        p.spec.target_utilization = 0.6;
        p.spec.period_mode = PeriodMode::Harmonic;
        p.spec.period_min = 10'000;
        p.spec.period_max = 80'000;
        p.spec.edge_probability = 0.3;
        p.spec.max_task_utilization = 0.70;
        presets.push_back(std::move(p));
    }
    {
        // Serialized pipelines (max_active 1 per DAG) with a wide rate spread:
        // the regime where dispatch order separates the three policies.
        Preset p;
        p.name = "multi_baseline";
        p.description = "Non-harmonic periods at U*=0.8 with unit per-DAG concurrency; the "
                        "contended two-DAG regime used for cross-policy comparison.";
        p.spec.seed = 1;
        p.spec.n_dags = 2;
        p.spec.tasks_per_dag = 12;
        p.spec.target_utilization = 0.8;
        p.spec.period_mode = PeriodMode::NonHarmonic;
        p.spec.period_min = 1'000;
        p.spec.period_max = 200'000;
        p.spec.edge_probability = 0.15;
        p.spec.max_active = {1, 1};
        p.spec.max_task_utilization = 0.10;
        presets.push_back(std::move(p));
    }
    {
        // Oversubscribed at 4 workers, comfortable at 8+: the regime where the
        // thread and concurrency-cap sweeps have room to move.
        Preset p;
        p.name = "sweep_default";
        p.description = "Two non-harmonic DAGs with intra-DAG parallelism at U*=6.0; the base "
                        "workload for thread/deadline/cap sweeps.";
        p.spec.seed = 1;
        p.spec.n_dags = 2;
        p.spec.tasks_per_dag = 10;
        p.spec.target_utilization = 6.0;
        p.spec.period_mode = PeriodMode::NonHarmonic;
        p.spec.period_min = 2'000;
        p.spec.period_max = 100'000;
        p.spec.edge_probability = 0.25;
        p.spec.max_task_utilization = 0.70;
        presets.push_back(std::move(p));
    }
    return presets;
}

const Preset* find_preset(std::string_view name) {
    static const std::vector<Preset> presets = builtin_presets();
    for (const auto& p : presets)
        if (p.name == name) return &p;
    return nullptr;
}

}  // namespace redag

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "redag/task_model.hpp"

namespace redag {

enum class PeriodMode { Harmonic, NonHarmonic };

const char* to_string(PeriodMode m);
std::optional<PeriodMode> period_mode_from_string(std::string_view s);

struct GenSpec {
    std::uint64_t seed = 1;
    int n_dags = 2;
    int tasks_per_dag = 6;
    double target_utilization = 0.6;  // U*, summed C/T over the whole workload
    PeriodMode period_mode = PeriodMode::NonHarmonic;
    time_us period_min = 5'000;
    time_us period_max = 100'000;
    double edge_probability = 0.3;
    std::vector<std::optional<int>> max_active;  // per DAG; missing entries unbounded
    double deadline_scale = 1.0;
    // UUniFast-discard cap on any single task's utilization share. Keeping it
    // comfortably under the smallest sweep deadline scale keeps every scaled
    // cell feasible.
    double max_task_utilization = 0.95;
};

struct GeneratedWorkload {
    Workload workload;
    GenSpec spec;                 // echo, for provenance
    std::string generator_version;
    double achieved_utilization = 0.0;
};

class InfeasibleSpec : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// UUniFast-discard utilization split: n shares summing to `total`, redrawn
// until every share is <= cap. Throws InfeasibleSpec when the cap is
// unreachable.
std::vector<double> uunifast_shares(int n, double total, double cap, std::mt19937_64& rng);

// Deterministic in `spec` (seed included): per-task utilizations by
// UUniFast-discard, C_i = round(u_i * T_i) clamped to >= 1us, harmonic
// periods from a doubling chain, non-harmonic periods log-uniform snapped to
// a smooth 100us grid whose lcm stays small, layered topology with
// ceil(sqrt(n)) layers and edge probability p between adjacent layers.
GeneratedWorkload generate_workload(const GenSpec& spec);

nlohmann::json provenance_json(const GeneratedWorkload& gw);
nlohmann::json genspec_to_json(const GenSpec& spec);
GenSpec genspec_from_json(const nlohmann::json& j);

struct Preset {
    std::string name;
    std::string description;
    GenSpec spec;
};

// Named generation regimes used throughout the experiments.
std::vector<Preset> builtin_presets();
const Preset* find_preset(std::string_view name);

}  // namespace redag

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <gmpxx.h>

namespace redag {

// All times are integer microseconds. Integer arithmetic keeps lcm,
// ceiling division and the RTA fixed point exact.
using time_us = std::int64_t;

// One callback/node of a pipeline graph.
struct Task {
    int id = 0;            // unique across the whole workload
    int dag_id = 0;
    time_us wcet = 0;      // C
    time_us period = 0;    // T
    time_us deadline = 0;  // D (relative); implicit deadline means D == T
    int criticality = 0;   // carried through, never consulted by any scheduler
    std::string label;
};

struct Edge {
    int from = 0;
    int to = 0;
};

// One directed acyclic graph of tasks. max_active bounds the number of
// simultaneously running jobs of this DAG; nullopt means unbounded.
struct DagSpec {
    int dag_id = 0;
    std::vector<Task> tasks;
    std::vector<Edge> edges;
    std::optional<int> max_active;
};

struct Workload {
    std::vector<DagSpec> dags;
    double deadline_scale = 1.0;

    std::size_t task_count() const {
        std::size_t n = 0;
        for (const auto& d : dags) n += d.tasks.size();
        return n;
    }
};

enum class ViolationKind {
    InvalidTiming,
    CycleDetected,
    CrossDagEdge,
    DuplicateTaskId,
    UnknownTaskRef,
    InvalidMaxActive,
    EmptyWorkload,
};

struct Violation {
    ViolationKind kind = ViolationKind::InvalidTiming;
    int dag_id = -1;
    int task_id = -1;
    std::vector<int> cycle;  // CycleDetected only: node ids along the cycle
    std::string detail;
};

const char* to_string(ViolationKind k);
std::string to_string(const Violation& v);

class WorkloadError : public std::runtime_error {
public:
    explicit WorkloadError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

// A structurally checked workload: ids unique, graphs acyclic, edges local
// to their DAG, timing parameters sane. Immutable once built; cheap to share
// read-only across concurrent simulations.
class ValidatedWorkload {
public:
    const Workload& workload() const { return w_; }
    std::span<const Task> tasks() const { return tasks_; }
    std::size_t task_count() const { return tasks_.size(); }

    bool has_task(int task_id) const { return index_by_id_.count(task_id) != 0; }
    const Task& task(int task_id) const;
    int task_index(int task_id) const;  // position in tasks()

    const DagSpec& dag(int dag_id) const;
    // Task ids of one DAG in a deterministic topological order.
    const std::vector<int>& topo_order(int dag_id) const;
    const std::vector<int>& predecessors(int task_id) const;
    const std::vector<int>& successors(int task_id) const;

private:
    friend std::variant<ValidatedWorkload, std::vector<Violation>>
    validate_workload(const Workload&);

    Workload w_;
    std::vector<Task> tasks_;                       // flat, DAG order then file order
    std::unordered_map<int, int> index_by_id_;
    std::map<int, std::vector<int>> topo_by_dag_;
    std::unordered_map<int, std::vector<int>> preds_;
    std::unordered_map<int, std::vector<int>> succs_;
};

using ValidationResult = std::variant<ValidatedWorkload, std::vector<Violation>>;

// Checks every structural invariant and reports all violations at once.
ValidationResult validate_workload(const Workload& w);

// Convenience wrapper: throws WorkloadError instead of returning violations.
ValidatedWorkload validate_or_throw(const Workload& w);

// Global rate-monotonic order: rank 0 is the highest priority (shortest
// period); equal periods break by ascending task id. Spans all DAGs.
class PriorityMap {
public:
    int rank_of(int task_id) const;
    int task_at(int rank) const { return by_rank_.at(static_cast<std::size_t>(rank)); }
    std::size_t size() const { return by_rank_.size(); }
    const std::vector<int>& by_rank() const { return by_rank_; }

private:
    friend PriorityMap assign_rm_priorities(const ValidatedWorkload&);
    std::vector<int> by_rank_;                    // rank -> task id
    std::unordered_map<int, int> rank_by_id_;
};

PriorityMap assign_rm_priorities(const ValidatedWorkload& w);

// Sum of C_i/T_i over all tasks, exact. Throws std::invalid_argument on an
// empty workload.
mpq_class total_utilization(const Workload& w);

inline constexpr time_us kDefaultHyperperiodCap = 1'000'000'000'000;  // 1e12 us

class HyperperiodOverflow : public std::runtime_error {
public:
    HyperperiodOverflow(time_us reached, time_us cap);
    time_us reached() const { return reached_; }
    time_us cap() const { return cap_; }

private:
    time_us reached_;
    time_us cap_;
};

// lcm of all periods. Reports (never truncates) when the running lcm
// exceeds `cap`.
time_us hyperperiod(const Workload& w, time_us cap = kDefaultHyperperiodCap);

// Every D_i <- round(delta * T_i), half-up to integer microseconds; periods
// unchanged, delta recorded on the result. Throws WorkloadError when some
// rounded deadline drops below the task's WCET, std::invalid_argument when
// delta <= 0.
Workload scale_deadlines(const Workload& w, double delta);

}  // namespace redag

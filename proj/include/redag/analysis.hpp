#pragma once

#include <vector>

#include "redag/task_model.hpp"

namespace redag {

// RM utilization bound n(2^{1/n} - 1). Sufficient, not necessary; tends to
// ln 2 as n grows.
double rm_utilization_bound(int n);

// I_i: summed WCET of every strictly-higher-rank task. Ranks span all DAGs,
// so interference crosses graph boundaries.
time_us interference_bound(int task_id, const ValidatedWorkload& w, const PriorityMap& pm);

struct RtaResult {
    int task_id = 0;
    bool converged = false;
    // Converged: the exact fixed point R. Not converged: the first iterate
    // that exceeded the relative deadline.
    time_us response = 0;
    int iterations = 0;       // right-hand-side evaluations
    std::vector<int> hp;      // higher-priority task ids, rank order
    time_us blocking = 0;     // B, caller-supplied
};

// Fixed-point iteration of R = C + B + sum_{j in hp} ceil(R/T_j) * C_j,
// started from R = C + B, stopped on convergence or on exceeding D.
// Exact for one worker with independent tasks and synchronous release;
// a reference heuristic otherwise.
RtaResult response_time(int task_id, const ValidatedWorkload& w, const PriorityMap& pm,
                        time_us blocking = 0);

struct SchedReport {
    std::vector<RtaResult> per_task;  // priority-rank order
    mpq_class utilization;
    double rm_bound = 0.0;
    bool within_bound = false;
    bool all_schedulable = false;
};

SchedReport schedulability_report(const ValidatedWorkload& w);

}  // namespace redag

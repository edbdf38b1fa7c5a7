#include "redag/analysis.hpp"

#include <cmath>

namespace redag {

double rm_utilization_bound(int n) {
    if (n < 1) throw std::invalid_argument("rm_utilization_bound: n must be >= 1");
    return static_cast<double>(n) * (std::exp2(1.0 / static_cast<double>(n)) - 1.0);
}

namespace {

// Tasks ranked strictly above `task_id`, in rank order.
std::vector<int> higher_priority(int task_id, const PriorityMap& pm) {
    int rank = pm.rank_of(task_id);
    std::vector<int> hp;
    hp.reserve(static_cast<std::size_t>(rank));
    for (int r = 0; r < rank; ++r) hp.push_back(pm.task_at(r));
    return hp;
}

inline time_us ceil_div(time_us a, time_us b) { return (a + b - 1) / b; }

}  // namespace

time_us interference_bound(int task_id, const ValidatedWorkload& w, const PriorityMap& pm) {
    time_us sum = 0;
    for (int id : higher_priority(task_id, pm)) sum += w.task(id).wcet;
    return sum;
}

RtaResult response_time(int task_id, const ValidatedWorkload& w, const PriorityMap& pm,
                        time_us blocking) {
    const Task& t = w.task(task_id);
    RtaResult res;
    res.task_id = task_id;
    res.blocking = blocking;
    res.hp = higher_priority(task_id, pm);

    time_us r = t.wcet + blocking;
    if (r > t.deadline) {
        res.converged = false;
        res.response = r;
        return res;
    }
    // Iterates are strictly increasing integers bounded by D, so the loop
    // terminates without an explicit cap.
    for (;;) {
        ++res.iterations;
        time_us next = t.wcet + blocking;
        for (int id : res.hp) {
            const Task& h = w.task(id);
            next += ceil_div(r, h.period) * h.wcet;
        }
        if (next == r) {
            res.converged = true;
            res.response = r;
            return res;
        }
        r = next;
        if (r > t.deadline) {
            res.converged = false;
            res.response = r;
            return res;
        }
    }
}

SchedReport schedulability_report(const ValidatedWorkload& w) {
    SchedReport rep;
    PriorityMap pm = assign_rm_priorities(w);
    rep.utilization = total_utilization(w.workload());
    rep.rm_bound = rm_utilization_bound(static_cast<int>(w.task_count()));
    rep.within_bound = rep.utilization.get_d() <= rep.rm_bound;
    rep.all_schedulable = true;
    for (int id : pm.by_rank()) {
        RtaResult r = response_time(id, w, pm, 0);
        if (!r.converged) rep.all_schedulable = false;
        rep.per_task.push_back(std::move(r));
    }
    return rep;
}

}  // namespace redag

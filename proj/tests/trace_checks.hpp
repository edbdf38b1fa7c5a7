#pragma once

// Independent replay validators for simulator traces. These rebuild the
// ready/running state from the event log alone and re-check every scheduling
// rule; they share no code with the simulator's dispatch path.

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "redag/sim.hpp"
#include "redag/task_model.hpp"

namespace redag::testutil {

struct ReplayJob {
    int task_id = 0;
    int instance = 0;
    time_us release = 0;
    time_us total_run = 0;  // summed dispatch->(preempt|complete) time
    std::optional<time_us> running_since;
    bool completed = false;
};

// Empty string when every invariant holds; otherwise the first failure.
inline std::string check_trace_invariants(const SimTrace& trace, const ValidatedWorkload& w,
                                          const PriorityMap& pm, Policy policy, int workers) {
    if (policy == Policy::FifoSingle) workers = 1;
    const bool fifo = policy != Policy::ReDagRT;

    std::ostringstream err;
    auto fail = [&](const std::string& msg, const TraceEvent* ev) {
        err << msg;
        if (ev)
            err << " [t=" << ev->timestamp << " " << to_string(ev->kind) << " task=" << ev->task_id
                << " inst=" << ev->instance << " w=" << ev->worker << "]";
        return err.str();
    };

    std::map<int, int> dag_of_task;
    std::vector<std::optional<int>> cap_of_dag;
    std::map<int, int> dag_ix_of_id;
    for (const auto& d : w.workload().dags) {
        dag_ix_of_id[d.dag_id] = static_cast<int>(cap_of_dag.size());
        cap_of_dag.push_back(d.max_active);
        for (const auto& t : d.tasks) dag_of_task[t.id] = static_cast<int>(cap_of_dag.size()) - 1;
    }
    const std::size_t n_dags = cap_of_dag.size();

    using JobKey = std::pair<int, int>;  // (task, instance)
    using OrderKey = std::tuple<time_us, time_us, int, int>;
    std::map<JobKey, ReplayJob> jobs;
    std::vector<std::set<OrderKey>> ready(n_dags);  // policy dispatch order per DAG
    std::map<JobKey, int> running;                  // -> worker
    std::vector<int> running_of_dag(n_dags, 0);
    std::map<int, long> completions_of_task;

    auto order_key = [&](const JobKey& k, time_us release) -> OrderKey {
        if (fifo) return {release, k.first, k.second, 0};
        return {pm.rank_of(k.first), release, k.first, k.second};
    };
    auto dag_open = [&](int dag) {
        return !cap_of_dag[static_cast<std::size_t>(dag)] ||
               running_of_dag[static_cast<std::size_t>(dag)] <
                   *cap_of_dag[static_cast<std::size_t>(dag)];
    };
    // Best dispatch-eligible entry across open DAGs, or nullopt.
    auto best_eligible = [&]() -> std::optional<OrderKey> {
        std::optional<OrderKey> best;
        for (std::size_t d = 0; d < n_dags; ++d) {
            if (ready[d].empty() || !dag_open(static_cast<int>(d))) continue;
            const OrderKey& front = *ready[d].begin();
            if (!best || front < *best) best = front;
        }
        return best;
    };

    // Settled-state checks between timestamps: work conservation and (for the
    // rate-priority policy) global priority order, both over dispatch-eligible
    // jobs only; cap-deferred jobs are exempt by construction.
    auto settled_check = [&](time_us at) -> std::string {
        auto best = best_eligible();
        if (!best) return {};
        if (static_cast<int>(running.size()) < workers) {
            err << "work conservation: worker idle at t=" << at
                << " while an eligible job waits (task " << std::get<2>(*best) << ")";
            return err.str();
        }
        if (!fifo) {
            int max_running_rank = -1;
            for (const auto& [k, wk] : running)
                max_running_rank = std::max(max_running_rank, pm.rank_of(k.first));
            if (static_cast<int>(std::get<0>(*best)) < max_running_rank) {
                err << "priority order: eligible rank " << std::get<0>(*best)
                    << " waits at t=" << at << " while rank " << max_running_rank << " runs";
                return err.str();
            }
        }
        return {};
    };

    time_us prev_t = std::numeric_limits<time_us>::min();
    for (const TraceEvent& ev : trace.events) {
        if (ev.timestamp < prev_t) return fail("timestamps regress", &ev);
        if (ev.timestamp > prev_t && prev_t != std::numeric_limits<time_us>::min()) {
            if (auto e = settled_check(prev_t); !e.empty()) return e;
        }
        prev_t = ev.timestamp;
        JobKey key{ev.task_id, ev.instance};
        auto dag_it = dag_of_task.find(ev.task_id);
        if (dag_it == dag_of_task.end()) return fail("unknown task id", &ev);
        int dag = dag_it->second;

        switch (ev.kind) {
            case EventKind::Release: {
                if (jobs.count(key)) return fail("double release", &ev);
                // Dependency safety: instance k releases only after the k-th
                // completion of every predecessor.
                for (int pred : w.predecessors(ev.task_id))
                    if (completions_of_task[pred] < ev.instance + 1)
                        return fail("release before predecessor completions", &ev);
                ReplayJob j;
                j.task_id = ev.task_id;
                j.instance = ev.instance;
                j.release = ev.timestamp;
                jobs[key] = j;
                break;
            }
            case EventKind::Ready: {
                auto it = jobs.find(key);
                if (it == jobs.end()) return fail("ready without release", &ev);
                ready[static_cast<std::size_t>(dag)].insert(order_key(key, it->second.release));
                break;
            }
            case EventKind::Dispatch: {
                auto it = jobs.find(key);
                if (it == jobs.end()) return fail("dispatch of an unknown job", &ev);
                OrderKey k = order_key(key, it->second.release);
                if (!ready[static_cast<std::size_t>(dag)].count(k))
                    return fail("dispatch of a non-ready job", &ev);
                for (const auto& [rk, rw] : running)
                    if (rw == ev.worker) return fail("dispatch onto a busy worker", &ev);
                if (!dag_open(dag)) return fail("dispatch past the DAG cap", &ev);
                auto best = best_eligible();
                if (!best || *best != k)
                    return fail("dispatch skipped a better eligible job", &ev);
                ready[static_cast<std::size_t>(dag)].erase(k);
                running[key] = ev.worker;
                running_of_dag[static_cast<std::size_t>(dag)]++;
                it->second.running_since = ev.timestamp;
                break;
            }
            case EventKind::Preempt: {
                if (fifo) return fail("preempt event in a FIFO trace", &ev);
                auto it = running.find(key);
                if (it == running.end() || it->second != ev.worker)
                    return fail("preempt of a job not on that worker", &ev);
                running.erase(it);
                running_of_dag[static_cast<std::size_t>(dag)]--;
                ReplayJob& j = jobs[key];
                j.total_run += ev.timestamp - *j.running_since;
                j.running_since.reset();
                ready[static_cast<std::size_t>(dag)].insert(order_key(key, j.release));
                break;
            }
            case EventKind::Complete: {
                auto it = running.find(key);
                if (it == running.end() || it->second != ev.worker)
                    return fail("complete of a job not on that worker", &ev);
                running.erase(it);
                running_of_dag[static_cast<std::size_t>(dag)]--;
                ReplayJob& j = jobs[key];
                j.total_run += ev.timestamp - *j.running_since;
                j.running_since.reset();
                j.completed = true;
                completions_of_task[ev.task_id]++;
                break;
            }
            case EventKind::DeferredByCap: {
                auto it = jobs.find(key);
                if (it == jobs.end()) return fail("cap deferral of an unknown job", &ev);
                if (!ready[static_cast<std::size_t>(dag)].count(order_key(key, it->second.release)))
                    return fail("cap deferral of a non-ready job", &ev);
                if (dag_open(dag)) return fail("cap deferral while the cap is open", &ev);
                break;
            }
            case EventKind::DeadlineMiss: {
                auto it = jobs.find(key);
                if (it == jobs.end() || !it->second.completed)
                    return fail("deadline miss for a non-completed job", &ev);
                break;
            }
        }
    }
    if (prev_t != std::numeric_limits<time_us>::min()) {
        if (auto e = settled_check(prev_t); !e.empty()) return e;
    }

    // Job-table cross-checks: execution conservation (with zero context-switch
    // cost a completed job runs exactly its WCET), record/event agreement, and
    // dispatches left unmatched only by censoring.
    std::map<JobKey, const JobRecord*> recs;
    for (const auto& rec : trace.jobs) recs[{rec.task_id, rec.instance}] = &rec;
    if (recs.size() != jobs.size()) {
        err << "job table and release events disagree (" << recs.size() << " vs " << jobs.size()
            << ")";
        return err.str();
    }
    for (const auto& [key, j] : jobs) {
        auto rit = recs.find(key);
        if (rit == recs.end()) {
            err << "release event without job-table row: task " << key.first << " inst "
                << key.second;
            return err.str();
        }
        const JobRecord& rec = *rit->second;
        if (j.release != rec.release) return fail("release mismatch with job table", nullptr);
        if (rec.deadline != rec.release + w.task(rec.task_id).deadline)
            return fail("deadline != release + D", nullptr);
        if (rec.completed() != j.completed) return fail("completion mismatch", nullptr);
        if (j.completed && j.total_run != w.task(rec.task_id).wcet) {
            err << "execution conservation broken: task " << key.first << " inst " << key.second
                << " ran " << j.total_run << " != C " << w.task(rec.task_id).wcet;
            return err.str();
        }
        if (j.running_since && rec.completed())
            return fail("job still running yet marked finished", nullptr);
    }
    return {};
}

}  // namespace redag::testutil

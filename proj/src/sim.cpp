#include "redag/sim.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace redag {

const char* to_string(Policy p) {
    switch (p) {
        case Policy::ReDagRT: return "redag-rt";
        case Policy::FifoSingle: return "fifo-single";
        case Policy::FifoMulti: return "fifo-multi";
    }
    return "?";
}

std::optional<Policy> policy_from_string(std::string_view s) {
    if (s == "redag-rt" || s == "redag") return Policy::ReDagRT;
    if (s == "fifo-single") return Policy::FifoSingle;
    if (s == "fifo-multi") return Policy::FifoMulti;
    return std::nullopt;
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Release: return "Release";
        case EventKind::Ready: return "Ready";
        case EventKind::DeferredByCap: return "DeferredByCap";
        case EventKind::Dispatch: return "Dispatch";
        case EventKind::Preempt: return "Preempt";
        case EventKind::Complete: return "Complete";
        case EventKind::DeadlineMiss: return "DeadlineMiss";
    }
    return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
    if (s == "Release") return EventKind::Release;
    if (s == "Ready") return EventKind::Ready;
    if (s == "DeferredByCap") return EventKind::DeferredByCap;
    if (s == "Dispatch") return EventKind::Dispatch;
    if (s == "Preempt") return EventKind::Preempt;
    if (s == "Complete") return EventKind::Complete;
    if (s == "DeadlineMiss") return EventKind::DeadlineMiss;
    return std::nullopt;
}

namespace {

constexpr time_us kNever = std::numeric_limits<time_us>::max();

struct SimTask {
    int id = 0;
    int index = 0;     // flat index
    int dag = 0;       // dag index
    time_us wcet = 0;
    time_us period = 0;
    time_us deadline = 0;
    int rank = 0;
    std::vector<int> preds;  // flat indices
    time_us next_boundary = 0;
    long next_instance = 0;
    std::deque<long> pending;  // candidate instances waiting on the gate
    long completions = 0;
};

// Queue key. ReDagRT: (rank, release, task id, instance), so peek is the
// ready job of the minimum-period task. FIFO: (ready time, task id, instance).
struct ReadyKey {
    time_us a = 0;
    time_us b = 0;
    long c = 0;
    long d = 0;
    auto operator<=>(const ReadyKey&) const = default;
};

struct ReadyJob {
    int job_ix = -1;
    int task_ix = -1;
    long instance = 0;
    time_us release = 0;
    time_us remaining = 0;
    std::uint64_t deferral_epoch = 0;  // dag full-epoch stamped at last DeferredByCap
};

struct Running {
    int job_ix = -1;
    int task_ix = -1;
    long instance = 0;
    int rank = 0;
    time_us release = 0;
    time_us dispatched_at = 0;
    time_us overhead = 0;       // context-switch charge ahead of the work
    time_us work_at_dispatch = 0;
    time_us completion = 0;
};

class Simulator {
public:
    Simulator(const ValidatedWorkload& w, const SimConfig& cfg, const PriorityMap& pm)
        : w_(w), cfg_(cfg) {
        if (cfg_.policy == Policy::FifoSingle) cfg_.workers = 1;
        if (cfg_.workers < 1) throw SimError("workers must be >= 1");
        if (cfg_.context_switch_cost < 0) throw SimError("context_switch_cost must be >= 0");
        if (cfg_.hyperperiods < 1) throw SimError("hyperperiods must be >= 1");

        if (cfg_.horizon > 0) {
            horizon_ = cfg_.horizon;
        } else {
            time_us h = hyperperiod(w.workload());
            if (h > kDefaultHyperperiodCap / cfg_.hyperperiods)
                throw HyperperiodOverflow(h, kDefaultHyperperiodCap);
            horizon_ = h * cfg_.hyperperiods;
        }

        const auto& dags = w.workload().dags;
        caps_.resize(dags.size());
        running_count_.assign(dags.size(), 0);
        dag_queues_.resize(dags.size());
        dag_full_epoch_.assign(dags.size(), 0);
        dag_was_full_.assign(dags.size(), false);
        for (std::size_t i = 0; i < dags.size(); ++i) {
            caps_[i] = dags[i].max_active;
            dag_index_by_id_[dags[i].dag_id] = static_cast<int>(i);
        }

        tasks_.resize(w.task_count());
        for (const auto& t : w.tasks()) {
            int ix = w.task_index(t.id);
            SimTask& st = tasks_[static_cast<std::size_t>(ix)];
            st.id = t.id;
            st.index = ix;
            st.dag = dag_index_by_id_.at(t.dag_id);
            st.wcet = t.wcet;
            st.period = t.period;
            st.deadline = t.deadline;
            st.rank = pm.rank_of(t.id);
            for (int pid : w.predecessors(t.id)) st.preds.push_back(w.task_index(pid));
            time_us offset = 0;
            if (auto it = cfg_.release_offsets.find(t.id); it != cfg_.release_offsets.end()) {
                if (it->second < 0) throw SimError("release offset must be >= 0");
                offset = it->second;
            }
            st.next_boundary = offset < horizon_ ? offset : kNever;
            trace_.per_task[t.id];  // ensure a row for every task
        }
        for (const auto& [id, off] : cfg_.release_offsets)
            if (!w.has_task(id)) throw SimError("release offset for unknown task id " + std::to_string(id));

        task_order_.resize(tasks_.size());
        for (std::size_t i = 0; i < tasks_.size(); ++i) task_order_[i] = static_cast<int>(i);
        std::sort(task_order_.begin(), task_order_.end(),
                  [&](int a, int b) { return tasks_[static_cast<std::size_t>(a)].id <
                                             tasks_[static_cast<std::size_t>(b)].id; });

        workers_.assign(static_cast<std::size_t>(cfg_.workers), std::nullopt);
        trace_.horizon = horizon_;
    }

    SimTrace run() {
        for (;;) {
            time_us t = next_time();
            if (t == kNever || t > horizon_) break;
            step(t);
        }
        for (const auto& j : trace_.jobs)
            if (!j.completed()) ++trace_.censored;
        for (const auto& st : tasks_)
            trace_.unreleased_candidates += static_cast<long>(st.pending.size());
        return std::move(trace_);
    }

private:
    bool fifo() const { return cfg_.policy != Policy::ReDagRT; }

    bool cap_open(int dag) const {
        return !caps_[static_cast<std::size_t>(dag)] ||
               running_count_[static_cast<std::size_t>(dag)] < *caps_[static_cast<std::size_t>(dag)];
    }

    time_us next_time() const {
        time_us t = kNever;
        for (const auto& wk : workers_)
            if (wk) t = std::min(t, wk->completion);
        for (const auto& st : tasks_)
            t = std::min(t, st.next_boundary);
        return t;
    }

    void emit(time_us t, EventKind k, int task_ix, long instance, int worker) {
        trace_.events.push_back({t, k, tasks_[static_cast<std::size_t>(task_ix)].id,
                                 static_cast<int>(instance), worker});
    }

    // One scheduling point. Tie rule at a shared timestamp: completions,
    // then releases, then dispatch.
    void step(time_us now) {
        released_now_.clear();

        for (std::size_t wi = 0; wi < workers_.size(); ++wi)
            if (workers_[wi] && workers_[wi]->completion == now) complete(static_cast<int>(wi), now);

        for (int ix : task_order_) {
            SimTask& st = tasks_[static_cast<std::size_t>(ix)];
            while (st.next_boundary == now) {
                st.pending.push_back(st.next_instance++);
                st.next_boundary += st.period;
                if (st.next_boundary >= horizon_) st.next_boundary = kNever;
            }
        }

        for (int ix : task_order_) {
            SimTask& st = tasks_[static_cast<std::size_t>(ix)];
            while (!st.pending.empty() && gate_open(st, st.pending.front()))
                release(st, now);
        }

        dispatch(now);
        settle_cap_deferrals(now);
    }

    bool gate_open(const SimTask& st, long instance) const {
        // Instance k waits for the k-th completion of every predecessor.
        for (int p : st.preds)
            if (tasks_[static_cast<std::size_t>(p)].completions < instance + 1) return false;
        return true;
    }

    void release(SimTask& st, time_us now) {
        long instance = st.pending.front();
        st.pending.pop_front();

        JobRecord rec;
        rec.task_id = st.id;
        rec.instance = static_cast<int>(instance);
        rec.release = now;
        rec.deadline = now + st.deadline;
        int job_ix = static_cast<int>(trace_.jobs.size());
        trace_.jobs.push_back(rec);
        trace_.per_task[st.id].released++;

        emit(now, EventKind::Release, st.index, instance, -1);
        emit(now, EventKind::Ready, st.index, instance, -1);

        ReadyJob rj{job_ix, st.index, instance, now, st.wcet, 0};
        enqueue(rj);
        released_now_.push_back({st.dag, queue_key(rj)});
    }

    ReadyKey queue_key(const ReadyJob& rj) const {
        const SimTask& st = tasks_[static_cast<std::size_t>(rj.task_ix)];
        if (fifo()) return {rj.release, st.id, rj.instance, 0};
        return {st.rank, rj.release, st.id, rj.instance};
    }

    void enqueue(const ReadyJob& rj) {
        const SimTask& st = tasks_[static_cast<std::size_t>(rj.task_ix)];
        auto [it, inserted] = dag_queues_[static_cast<std::size_t>(st.dag)].emplace(queue_key(rj), rj);
        if (!inserted) throw InternalInvariantViolation("duplicate ready-queue key");
    }

    void complete(int wi, time_us now) {
        Running r = *workers_[static_cast<std::size_t>(wi)];
        workers_[static_cast<std::size_t>(wi)].reset();
        SimTask& st = tasks_[static_cast<std::size_t>(r.task_ix)];

        JobRecord& job = trace_.jobs[static_cast<std::size_t>(r.job_ix)];
        job.finish = now;
        st.completions++;
        running_count_[static_cast<std::size_t>(st.dag)]--;
        if (running_count_[static_cast<std::size_t>(st.dag)] < 0)
            throw InternalInvariantViolation("negative running count");

        auto& counters = trace_.per_task[st.id];
        counters.completed++;
        emit(now, EventKind::Complete, r.task_ix, r.instance, wi);
        if (job.lateness() > 0) {
            counters.misses++;
            emit(now, EventKind::DeadlineMiss, r.task_ix, r.instance, wi);
        }
    }

    int free_worker() const {
        for (std::size_t wi = 0; wi < workers_.size(); ++wi)
            if (!workers_[wi]) return static_cast<int>(wi);
        return -1;
    }

    // Best dispatch-eligible ready job across DAG queues (caps respected).
    std::pair<int, std::map<ReadyKey, ReadyJob>::iterator> best_eligible() {
        int best_dag = -1;
        std::map<ReadyKey, ReadyJob>::iterator best;
        for (std::size_t d = 0; d < dag_queues_.size(); ++d) {
            if (dag_queues_[d].empty() || !cap_open(static_cast<int>(d))) continue;
            auto it = dag_queues_[d].begin();
            if (best_dag < 0 || it->first < best->first) {
                best_dag = static_cast<int>(d);
                best = it;
            }
        }
        return {best_dag, best};
    }

    void start_job(int dag, std::map<ReadyKey, ReadyJob>::iterator it, int wi, time_us now,
                   time_us overhead) {
        ReadyJob rj = it->second;
        dag_queues_[static_cast<std::size_t>(dag)].erase(it);
        const SimTask& st = tasks_[static_cast<std::size_t>(rj.task_ix)];

        JobRecord& job = trace_.jobs[static_cast<std::size_t>(rj.job_ix)];
        if (job.start < 0) job.start = now;

        Running run;
        run.job_ix = rj.job_ix;
        run.task_ix = rj.task_ix;
        run.instance = rj.instance;
        run.rank = st.rank;
        run.release = rj.release;
        run.dispatched_at = now;
        run.overhead = overhead;
        run.work_at_dispatch = rj.remaining;
        run.completion = now + overhead + rj.remaining;
        workers_[static_cast<std::size_t>(wi)] = run;
        running_count_[static_cast<std::size_t>(dag)]++;
        emit(now, EventKind::Dispatch, rj.task_ix, rj.instance, wi);
    }

    // Lowest-priority running job: max (rank, release, instance).
    int victim_worker() const {
        int vict = -1;
        auto key = [&](const Running& r) {
            return std::tuple<int, time_us, long>(r.rank, r.release, r.instance);
        };
        for (std::size_t wi = 0; wi < workers_.size(); ++wi) {
            if (!workers_[wi]) continue;
            if (vict < 0 || key(*workers_[wi]) > key(*workers_[static_cast<std::size_t>(vict)]))
                vict = static_cast<int>(wi);
        }
        return vict;
    }

    void preempt(int wi, time_us now) {
        Running r = *workers_[static_cast<std::size_t>(wi)];
        workers_[static_cast<std::size_t>(wi)].reset();
        const SimTask& st = tasks_[static_cast<std::size_t>(r.task_ix)];

        time_us elapsed = now - r.dispatched_at;
        time_us productive = std::max<time_us>(0, elapsed - r.overhead);
        time_us remaining = r.work_at_dispatch - productive;
        if (remaining <= 0)
            throw InternalInvariantViolation("preempting a finished job");

        running_count_[static_cast<std::size_t>(st.dag)]--;
        JobRecord& job = trace_.jobs[static_cast<std::size_t>(r.job_ix)];
        job.preemptions++;
        trace_.per_task[st.id].preemptions++;
        emit(now, EventKind::Preempt, r.task_ix, r.instance, wi);

        ReadyJob rj{r.job_ix, r.task_ix, r.instance, r.release, remaining, 0};
        enqueue(rj);
        requeued_now_.push_back({st.dag, queue_key(rj)});
    }

    void dispatch(time_us now) {
        requeued_now_.clear();
        if (fifo()) {
            // Non-preemptive: fill free workers with the oldest eligible jobs.
            for (;;) {
                int wi = free_worker();
                if (wi < 0) return;
                auto [dag, it] = best_eligible();
                if (dag < 0) return;
                start_job(dag, it, wi, now, 0);
            }
        }
        for (;;) {
            auto [dag, it] = best_eligible();
            if (dag < 0) return;
            int wi = free_worker();
            if (wi >= 0) {
                start_job(dag, it, wi, now, 0);
                continue;
            }
            int vict = victim_worker();
            const Running& victim = *workers_[static_cast<std::size_t>(vict)];
            // Strictly higher rank required; equal rank never preempts.
            if (tasks_[static_cast<std::size_t>(it->second.task_ix)].rank < victim.rank) {
                preempt(vict, now);
                auto [dag2, it2] = best_eligible();
                if (dag2 < 0) throw InternalInvariantViolation("ready job vanished after preempt");
                start_job(dag2, it2, vict, now, cfg_.context_switch_cost);
                continue;
            }
            return;
        }
    }

    // Settled-state cap-deferral bookkeeping. A job's deferral episode starts
    // when it sits ready while its DAG is at cap; one DeferredByCap per
    // episode. Epochs avoid rescanning queues while a DAG stays saturated.
    void settle_cap_deferrals(time_us now) {
        for (std::size_t d = 0; d < dag_queues_.size(); ++d) {
            if (!caps_[d]) continue;
            bool full = running_count_[d] >= *caps_[d];
            if (full && !dag_was_full_[d]) {
                dag_full_epoch_[d]++;
                for (auto& [key, rj] : dag_queues_[d]) mark_deferred(static_cast<int>(d), rj, now);
            }
            dag_was_full_[d] = full;
        }
        auto touch = [&](const std::pair<int, ReadyKey>& entry) {
            auto& q = dag_queues_[static_cast<std::size_t>(entry.first)];
            auto it = q.find(entry.second);
            if (it == q.end()) return;  // dispatched meanwhile
            if (caps_[static_cast<std::size_t>(entry.first)] && dag_was_full_[static_cast<std::size_t>(entry.first)])
                mark_deferred(entry.first, it->second, now);
        };
        for (const auto& e : released_now_) touch(e);
        for (const auto& e : requeued_now_) touch(e);
    }

    void mark_deferred(int dag, ReadyJob& rj, time_us now) {
        if (rj.deferral_epoch == dag_full_epoch_[static_cast<std::size_t>(dag)]) return;
        rj.deferral_epoch = dag_full_epoch_[static_cast<std::size_t>(dag)];
        JobRecord& job = trace_.jobs[static_cast<std::size_t>(rj.job_ix)];
        job.deferred_by_cap = true;
        trace_.per_task[job.task_id].deferral_episodes++;
        emit(now, EventKind::DeferredByCap, rj.task_ix, rj.instance, -1);
    }

    const ValidatedWorkload& w_;
    SimConfig cfg_;
    time_us horizon_ = 0;

    std::vector<SimTask> tasks_;
    std::vector<int> task_order_;  // flat indices by ascending task id
    std::map<int, int> dag_index_by_id_;
    std::vector<std::optional<int>> caps_;
    std::vector<int> running_count_;
    std::vector<std::map<ReadyKey, ReadyJob>> dag_queues_;
    std::vector<std::uint64_t> dag_full_epoch_;
    std::vector<bool> dag_was_full_;
    std::vector<std::optional<Running>> workers_;
    std::vector<std::pair<int, ReadyKey>> released_now_;
    std::vector<std::pair<int, ReadyKey>> requeued_now_;

    SimTrace trace_;
};

}  // namespace

SimTrace simulate(const ValidatedWorkload& w, const SimConfig& cfg, const PriorityMap& pm) {
    Simulator sim(w, cfg, pm);
    return sim.run();
}

EnforcementReport verify_enforcement(std::span<const TraceEvent> events, const Workload& w) {
    std::map<int, int> dag_of_task;
    std::map<int, std::optional<int>> cap_of_dag;
    std::map<int, int> running;
    for (const auto& d : w.dags) {
        cap_of_dag[d.dag_id] = d.max_active;
        running[d.dag_id] = 0;
        for (const auto& t : d.tasks) dag_of_task[t.id] = d.dag_id;
    }

    EnforcementReport rep;
    std::map<std::pair<int, int>, int> live;  // (task, instance) -> worker
    time_us prev = std::numeric_limits<time_us>::min();
    for (const auto& ev : events) {
        if (ev.timestamp < prev) throw MalformedTrace("timestamps not non-decreasing");
        prev = ev.timestamp;
        if (ev.kind != EventKind::Dispatch && ev.kind != EventKind::Preempt &&
            ev.kind != EventKind::Complete)
            continue;
        auto dit = dag_of_task.find(ev.task_id);
        if (dit == dag_of_task.end())
            throw MalformedTrace("event references unknown task id " + std::to_string(ev.task_id));
        int dag = dit->second;
        std::pair<int, int> key{ev.task_id, ev.instance};

        if (ev.kind == EventKind::Dispatch) {
            if (live.count(key)) throw MalformedTrace("dispatch of an already-running job");
            live[key] = ev.worker;
            int n = ++running[dag];
            auto cap = cap_of_dag[dag];
            if (cap && n > *cap) {
                rep.violations.push_back({ev.timestamp, dag, n, *cap});
            }
        } else {
            auto it = live.find(key);
            if (it == live.end())
                throw MalformedTrace(std::string(to_string(ev.kind)) + " of a job that is not running");
            live.erase(it);
            if (--running[dag] < 0) throw MalformedTrace("negative running count in replay");
        }
    }
    rep.all_enforced = rep.violations.empty();
    return rep;
}

EnforcementReport verify_enforcement(const SimTrace& trace, const Workload& w) {
    return verify_enforcement(std::span<const TraceEvent>(trace.events), w);
}

time_us worst_case_response_from_trace(const SimTrace& trace, int task_id) {
    time_us worst = -1;
    for (const auto& j : trace.jobs)
        if (j.task_id == task_id && j.completed()) worst = std::max(worst, j.response());
    if (worst < 0)
        throw NoCompletedJobs("no completed jobs of task " + std::to_string(task_id));
    return worst;
}

}  // namespace redag

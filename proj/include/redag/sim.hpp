#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "redag/task_model.hpp"

namespace redag {

// ReDagRT: global rate-priority dispatch, preemptive, m workers.
// FifoSingle/FifoMulti: ready-timestamp FIFO, non-preemptive, 1 or m workers
// (the baseline executor emulations).
enum class Policy { ReDagRT, FifoSingle, FifoMulti };

const char* to_string(Policy p);
std::optional<Policy> policy_from_string(std::string_view s);

struct SimConfig {
    Policy policy = Policy::ReDagRT;
    int workers = 1;  // forced to 1 under FifoSingle
    // Simulation end. 0 selects `hyperperiods` whole hyperperiods.
    time_us horizon = 0;
    int hyperperiods = 1;
    // Charged at the start of a preemption-triggered dispatch; overhead, not
    // execution progress.
    time_us context_switch_cost = 0;
    // task id -> first release offset; tasks absent release synchronously at 0.
    std::map<int, time_us> release_offsets;
};

enum class EventKind { Release, Ready, DeferredByCap, Dispatch, Preempt, Complete, DeadlineMiss };

const char* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

struct TraceEvent {
    time_us timestamp = 0;
    EventKind kind = EventKind::Release;
    int task_id = 0;
    int instance = 0;
    int worker = -1;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// One released job. r is the time both release gates held (period boundary
// passed and all predecessor instances complete); d = r + D.
struct JobRecord {
    int task_id = 0;
    int instance = 0;
    time_us release = 0;
    time_us start = -1;   // first dispatch; -1 when never dispatched
    time_us finish = -1;  // -1 when censored at horizon
    time_us deadline = 0;
    int preemptions = 0;
    bool deferred_by_cap = false;

    bool completed() const { return finish >= 0; }
    time_us response() const { return finish - release; }
    time_us lateness() const { return finish - deadline; }
    bool missed() const { return completed() && lateness() > 0; }

    friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

struct TaskCounters {
    long released = 0;
    long completed = 0;
    long misses = 0;
    long deferral_episodes = 0;
    long preemptions = 0;
};

struct SimTrace {
    std::vector<TraceEvent> events;
    std::vector<JobRecord> jobs;  // release order
    std::map<int, TaskCounters> per_task;
    time_us horizon = 0;
    long censored = 0;                // released, unfinished at horizon
    long unreleased_candidates = 0;   // period boundaries whose gate never opened
};

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scheduler bookkeeping went inconsistent; the run is aborted, never patched.
class InternalInvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

SimTrace simulate(const ValidatedWorkload& w, const SimConfig& cfg, const PriorityMap& pm);

class MalformedTrace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EnforcementViolation {
    time_us timestamp = 0;
    int dag_id = 0;
    int count = 0;
    int cap = 0;
};

struct EnforcementReport {
    bool all_enforced = true;
    std::vector<EnforcementViolation> violations;
};

// Independent replay of Dispatch/Preempt/Complete events against the per-DAG
// caps; never trusts the simulator's own counts.
EnforcementReport verify_enforcement(std::span<const TraceEvent> events, const Workload& w);
EnforcementReport verify_enforcement(const SimTrace& trace, const Workload& w);

class NoCompletedJobs : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// max(f - r) over completed jobs of the task.
time_us worst_case_response_from_trace(const SimTrace& trace, int task_id);

}  // namespace redag

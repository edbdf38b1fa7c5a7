#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "redag/sim.hpp"
#include "redag/task_model.hpp"

namespace redag {

class NoJobs : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IncompleteJob : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// L = f - d. Positive lateness is a miss; L == 0 is on time.
time_us job_lateness(const JobRecord& job);

// max_k max(0, L_k) over completed jobs; 0 when nothing was late.
time_us max_lateness(std::span<const JobRecord> jobs);

// Misses / completed jobs. Censored jobs count in neither side.
double miss_rate(std::span<const JobRecord> jobs);

// Job-weighted across the given per-DAG job sets.
double combined_miss_rate(const std::vector<std::vector<JobRecord>>& per_dag_jobs);

// Nearest-rank percentile (ceil(q*n)-th order statistic) of response times.
time_us response_percentile(std::span<const JobRecord> jobs, double q);
std::vector<time_us> response_percentiles(std::span<const JobRecord> jobs,
                                          std::span<const double> quantiles);

// Empirical CDF over response times. n_points == 0 emits one entry per
// distinct response value; otherwise n_points evenly spaced quantiles.
// Fractions are monotone and end at 1.0.
std::vector<std::pair<time_us, double>> cdf_table(std::span<const JobRecord> jobs,
                                                  int n_points = 0);

struct GroupMetrics {
    long released = 0;
    long completed = 0;
    long censored = 0;
    long misses = 0;
    double miss_rate = 0.0;
    time_us max_lateness = 0;
    double mean_response = 0.0;
    time_us p50 = 0, p95 = 0, p99 = 0;
};

struct TaskMetrics : GroupMetrics {
    int task_id = 0;
    int dag_id = 0;
    long deferral_episodes = 0;
    long preemptions = 0;
};

struct DagMetrics : GroupMetrics {
    int dag_id = 0;
};

struct MetricsReport {
    std::vector<TaskMetrics> per_task;  // ascending task id
    std::vector<DagMetrics> per_dag;    // workload DAG order
    GroupMetrics combined;              // job-weighted over everything
    double per_dag_mean_miss_rate = 0.0;  // equal-weight alternative aggregation
    long deferral_episodes = 0;
    long preemptions = 0;
};

MetricsReport compute_metrics(const SimTrace& trace, const ValidatedWorkload& w);

void write_metrics_csv(const MetricsReport& rep, std::ostream& os);
void write_cdf_csv(std::span<const std::pair<time_us, double>> table, std::ostream& os);

}  // namespace redag

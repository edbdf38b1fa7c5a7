#include "redag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace redag {

time_us job_lateness(const JobRecord& job) {
    if (!job.completed()) throw IncompleteJob("lateness of an incomplete job");
    return job.finish - job.deadline;
}

namespace {

std::vector<time_us> completed_responses(std::span<const JobRecord> jobs) {
    std::vector<time_us> rs;
    for (const auto& j : jobs)
        if (j.completed()) rs.push_back(j.response());
    return rs;
}

// ceil(q*n) with a guard against FP excess (0.95*100 must stay 95).
std::size_t nearest_rank(double q, std::size_t n) {
    double raw = q * static_cast<double>(n);
    auto rank = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return rank;
}

time_us percentile_of(std::vector<time_us>& sorted, double q) {
    return sorted[nearest_rank(q, sorted.size()) - 1];
}

}  // namespace

time_us max_lateness(std::span<const JobRecord> jobs) {
    bool any = false;
    time_us worst = 0;
    for (const auto& j : jobs) {
        if (!j.completed()) continue;
        any = true;
        worst = std::max(worst, std::max<time_us>(0, j.lateness()));
    }
    if (!any) throw NoJobs("max_lateness: no completed jobs");
    return worst;
}

double miss_rate(std::span<const JobRecord> jobs) {
    long completed = 0, misses = 0;
    for (const auto& j : jobs) {
        if (!j.completed()) continue;
        ++completed;
        if (j.lateness() > 0) ++misses;
    }
    if (completed == 0) throw NoJobs("miss_rate: no completed jobs");
    return static_cast<double>(misses) / static_cast<double>(completed);
}

double combined_miss_rate(const std::vector<std::vector<JobRecord>>& per_dag_jobs) {
    long completed = 0, misses = 0;
    for (const auto& jobs : per_dag_jobs)
        for (const auto& j : jobs) {
            if (!j.completed()) continue;
            ++completed;
            if (j.lateness() > 0) ++misses;
        }
    if (completed == 0) throw NoJobs("combined_miss_rate: no completed jobs");
    return static_cast<double>(misses) / static_cast<double>(completed);
}

time_us response_percentile(std::span<const JobRecord> jobs, double q) {
    if (!(q > 0.0) || q > 1.0)
        throw std::invalid_argument("quantile must lie in (0, 1]");
    auto rs = completed_responses(jobs);
    if (rs.empty()) throw NoJobs("response_percentile: no completed jobs");
    std::sort(rs.begin(), rs.end());
    return percentile_of(rs, q);
}

std::vector<time_us> response_percentiles(std::span<const JobRecord> jobs,
                                          std::span<const double> quantiles) {
    auto rs = completed_responses(jobs);
    if (rs.empty()) throw NoJobs("response_percentiles: no completed jobs");
    std::sort(rs.begin(), rs.end());
    std::vector<time_us> out;
    out.reserve(quantiles.size());
    for (double q : quantiles) {
        if (!(q > 0.0) || q > 1.0)
            throw std::invalid_argument("quantile must lie in (0, 1]");
        out.push_back(percentile_of(rs, q));
    }
    return out;
}

std::vector<std::pair<time_us, double>> cdf_table(std::span<const JobRecord> jobs, int n_points) {
    auto rs = completed_responses(jobs);
    if (rs.empty()) throw NoJobs("cdf_table: no completed jobs");
    std::sort(rs.begin(), rs.end());
    const auto n = rs.size();

    std::vector<std::pair<time_us, double>> out;
    if (n_points <= 0) {
        // One entry per distinct value at its highest cumulative fraction.
        for (std::size_t i = 0; i < n; ++i) {
            double frac = static_cast<double>(i + 1) / static_cast<double>(n);
            if (!out.empty() && out.back().first == rs[i])
                out.back().second = frac;
            else
                out.emplace_back(rs[i], frac);
        }
    } else {
        for (int k = 1; k <= n_points; ++k) {
            double q = static_cast<double>(k) / static_cast<double>(n_points);
            out.emplace_back(percentile_of(rs, q), q);
        }
    }
    return out;
}

namespace {

void fill_group(GroupMetrics& g, std::span<const JobRecord> jobs) {
    std::vector<time_us> rs;
    long response_sum = 0;
    for (const auto& j : jobs) {
        g.released++;
        if (!j.completed()) {
            g.censored++;
            continue;
        }
        g.completed++;
        if (j.lateness() > 0) g.misses++;
        g.max_lateness = std::max(g.max_lateness, std::max<time_us>(0, j.lateness()));
        rs.push_back(j.response());
        response_sum += j.response();
    }
    if (g.completed == 0) return;
    g.miss_rate = static_cast<double>(g.misses) / static_cast<double>(g.completed);
    g.mean_response = static_cast<double>(response_sum) / static_cast<double>(g.completed);
    std::sort(rs.begin(), rs.end());
    g.p50 = percentile_of(rs, 0.50);
    g.p95 = percentile_of(rs, 0.95);
    g.p99 = percentile_of(rs, 0.99);
}

}  // namespace

MetricsReport compute_metrics(const SimTrace& trace, const ValidatedWorkload& w) {
    MetricsReport rep;

    std::map<int, std::vector<JobRecord>> by_task;
    for (const auto& t : w.tasks()) by_task[t.id];
    for (const auto& j : trace.jobs) by_task[j.task_id].push_back(j);

    std::map<int, std::vector<JobRecord>> by_dag;
    for (const auto& d : w.workload().dags) by_dag[d.dag_id];

    std::vector<JobRecord> all;
    for (const auto& [task_id, jobs] : by_task) {
        TaskMetrics tm;
        tm.task_id = task_id;
        tm.dag_id = w.task(task_id).dag_id;
        if (auto it = trace.per_task.find(task_id); it != trace.per_task.end()) {
            tm.deferral_episodes = it->second.deferral_episodes;
            tm.preemptions = it->second.preemptions;
            rep.deferral_episodes += it->second.deferral_episodes;
            rep.preemptions += it->second.preemptions;
        }
        fill_group(tm, jobs);
        rep.per_task.push_back(tm);
        auto& dag_jobs = by_dag[tm.dag_id];
        dag_jobs.insert(dag_jobs.end(), jobs.begin(), jobs.end());
        all.insert(all.end(), jobs.begin(), jobs.end());
    }

    double dag_mr_sum = 0.0;
    int dag_mr_count = 0;
    for (const auto& d : w.workload().dags) {
        DagMetrics dm;
        dm.dag_id = d.dag_id;
        fill_group(dm, by_dag[d.dag_id]);
        if (dm.completed > 0) {
            dag_mr_sum += dm.miss_rate;
            dag_mr_count++;
        }
        rep.per_dag.push_back(dm);
    }
    if (dag_mr_count > 0) rep.per_dag_mean_miss_rate = dag_mr_sum / dag_mr_count;

    fill_group(rep.combined, all);
    return rep;
}

namespace {

void group_row(std::ostream& os, const GroupMetrics& g) {
    os << g.released << "," << g.completed << "," << g.censored << "," << g.misses << ","
       << g.miss_rate << "," << g.max_lateness << "," << g.mean_response << "," << g.p50 << ","
       << g.p95 << "," << g.p99;
}

}  // namespace

void write_metrics_csv(const MetricsReport& rep, std::ostream& os) {
    os << "scope,id,released,completed,censored,misses,miss_rate,max_lateness_us,"
          "mean_response_us,p50_us,p95_us,p99_us,deferred,preemptions\n";
    os.precision(9);
    for (const auto& t : rep.per_task) {
        os << "task," << t.task_id << ",";
        group_row(os, t);
        os << "," << t.deferral_episodes << "," << t.preemptions << "\n";
    }
    for (const auto& d : rep.per_dag) {
        os << "dag," << d.dag_id << ",";
        group_row(os, d);
        os << ",,\n";
    }
    // Job-weighted combined row, then the equal-weight per-DAG mean for the
    // alternative aggregation.
    os << "combined,,";
    group_row(os, rep.combined);
    os << "," << rep.deferral_episodes << "," << rep.preemptions << "\n";
    os << "combined_dag_mean,,,,,," << rep.per_dag_mean_miss_rate << ",,,,,,,\n";
}

void write_cdf_csv(std::span<const std::pair<time_us, double>> table, std::ostream& os) {
    os << "response_us,cumulative_fraction\n";
    os.precision(9);
    for (const auto& [r, f] : table) os << r << "," << f << "\n";
}

}  // namespace redag

#include "redag/task_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace redag {

const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::InvalidTiming: return "InvalidTiming";
        case ViolationKind::CycleDetected: return "CycleDetected";
        case ViolationKind::CrossDagEdge: return "CrossDagEdge";
        case ViolationKind::DuplicateTaskId: return "DuplicateTaskId";
        case ViolationKind::UnknownTaskRef: return "UnknownTaskRef";
        case ViolationKind::InvalidMaxActive: return "InvalidMaxActive";
        case ViolationKind::EmptyWorkload: return "EmptyWorkload";
    }
    return "?";
}

std::string to_string(const Violation& v) {
    std::ostringstream os;
    os << to_string(v.kind);
    if (v.dag_id >= 0) os << " dag=" << v.dag_id;
    if (v.task_id >= 0) os << " task=" << v.task_id;
    if (!v.cycle.empty()) {
        os << " cycle=[";
        for (std::size_t i = 0; i < v.cycle.size(); ++i) {
            if (i) os << ",";
            os << v.cycle[i];
        }
        os << "]";
    }
    if (!v.detail.empty()) os << ": " << v.detail;
    return os.str();
}

namespace {

std::string join_violations(const std::vector<Violation>& vs) {
    std::ostringstream os;
    os << vs.size() << " workload violation(s)";
    for (const auto& v : vs) os << "\n  - " << to_string(v);
    return os.str();
}

}  // namespace

WorkloadError::WorkloadError(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

const Task& ValidatedWorkload::task(int task_id) const {
    return tasks_[static_cast<std::size_t>(task_index(task_id))];
}

int ValidatedWorkload::task_index(int task_id) const {
    auto it = index_by_id_.find(task_id);
    if (it == index_by_id_.end())
        throw std::out_of_range("unknown task id " + std::to_string(task_id));
    return it->second;
}

const DagSpec& ValidatedWorkload::dag(int dag_id) const {
    for (const auto& d : w_.dags)
        if (d.dag_id == dag_id) return d;
    throw std::out_of_range("unknown dag id " + std::to_string(dag_id));
}

const std::vector<int>& ValidatedWorkload::topo_order(int dag_id) const {
    auto it = topo_by_dag_.find(dag_id);
    if (it == topo_by_dag_.end())
        throw std::out_of_range("unknown dag id " + std::to_string(dag_id));
    return it->second;
}

const std::vector<int>& ValidatedWorkload::predecessors(int task_id) const {
    static const std::vector<int> empty;
    auto it = preds_.find(task_id);
    return it == preds_.end() ? empty : it->second;
}

const std::vector<int>& ValidatedWorkload::successors(int task_id) const {
    static const std::vector<int> empty;
    auto it = succs_.find(task_id);
    return it == succs_.end() ? empty : it->second;
}

namespace {

// Deterministic Kahn topological sort, smallest task id first. Returns
// nullopt when a cycle remains and fills `cycle` with one offending loop.
std::optional<std::vector<int>> topo_sort(const std::vector<int>& nodes,
                                          const std::map<int, std::set<int>>& succ,
                                          std::vector<int>* cycle) {
    std::map<int, int> indeg;
    for (int n : nodes) indeg[n] = 0;
    for (const auto& [from, tos] : succ)
        for (int to : tos) indeg[to]++;

    std::set<int> ready;
    for (const auto& [n, d] : indeg)
        if (d == 0) ready.insert(n);

    std::vector<int> order;
    while (!ready.empty()) {
        int n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        auto it = succ.find(n);
        if (it == succ.end()) continue;
        for (int to : it->second)
            if (--indeg[to] == 0) ready.insert(to);
    }
    if (order.size() == nodes.size()) return order;

    // Walk the leftover nodes (all on or upstream of a cycle) until one
    // repeats; report the loop starting from its smallest member.
    std::set<int> remaining;
    for (const auto& [n, d] : indeg)
        if (d > 0) remaining.insert(n);
    int cur = *remaining.begin();
    std::vector<int> path;
    std::map<int, std::size_t> seen;
    while (!seen.count(cur)) {
        seen[cur] = path.size();
        path.push_back(cur);
        const auto& nexts = succ.at(cur);
        int next = -1;
        for (int cand : nexts)
            if (remaining.count(cand)) { next = cand; break; }
        cur = next;
    }
    std::vector<int> loop(path.begin() + static_cast<std::ptrdiff_t>(seen[cur]), path.end());
    auto smallest = std::min_element(loop.begin(), loop.end());
    std::rotate(loop.begin(), smallest, loop.end());
    *cycle = loop;
    return std::nullopt;
}

}  // namespace

ValidationResult validate_workload(const Workload& w) {
    std::vector<Violation> out;

    if (w.task_count() == 0) {
        out.push_back({ViolationKind::EmptyWorkload, -1, -1, {}, "workload has no tasks"});
        return out;
    }

    // Id uniqueness across the whole workload (global priority space).
    std::map<int, int> owner_dag;
    for (const auto& d : w.dags) {
        for (const auto& t : d.tasks) {
            auto [it, inserted] = owner_dag.emplace(t.id, d.dag_id);
            if (!inserted)
                out.push_back({ViolationKind::DuplicateTaskId, d.dag_id, t.id, {},
                               "also defined in dag " + std::to_string(it->second)});
        }
    }

    for (const auto& d : w.dags) {
        if (d.max_active && *d.max_active < 1)
            out.push_back({ViolationKind::InvalidMaxActive, d.dag_id, -1, {},
                           "max_active must be >= 1 when bounded, got " +
                               std::to_string(*d.max_active)});

        for (const auto& t : d.tasks) {
            auto bad = [&](const std::string& reason) {
                out.push_back({ViolationKind::InvalidTiming, d.dag_id, t.id, {}, reason});
            };
            if (t.wcet <= 0) bad("wcet must be > 0");
            if (t.period <= 0) bad("period must be > 0");
            if (t.deadline <= 0) bad("deadline must be > 0");
            if (t.wcet > 0 && t.period > 0 && t.wcet > t.period)
                bad("wcet " + std::to_string(t.wcet) + " exceeds period " +
                    std::to_string(t.period));
            if (t.wcet > 0 && t.deadline > 0 && t.wcet > t.deadline)
                bad("wcet " + std::to_string(t.wcet) + " exceeds deadline " +
                    std::to_string(t.deadline));
        }

        std::set<int> local;
        for (const auto& t : d.tasks) local.insert(t.id);

        std::map<int, std::set<int>> succ;
        for (const auto& e : d.edges) {
            bool ok = true;
            for (int endpoint : {e.from, e.to}) {
                if (local.count(endpoint)) continue;
                ok = false;
                auto it = owner_dag.find(endpoint);
                if (it != owner_dag.end() && it->second != d.dag_id)
                    out.push_back({ViolationKind::CrossDagEdge, d.dag_id, endpoint, {},
                                   "edge " + std::to_string(e.from) + "->" +
                                       std::to_string(e.to) + " reaches dag " +
                                       std::to_string(it->second)});
                else
                    out.push_back({ViolationKind::UnknownTaskRef, d.dag_id, endpoint, {},
                                   "edge " + std::to_string(e.from) + "->" +
                                       std::to_string(e.to) + " references unknown task"});
            }
            if (ok) succ[e.from].insert(e.to);
        }

        std::vector<int> nodes(local.begin(), local.end());
        std::vector<int> cycle;
        if (!topo_sort(nodes, succ, &cycle)) {
            out.push_back({ViolationKind::CycleDetected, d.dag_id, -1, cycle,
                           "dag is not acyclic"});
        }
    }

    if (!out.empty()) return out;

    ValidatedWorkload v;
    v.w_ = w;
    for (const auto& d : w.dags) {
        std::map<int, std::set<int>> succ;
        std::set<int> local;
        for (const auto& t : d.tasks) {
            v.index_by_id_[t.id] = static_cast<int>(v.tasks_.size());
            v.tasks_.push_back(t);
            local.insert(t.id);
            v.preds_[t.id];
            v.succs_[t.id];
        }
        for (const auto& e : d.edges) succ[e.from].insert(e.to);
        for (const auto& [from, tos] : succ)
            for (int to : tos) {
                v.succs_[from].push_back(to);
                v.preds_[to].push_back(from);
            }
        std::vector<int> nodes(local.begin(), local.end());
        std::vector<int> cycle;
        v.topo_by_dag_[d.dag_id] = *topo_sort(nodes, succ, &cycle);
    }
    for (auto& [id, p] : v.preds_) std::sort(p.begin(), p.end());
    for (auto& [id, s] : v.succs_) std::sort(s.begin(), s.end());
    return v;
}

ValidatedWorkload validate_or_throw(const Workload& w) {
    auto r = validate_workload(w);
    if (auto* viol = std::get_if<std::vector<Violation>>(&r)) throw WorkloadError(*viol);
    return std::get<ValidatedWorkload>(std::move(r));
}

int PriorityMap::rank_of(int task_id) const {
    auto it = rank_by_id_.find(task_id);
    if (it == rank_by_id_.end())
        throw std::out_of_range("task id " + std::to_string(task_id) + " not in priority map");
    return it->second;
}

PriorityMap assign_rm_priorities(const ValidatedWorkload& w) {
    // T_i < T_j => rank(i) < rank(j), ties by ascending id; global over all DAGs.
    std::vector<std::pair<time_us, int>> keys;
    keys.reserve(w.task_count());
    for (const auto& t : w.tasks()) keys.emplace_back(t.period, t.id);
    std::sort(keys.begin(), keys.end());

    PriorityMap pm;
    pm.by_rank_.reserve(keys.size());
    for (std::size_t r = 0; r < keys.size(); ++r) {
        pm.by_rank_.push_back(keys[r].second);
        pm.rank_by_id_[keys[r].second] = static_cast<int>(r);
    }
    return pm;
}

mpq_class total_utilization(const Workload& w) {
    if (w.task_count() == 0)
        throw std::invalid_argument("total_utilization: workload has no tasks");
    mpq_class u(0);
    for (const auto& d : w.dags)
        for (const auto& t : d.tasks) {
            mpq_class term(static_cast<long>(t.wcet), static_cast<long>(t.period));
            term.canonicalize();
            u += term;
        }
    return u;
}

HyperperiodOverflow::HyperperiodOverflow(time_us reached, time_us cap)
    : std::runtime_error("hyperperiod exceeds cap " + std::to_string(cap) +
                         " us (reached >= " + std::to_string(reached) + " us)"),
      reached_(reached),
      cap_(cap) {}

time_us hyperperiod(const Workload& w, time_us cap) {
    if (w.task_count() == 0)
        throw std::invalid_argument("hyperperiod: workload has no tasks");
    time_us l = 1;
    for (const auto& d : w.dags)
        for (const auto& t : d.tasks) {
            if (t.period <= 0) throw std::invalid_argument("hyperperiod: nonpositive period");
            time_us g = std::gcd(l, t.period);
            time_us factor = t.period / g;
            if (factor != 0 && l > cap / factor)
                throw HyperperiodOverflow(l, cap);
            l *= factor;
        }
    return l;
}

Workload scale_deadlines(const Workload& w, double delta) {
    if (!(delta > 0.0))
        throw std::invalid_argument("scale_deadlines: delta must be > 0");
    Workload out = w;
    std::vector<Violation> violations;
    for (auto& d : out.dags)
        for (auto& t : d.tasks) {
            // Half-up rounding; always recomputed from the period, so scaling
            // is not cumulative across calls.
            time_us nd = static_cast<time_us>(std::llround(delta * static_cast<double>(t.period)));
            if (nd < t.wcet)
                violations.push_back({ViolationKind::InvalidTiming, d.dag_id, t.id, {},
                                      "scaled deadline " + std::to_string(nd) +
                                          " below wcet " + std::to_string(t.wcet)});
            t.deadline = nd;
        }
    if (!violations.empty()) throw WorkloadError(std::move(violations));
    out.deadline_scale = delta;
    return out;
}

}  // namespace redag

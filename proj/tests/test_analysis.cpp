#include <doctest.h>

#include <cmath>
#include <random>

#include "redag/analysis.hpp"
#include "test_util.hpp"

using namespace redag;
using namespace redag::testutil;

TEST_CASE("rm utilization bound values") {
    CHECK(rm_utilization_bound(1) == 1.0);
    CHECK(rm_utilization_bound(2) == doctest::Approx(0.828427124746).epsilon(1e-12));
    CHECK(std::abs(rm_utilization_bound(10000) - std::log(2.0)) < 1e-4);
    CHECK_THROWS_AS((void)rm_utilization_bound(0), std::invalid_argument);
}

TEST_CASE("interference bound sums hp WCETs globally") {
    auto v = validate_or_throw(independent_set({{1, 4}, {2, 6}, {3, 12}}));
    auto pm = assign_rm_priorities(v);
    CHECK(interference_bound(1, v, pm) == 0);  // highest priority
    CHECK(interference_bound(3, v, pm) == 3);  // 1 + 2

    // A task of another DAG counts once it outranks.
    Workload w;
    DagSpec d1, d2;
    d1.dag_id = 1;
    d1.tasks = {make_task(1, 1, 2, 20)};
    d2.dag_id = 2;
    d2.tasks = {make_task(2, 2, 5, 10)};
    w.dags = {d1, d2};
    auto v2 = validate_or_throw(w);
    auto pm2 = assign_rm_priorities(v2);
    CHECK(interference_bound(1, v2, pm2) == 5);

    // Independent recomputation from the priority map.
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::pair<time_us, time_us>> cts;
        int n = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i) {
            time_us t = 1000 * (1 + static_cast<time_us>(rng() % 50));
            cts.push_back({1 + static_cast<time_us>(rng() % t), t});
        }
        auto vw = validate_or_throw(independent_set(cts));
        auto pmr = assign_rm_priorities(vw);
        for (const auto& t : vw.tasks()) {
            time_us expect = 0;
            for (const auto& o : vw.tasks())
                if (pmr.rank_of(o.id) < pmr.rank_of(t.id)) expect += o.wcet;
            CHECK(interference_bound(t.id, vw, pmr) == expect);
        }
    }
}

TEST_CASE("response time fixed point on the worked examples") {
    // Highest-priority task: R = C after one evaluation.
    auto v1 = validate_or_throw(independent_set({{3, 10}}));
    auto r1 = response_time(1, v1, assign_rm_priorities(v1));
    CHECK(r1.converged);
    CHECK(r1.response == 3);
    CHECK(r1.iterations == 1);

    // (1,4),(2,6),(3,12): hand iteration 3 -> 6 -> 7 -> 9 -> 10 -> 10.
    auto v2 = validate_or_throw(independent_set({{1, 4}, {2, 6}, {3, 12}}));
    auto pm2 = assign_rm_priorities(v2);
    auto r2 = response_time(3, v2, pm2);
    CHECK(r2.converged);
    CHECK(r2.response == 10);
    CHECK(r2.iterations == 5);
    CHECK(r2.hp == std::vector<int>{1, 2});

    // (3,4),(3,6): iterate 3 -> 6 -> 9 > 6, unschedulable.
    auto v3 = validate_or_throw(independent_set({{3, 4}, {3, 6}}));
    auto r3 = response_time(2, v3, assign_rm_priorities(v3));
    CHECK_FALSE(r3.converged);
    CHECK(r3.response == 9);
}

TEST_CASE("blocking term shifts the recurrence") {
    auto v = validate_or_throw(independent_set({{1, 4}, {3, 12}}));
    auto pm = assign_rm_priorities(v);
    CHECK(response_time(2, v, pm, 0).response == 4);   // 3 + ceil(4/4)*1
    auto with_b = response_time(2, v, pm, 2);
    CHECK(with_b.converged);
    CHECK(with_b.blocking == 2);
    // R = 3 + 2 + ceil(R/4)*1: 5 -> 7 -> 7.
    CHECK(with_b.response == 7);
    // Large blocking exceeds the deadline outright.
    CHECK_FALSE(response_time(2, v, pm, 10).converged);
}

TEST_CASE("converged results are exact fixed points with monotone iterates") {
    std::mt19937_64 rng(23);
    auto ceil_div = [](time_us a, time_us b) { return (a + b - 1) / b; };
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::pair<time_us, time_us>> cts;
        int n = 2 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            time_us t = 100 * (2 + static_cast<time_us>(rng() % 200));
            cts.push_back({1 + static_cast<time_us>(rng() % (t / 2)), t});
        }
        auto v = validate_or_throw(independent_set(cts));
        auto pm = assign_rm_priorities(v);
        for (const auto& t : v.tasks()) {
            auto res = response_time(t.id, v, pm);
            // Re-evaluate the right-hand side independently.
            auto rhs = [&](time_us r) {
                time_us s = t.wcet;
                for (int id : res.hp) {
                    const Task& h = v.task(id);
                    s += ceil_div(r, h.period) * h.wcet;
                }
                return s;
            };
            if (res.converged) {
                CHECK(rhs(res.response) == res.response);
                CHECK(res.response <= t.deadline);
            } else {
                CHECK(res.response > t.deadline);
            }
            // Monotone non-decreasing iterate sequence, replayed here.
            time_us r = t.wcet;
            for (int k = 0; k < res.iterations; ++k) {
                time_us next = rhs(r);
                CHECK(next >= r);
                if (next == r || next > t.deadline) break;
                r = next;
            }
        }
    }
}

TEST_CASE("schedulability report combines bound and per-task verdicts") {
    auto v1 = validate_or_throw(independent_set({{1, 10}}));
    auto rep1 = schedulability_report(v1);
    CHECK(rep1.all_schedulable);
    CHECK(rep1.within_bound);
    CHECK(rep1.utilization == mpq_class(1, 10));
    CHECK(rep1.rm_bound == 1.0);

    // U = 5/6 > bound(3) yet every task converges: the bound is sufficient,
    // not necessary. Fixed points land at R = {1, 3, 10} in rank order.
    auto v2 = validate_or_throw(independent_set({{1, 4}, {2, 6}, {3, 12}}));
    auto rep2 = schedulability_report(v2);
    CHECK(rep2.all_schedulable);
    CHECK_FALSE(rep2.within_bound);
    REQUIRE(rep2.per_task.size() == 3);
    CHECK(rep2.per_task[0].response == 1);
    CHECK(rep2.per_task[1].response == 3);
    CHECK(rep2.per_task[2].response == 10);
    CHECK(rep2.rm_bound == doctest::Approx(3.0 * (std::cbrt(2.0) - 1.0)).epsilon(1e-12));

    auto v3 = validate_or_throw(independent_set({{3, 4}, {3, 6}}));
    CHECK_FALSE(schedulability_report(v3).all_schedulable);
}

TEST_CASE("workloads under the bound are always schedulable") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng() % 6);
        double bound = rm_utilization_bound(n);
        double target = bound * (0.3 + 0.69 * unit(rng));
        // UUniFast split, scaled to integer microseconds.
        std::vector<double> shares(static_cast<std::size_t>(n));
        double sum = target;
        for (int i = 1; i < n; ++i) {
            double next = sum * std::pow(unit(rng), 1.0 / (n - i));
            shares[static_cast<std::size_t>(i - 1)] = sum - next;
            sum = next;
        }
        shares[static_cast<std::size_t>(n - 1)] = sum;

        std::vector<std::pair<time_us, time_us>> cts;
        mpq_class u_total(0);
        for (double s : shares) {
            time_us t = 1000 * (10 + static_cast<time_us>(rng() % 200));
            time_us c = std::max<time_us>(1, static_cast<time_us>(s * static_cast<double>(t)));
            cts.push_back({c, t});
            mpq_class term(static_cast<long>(c), static_cast<long>(t));
            term.canonicalize();
            u_total += term;
        }
        if (u_total.get_d() > bound) continue;  // integer rounding pushed it over
        auto rep = schedulability_report(validate_or_throw(independent_set(cts)));
        CHECK(rep.all_schedulable);
    }
}

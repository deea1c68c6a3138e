#include <doctest.h>

#include <cmath>

#include "aois/lyapunov.hpp"
#include "test_helpers.hpp"

using namespace aois;

TEST_CASE("queue update recursion") {
    CHECK(queue_update(0.0, true, 2.0, 1.0) == 2.0);
    CHECK(queue_update(0.0, false, 5.0, 2.0) == 0.0);
    CHECK(queue_update(5.0, true, 2.0, 1.0) == 6.0);
    CHECK_THROWS_AS(queue_update(-1.0, true, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("lyapunov value") {
    CHECK(lyapunov_value(Vec::Zero(3)) == 0.0);
    Vec q(2);
    q << 3.0, 4.0;
    CHECK(lyapunov_value(q) == doctest::Approx(12.5));
    CHECK(lyapunov_value(3.0 * q) == doctest::Approx(9.0 * 12.5));
}

TEST_CASE("dpp objective") {
    Vec zero_q = Vec::Zero(2), cost(2), aois(2);
    cost << 1.0, 2.0;
    aois << 0.4, 0.6;
    const std::vector<bool> alpha = {true, false};
    // Zero queues: only the weighted AoIS term remains.
    CHECK(dpp_objective(zero_q, alpha, cost, 0.5, 2.0, aois) == doctest::Approx(2.0));

    // omega = 0 with positive Q c: skipping strictly beats transmitting.
    Vec q(2);
    q << 1.0, 1.0;
    const double tx = dpp_objective(q, {true, true}, cost, 0.5, 0.0, aois);
    const double skip = dpp_objective(q, {false, false}, cost, 0.5, 0.0, aois);
    CHECK(skip < tx);

    // Direct recomputation of the bound's action-dependent part.
    Rng rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        Vec qq = aois::testing::random_vec(3, rng).cwiseAbs();
        Vec cc = aois::testing::random_vec(3, rng).cwiseAbs();
        Vec aa = aois::testing::random_vec(3, rng).cwiseAbs();
        const double c_max = 0.7, omega = 1.3;
        std::vector<bool> al = {rng.uniform() < 0.5, rng.uniform() < 0.5, rng.uniform() < 0.5};
        double expect = 0.0;
        for (int i = 0; i < 3; ++i)
            expect += qq[i] * ((al[i] ? cc[i] : 0.0) - c_max) + omega * aa[i];
        CHECK(dpp_objective(qq, al, cc, c_max, omega, aa) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("pathwise one-slot drift bound") {
    Rng rng(62);
    Vec q = Vec::Zero(4);
    Vec cost(4);
    cost << 0.5, 1.0, 1.5, 2.0;
    const double c_max = 0.8;
    for (int t = 0; t < 500; ++t) {
        std::vector<bool> alpha(4);
        for (int i = 0; i < 4; ++i) alpha[i] = rng.uniform() < 0.6;
        const double gamma_before = lyapunov_value(q);
        Vec q_next = q;
        for (int i = 0; i < 4; ++i) q_next[i] = queue_update(q[i], alpha[i], cost[i], c_max);
        const double drift = lyapunov_value(q_next) - gamma_before;
        double bound = drift_bound_const(alpha, cost, c_max);
        for (int i = 0; i < 4; ++i) bound += q[i] * ((alpha[i] ? cost[i] : 0.0) - c_max);
        CHECK(drift <= bound + 1e-12);
        q = q_next;
    }
}

TEST_CASE("stability check: idle policy is trivially stable, greedy overload is flagged") {
    Mat idle = Mat::Zero(200, 2);
    const auto rep_idle = queue_stability_check(idle, 1.0, 0.01, 0.05);
    CHECK(rep_idle.telescoping_ok);
    CHECK(rep_idle.satisfied);
    CHECK(rep_idle.mean_queue_rate.maxCoeff() == 0.0);
    CHECK(rep_idle.avg_cost.maxCoeff() == 0.0);

    // Always transmit with c > c_max: Q grows linearly with slope c - c_max.
    const double c = 2.0, c_max = 1.0;
    const int slots = 400;
    Mat greedy = Mat::Constant(slots, 1, c);
    const auto rep = queue_stability_check(greedy, c_max, 0.01, 0.05);
    CHECK(rep.telescoping_ok);
    // Q(T) = T c - (T-1) c_max exactly under the deterministic recursion.
    CHECK(rep.mean_queue_rate[0] == doctest::Approx((slots * c - (slots - 1) * c_max) / slots).epsilon(1e-12));
    CHECK(rep.avg_cost[0] == doctest::Approx(c));
    CHECK_FALSE(rep.stable[0]);  // linear growth flagged as unstable
}

TEST_CASE("queue telescoping inequality holds on random trajectories") {
    Rng rng(63);
    for (int trial = 0; trial < 20; ++trial) {
        Mat costs(300, 3);
        for (int t = 0; t < 300; ++t)
            for (int i = 0; i < 3; ++i) costs(t, i) = rng.uniform() < 0.4 ? 2.0 * rng.uniform() : 0.0;
        const auto rep = queue_stability_check(costs, 0.6, 0.01, 0.05);
        CHECK(rep.telescoping_ok);
    }
}

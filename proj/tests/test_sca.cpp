#include <doctest.h>

#include <cmath>
#include <functional>

#include "aois/rate.hpp"
#include "aois/sca.hpp"
#include "test_helpers.hpp"

using namespace aois;
using aois::testing::random_cmat;
using aois::testing::random_hpd;
using aois::testing::random_vec;

namespace {

double logdet_nat_oracle(const CMat& a) {
    return std::log(std::abs(a.determinant()));
}

// Test-only refined grid minimizer over [lo, hi]^n; +inf marks infeasible.
Vec grid_minimize(const std::function<double(const Vec&)>& f, Vec lo, Vec hi, int points, int passes) {
    const int n = static_cast<int>(lo.size());
    Vec best_x = 0.5 * (lo + hi);
    double best = f(best_x);
    for (int pass = 0; pass < passes; ++pass) {
        std::vector<int> idx(n, 0);
        Vec x(n);
        while (true) {
            for (int d = 0; d < n; ++d) x[d] = lo[d] + (hi[d] - lo[d]) * idx[d] / (points - 1);
            const double v = f(x);
            if (v < best) {
                best = v;
                best_x = x;
            }
            int d = 0;
            while (d < n && ++idx[d] == points) idx[d++] = 0;
            if (d == n) break;
        }
        const Vec width = (hi - lo) / (points - 1);
        lo = best_x - 1.2 * width;
        hi = best_x + 1.2 * width;
    }
    return best_x;
}

ScaContext make_context(const SemanticModel* model, std::vector<Vec> z, int n_rx, int n_tx,
                        std::vector<int> lengths, double sigma2, double p_max, double floor_scale,
                        uint64_t seed, int samples) {
    ScaContext ctx;
    ctx.model = model;
    ctx.z = std::move(z);
    ctx.lengths = std::move(lengths);
    const int users = ctx.num_users();
    Rng rng(seed);
    for (int i = 0; i < users; ++i) ctx.h.push_back(random_cmat(n_rx, n_tx, rng));
    ctx.sigma2 = Vec::Constant(users, sigma2);
    ctx.weights = Vec::Ones(users);
    ctx.p_max = p_max;
    // floor_scale < 1 keeps the rate floors loose relative to B T_max = 1.
    ctx.bandwidth_hz = 1.0 / floor_scale;
    ctx.t_max_s = 1.0;
    const int streams = std::min(n_rx, n_tx);
    for (int i = 0; i < users; ++i) {
        const int uses = (ctx.lengths[i] + streams - 1) / streams;
        Rng nrng(derive_seed(seed, {kRxNoiseTag, static_cast<uint64_t>(i)}));
        ctx.noise.push_back(draw_unit_noise(n_rx, samples * uses, nrng));
    }
    return ctx;
}

}  // namespace

TEST_CASE("the log-det minorizer is tight at the expansion point") {
    Rng rng(71);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform() * 3);
        const int d = 1 + static_cast<int>(rng.uniform() * 3);
        const CMat x0 = random_cmat(n, d, rng);
        const CMat y0 = random_hpd(n, rng);
        const double truth = logdet_nat_oracle(CMat::Identity(d, d) + x0.adjoint() * y0.inverse() * x0);
        CHECK(logdet_lower_bound(x0, y0, x0, y0) == doctest::Approx(truth).epsilon(1e-9));
    }
}

TEST_CASE("the minorizer lower-bounds the log-det on random perturbations") {
    Rng rng(72);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform() * 3);
        const int d = 1 + static_cast<int>(rng.uniform() * 3);
        const CMat x0 = random_cmat(n, d, rng);
        const CMat y0 = random_hpd(n, rng);
        const CMat x = random_cmat(n, d, rng);
        const CMat y = random_hpd(n, rng);
        const double truth = logdet_nat_oracle(CMat::Identity(d, d) + x.adjoint() * y.inverse() * x);
        const double bound = logdet_lower_bound(x, y, x0, y0);
        CHECK(truth - bound >= -1e-9);
    }
}

TEST_CASE("minorizer scalar spot check") {
    const CMat one = CMat::Constant(1, 1, 1.0);
    const CMat two = CMat::Constant(1, 1, 2.0);
    const double bound = logdet_lower_bound(two, one, one, one);
    CHECK(bound <= std::log(5.0) + 1e-12);
    CHECK(logdet_lower_bound(one, one, one, one) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("F1 matches its composed definition and F3/F4 are positive definite") {
    Rng rng(73);
    const CMat x0 = random_cmat(3, 2, rng);
    const CMat y0 = random_hpd(3, rng);
    const auto c = logdet_minorizer(x0, y0);
    const CMat f3 = y0 + x0 * x0.adjoint();
    const CMat f4 = CMat::Identity(2, 2) + x0.adjoint() * y0.inverse() * x0;
    const CMat f1 = f3.inverse() * x0 * f4 * x0.adjoint() * f3.inverse();
    CHECK((c.F1 - f1).norm() < 1e-12 * std::max(1.0, f1.norm()));
    CHECK((c.F3 - f3).norm() < 1e-12 * f3.norm());
    CHECK((c.F4 - f4).norm() < 1e-12 * f4.norm());
    Eigen::SelfAdjointEigenSolver<CMat> es3(0.5 * (c.F3 + c.F3.adjoint()));
    Eigen::SelfAdjointEigenSolver<CMat> es4(0.5 * (c.F4 + c.F4.adjoint()));
    CHECK(es3.eigenvalues().minCoeff() > 0.0);
    CHECK(es4.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("rate surrogate: tight at the expansion point, minorizing elsewhere") {
    Rng rng(74);
    const int users = 2, n_rx = 2, n_tx = 3, d = 2;
    for (int trial = 0; trial < 20; ++trial) {
        const CMat h = random_cmat(n_rx, n_tx, rng);
        std::vector<CMat> v_now = {random_cmat(n_tx, d, rng), random_cmat(n_tx, d, rng)};
        const CMat u = CMat::Identity(n_rx, n_rx) + 0.2 * random_cmat(n_rx, n_rx, rng);
        const double sigma2 = 0.7;
        for (int self = 0; self < users; ++self) {
            const auto s = build_surrogate_rate(h, v_now, u, sigma2, self);
            const double exact = mimo_rate(h, v_now, self, u, sigma2);
            CHECK(s.value(v_now) == doctest::Approx(exact).epsilon(1e-8));
            for (int k = 0; k < 5; ++k) {
                std::vector<CMat> v = {random_cmat(n_tx, d, rng), random_cmat(n_tx, d, rng)};
                CHECK(s.value(v) <= mimo_rate(h, v, self, u, sigma2) + 1e-8);
            }
        }
    }
}

TEST_CASE("receive-side surrogate: tight and minorizing in U") {
    Rng rng(75);
    const int n_rx = 2, n_tx = 3, d = 2;
    for (int trial = 0; trial < 20; ++trial) {
        const CMat h = random_cmat(n_rx, n_tx, rng);
        std::vector<CMat> v = {random_cmat(n_tx, d, rng), random_cmat(n_tx, d, rng)};
        const CMat u_now = CMat::Identity(n_rx, n_rx) + 0.2 * random_cmat(n_rx, n_rx, rng);
        const double sigma2 = 0.5;
        const auto s = build_surrogate_rate_u(h, v, u_now, sigma2, 0);
        const double exact = mimo_rate(h, v, 0, u_now, sigma2);
        std::vector<CMat> w = {u_now};
        // Single-variable layout: re-index before evaluating.
        QuadConstraint form = s.form;
        form.lin_var = 0;
        for (auto& q : form.quads) q.var = 0;
        CHECK(form.value(w) == doctest::Approx(exact).epsilon(1e-8));
        for (int k = 0; k < 5; ++k) {
            std::vector<CMat> wu = {u_now + 0.5 * random_cmat(n_rx, n_rx, rng)};
            CHECK(form.value(wu) <= mimo_rate(h, v, 0, wu[0], sigma2) + 1e-8);
        }
    }
}

TEST_CASE("V subproblem: zero gradient and no floors returns the start point") {
    Rng rng(76);
    std::vector<CMat> v_now = {0.4 * random_cmat(3, 2, rng)};
    std::vector<CMat> zero_grad = {CMat::Zero(3, 2)};
    const auto v = solve_v_subproblem(zero_grad, {}, 10.0, Vec::Zero(1), v_now);
    CHECK((v[0] - v_now[0]).norm() == 0.0);
}

TEST_CASE("V subproblem: matched-direction closed form at full power") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const CMat a = random_cmat(3, 2, rng);
        // minimize -Re<a, V> : optimum is sqrt(P) a / ||a||.
        std::vector<CMat> grad = {-a};
        const double p_max = 4.0;
        std::vector<CMat> start = {CMat::Zero(3, 2)};
        const auto v = solve_v_subproblem(grad, {}, p_max, Vec::Zero(1), start);
        const CMat expect = std::sqrt(p_max) * a / a.norm();
        CHECK((v[0] - expect).norm() < 1e-4 * expect.norm());
    }
}

TEST_CASE("V subproblem matches a refined grid search") {
    Rng rng(78);
    const int n_tx = 2, d = 1, users = 2;
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<CMat> v_now = {0.3 * random_cmat(n_tx, d, rng), 0.3 * random_cmat(n_tx, d, rng)};
        std::vector<CMat> grad = {random_cmat(n_tx, d, rng), random_cmat(n_tx, d, rng)};
        const CMat h0 = random_cmat(1, n_tx, rng), h1 = random_cmat(1, n_tx, rng);
        const double sigma2 = 0.5, p_max = 2.0;
        std::vector<RateSurrogate> sur = {build_surrogate_rate(h0, v_now, CMat::Identity(1, 1), sigma2, 0),
                                          build_surrogate_rate(h1, v_now, CMat::Identity(1, 1), sigma2, 1)};
        // Loose floors well below the expansion rates keep the set full-dimensional.
        Vec floors(2);
        floors << 0.25 * sur[0].value(v_now), 0.25 * sur[1].value(v_now);

        const auto v = solve_v_subproblem(grad, sur, p_max, floors, v_now);
        double obj_solver = 0.0;
        for (int m = 0; m < users; ++m) obj_solver += grad[m].cwiseProduct(v[m].conjugate()).sum().real();

        auto unpack = [&](const Vec& x) {
            std::vector<CMat> w = {CMat(n_tx, d), CMat(n_tx, d)};
            for (int m = 0; m < users; ++m)
                for (int r = 0; r < n_tx; ++r) w[m](r, 0) = cplx(x[4 * m + 2 * r], x[4 * m + 2 * r + 1]);
            return w;
        };
        auto f = [&](const Vec& x) {
            const auto w = unpack(x);
            double p = 0.0;
            for (const auto& m : w) p += m.squaredNorm();
            if (p > p_max) return 1e300;
            if (sur[0].value(w) < floors[0] || sur[1].value(w) < floors[1]) return 1e300;
            double obj = 0.0;
            for (int m = 0; m < users; ++m) obj += grad[m].cwiseProduct(w[m].conjugate()).sum().real();
            return obj;
        };
        const double r = std::sqrt(p_max);
        const Vec best = grid_minimize(f, Vec::Constant(8, -r), Vec::Constant(8, r), 7, 4);
        const double obj_grid = f(best);
        CHECK(obj_solver <= obj_grid + 1e-3);
        // Solver point must be feasible for its own constraints.
        double p = 0.0;
        for (const auto& m : v) p += m.squaredNorm();
        CHECK(p <= p_max + 1e-8);
        CHECK(sur[0].value(v) >= floors[0] - 1e-8);
        CHECK(sur[1].value(v) >= floors[1] - 1e-8);
    }
}

TEST_CASE("V subproblem reports the violating user when floors cannot be met") {
    Rng rng(79);
    std::vector<CMat> v_now = {0.1 * random_cmat(2, 1, rng)};
    const CMat h = 0.05 * random_cmat(1, 2, rng);
    std::vector<RateSurrogate> sur = {build_surrogate_rate(h, v_now, CMat::Identity(1, 1), 1.0, 0)};
    Vec floors(1);
    floors << 50.0;  // far beyond any achievable surrogate rate at p_max = 1
    std::vector<CMat> grad = {CMat::Zero(2, 1)};
    CHECK_THROWS_WITH_AS(solve_v_subproblem(grad, sur, 1.0, floors, v_now),
                         doctest::Contains("user 0"), InfeasibleError);
}

TEST_CASE("U subproblem: zero gradient returns the start, scalar case matches grid") {
    Rng rng(80);
    std::vector<CMat> u_now = {CMat::Identity(2, 2)};
    std::vector<CMat> zero = {CMat::Zero(2, 2)};
    std::vector<CMat> v = {random_cmat(3, 2, rng)};
    const CMat h = random_cmat(2, 3, rng);
    std::vector<RateSurrogate> sur = {build_surrogate_rate_u(h, v, u_now[0], 0.5, 0)};
    const auto u = solve_u_subproblem(zero, sur, Vec::Zero(1), u_now);
    CHECK((u[0] - u_now[0]).norm() == 0.0);

    // Scalar receiver: compare with a 2-D refined grid on (Re u, Im u).
    for (int trial = 0; trial < 5; ++trial) {
        const CMat h1 = random_cmat(1, 2, rng);
        std::vector<CMat> v1 = {random_cmat(2, 1, rng)};
        const CMat u0 = CMat::Constant(1, 1, cplx(1.0, 0.0));
        const auto s = build_surrogate_rate_u(h1, v1, u0, 0.5, 0);
        Vec floor(1);
        floor << 0.5 * mimo_rate(h1, v1, 0, u0, 0.5);
        std::vector<CMat> c = {random_cmat(1, 1, rng)};
        const auto got = solve_u_subproblem(c, {s}, floor, {u0}, /*trust_radius=*/50.0);

        QuadConstraint form = s.form;
        form.lin_var = 0;
        for (auto& q : form.quads) q.var = 0;
        auto f = [&](const Vec& x) {
            std::vector<CMat> w = {CMat::Constant(1, 1, cplx(x[0], x[1]))};
            if (form.value(w) < floor[0]) return 1e300;
            return c[0].cwiseProduct(w[0].conjugate()).sum().real();
        };
        const Vec best = grid_minimize(f, Vec::Constant(2, -6.0), Vec::Constant(2, 6.0), 41, 8);
        const double obj_grid = f(best);
        const double obj_solver = c[0].cwiseProduct(got[0].conjugate()).sum().real();
        CHECK(obj_solver <= obj_grid + 1e-6);
        std::vector<CMat> wgot = {got[0]};
        CHECK(form.value(wgot) >= floor[0] - 1e-8);
    }
}

TEST_CASE("U subproblem feasibility audit on random instances") {
    Rng rng(81);
    for (int trial = 0; trial < 100; ++trial) {
        const CMat h = random_cmat(2, 3, rng);
        std::vector<CMat> v = {random_cmat(3, 2, rng), random_cmat(3, 2, rng)};
        std::vector<CMat> u_now = {CMat::Identity(2, 2), CMat::Identity(2, 2)};
        std::vector<RateSurrogate> sur;
        Vec floors(2);
        for (int i = 0; i < 2; ++i) {
            sur.push_back(build_surrogate_rate_u(h, v, u_now[i], 0.6, i));
            std::vector<CMat> w = {u_now[i]};
            QuadConstraint form = sur.back().form;
            form.lin_var = 0;
            for (auto& q : form.quads) q.var = 0;
            floors[i] = 0.8 * form.value(w);
        }
        std::vector<CMat> grads = {0.3 * random_cmat(2, 2, rng), 0.3 * random_cmat(2, 2, rng)};
        const auto u = solve_u_subproblem(grads, sur, floors, u_now);
        for (int i = 0; i < 2; ++i) {
            QuadConstraint form = sur[i].form;
            form.lin_var = 0;
            for (auto& q : form.quads) q.var = 0;
            std::vector<CMat> w = {u[i]};
            CHECK(form.value(w) >= floors[i] - 1e-8);
        }
    }
}

TEST_CASE("sca_iterate with zero step is a fixed point and preserves power feasibility") {
    const auto model = SemanticModel::make(4, 8, 3, 82);
    Rng zr(83);
    std::vector<Vec> z = {random_vec(4, zr), random_vec(4, zr)};
    auto ctx = make_context(&model, z, 2, 3, {8, 8}, 0.4, 3.0, 0.1, 84, 8);
    BeamformerSet bf = BeamformerSet::matched_init(ctx.h, 2, ctx.p_max);

    const BeamformerSet fixed = sca_iterate(ctx, bf, 0.0);
    for (int i = 0; i < 2; ++i) {
        CHECK((fixed.V[i] - bf.V[i]).norm() == 0.0);
        CHECK((fixed.U[i] - bf.U[i]).norm() == 0.0);
    }

    BeamformerSet cur = bf;
    for (int n = 0; n < 4; ++n) {
        cur = sca_iterate(ctx, cur, 1.0 / (1.0 + n));
        CHECK(cur.total_power() <= ctx.p_max + 1e-8);
    }
}

TEST_CASE("sca_optimize descends and keeps iterates feasible") {
    const auto model = SemanticModel::make(4, 8, 3, 85);
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng zr(derive_seed(86, {seed}));
        std::vector<Vec> z = {random_vec(4, zr), random_vec(4, zr)};
        auto ctx = make_context(&model, z, 2, 3, {8, 8}, 0.3, 3.0, 0.1, derive_seed(87, {seed}), 16);
        ScaOptions opt;
        opt.max_iters = 8;
        const auto res = sca_optimize(ctx, BeamformerSet::matched_init(ctx.h, 2, ctx.p_max), opt);
        REQUIRE(res.trace.size() >= 2);
        CHECK(res.trace.back().objective <= res.trace.front().objective + 1e-9);
        for (const auto& row : res.trace) {
            CHECK(row.power <= ctx.p_max + 1e-8);
            for (int i = 0; i < 2; ++i) CHECK(row.r_tilde[i] <= row.r_true[i] + 1e-8);
        }
    }
}

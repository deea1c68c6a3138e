#include "aois/sca.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>

#include "aois/rate.hpp"

namespace aois {

namespace {

constexpr double kLn2 = std::numbers::ln2;

double logdet_nat(const CMat& a_raw, const char* what) {
    const CMat a = 0.5 * (a_raw + a_raw.adjoint());
    Eigen::LLT<CMat> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": matrix not positive definite");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::log(llt.matrixLLT()(i, i).real());
    return 2.0 * acc;
}

CMat hpd_inverse(const CMat& a_raw, const char* what) {
    const CMat a = 0.5 * (a_raw + a_raw.adjoint());
    Eigen::LLT<CMat> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": singular expansion matrix");
    return llt.solve(CMat::Identity(a.rows(), a.cols()));
}

LinkInstance make_link(const ScaContext& ctx, const BeamformerSet& bf, int self,
                       const std::vector<CVec>& symbols) {
    LinkInstance link;
    link.h = ctx.h[self];
    link.sigma2 = ctx.sigma2[self];
    link.V = bf.V;
    link.x = symbols;
    link.self = self;
    link.U = bf.U[self];
    return link;
}

std::vector<CVec> encode_all(const ScaContext& ctx) {
    std::vector<CVec> symbols(ctx.num_users());
    for (int i = 0; i < ctx.num_users(); ++i) symbols[i] = encode(*ctx.model, ctx.z[i], ctx.lengths[i]);
    return symbols;
}

}  // namespace

SurrogateCoefficients logdet_minorizer(const CMat& x0, const CMat& y0) {
    SurrogateCoefficients c;
    c.X0 = x0;
    c.Y0 = y0;
    const CMat y0_inv = hpd_inverse(y0, "minorizer");
    c.F3 = y0 + x0 * x0.adjoint();
    c.F4 = CMat::Identity(x0.cols(), x0.cols()) + x0.adjoint() * y0_inv * x0;
    const CMat f3_inv = hpd_inverse(c.F3, "minorizer");
    c.F1 = f3_inv * x0 * c.F4 * x0.adjoint() * f3_inv;
    c.F2 = 2.0 * c.F4 * x0.adjoint() * f3_inv;
    c.const_term = logdet_nat(c.F4, "minorizer") - (x0.adjoint() * y0_inv * x0).trace().real();
    return c;
}

double logdet_lower_bound(const CMat& x, const CMat& y, const CMat& x0, const CMat& y0) {
    const SurrogateCoefficients c = logdet_minorizer(x0, y0);
    const CMat yxx = y + x * x.adjoint();
    return -(c.F1 * yxx).trace().real() + (c.F2 * x).trace().real() + c.const_term;
}

RateSurrogate build_surrogate_rate(const CMat& h, const std::vector<CMat>& v_now, const CMat& u,
                                   double sigma2, int self) {
    const Eigen::Index n_rx = h.rows();
    const CMat a = u.adjoint() * h;  // N_r x N_t
    const CMat x0 = a * v_now[self];
    CMat y0 = sigma2 * CMat::Identity(n_rx, n_rx);
    for (int m = 0; m < static_cast<int>(v_now.size()); ++m) {
        if (m == self || v_now[m].size() == 0) continue;
        const CMat g = a * v_now[m];
        y0 += g * g.adjoint();
    }

    RateSurrogate s;
    s.self = self;
    s.coef = logdet_minorizer(x0, y0);

    const CMat quad_left = (a.adjoint() * s.coef.F1 * a) / kLn2;  // shared by every V_m
    s.form.offset = (s.coef.const_term - sigma2 * s.coef.F1.trace().real()) / kLn2;
    s.form.lin_var = self;
    s.form.lin = (s.coef.F2 * a).adjoint() / kLn2;  // Re tr(F2 a V_self)
    for (int m = 0; m < static_cast<int>(v_now.size()); ++m) {
        if (v_now[m].size() == 0) continue;
        s.form.quads.push_back({m, quad_left, CMat::Identity(v_now[m].cols(), v_now[m].cols())});
    }
    s.form.name = "rate floor of user " + std::to_string(self);
    return s;
}

RateSurrogate build_surrogate_rate_u(const CMat& h, const std::vector<CMat>& v, const CMat& u_now,
                                     double sigma2, int self) {
    const Eigen::Index n_rx = h.rows();
    const CMat g_self = h * v[self];
    const CMat x0 = u_now.adjoint() * g_self;
    CMat y0 = sigma2 * CMat::Identity(n_rx, n_rx);
    CMat k_sum = CMat::Zero(n_rx, n_rx);  // sum_m G_m G_m^H
    for (int m = 0; m < static_cast<int>(v.size()); ++m) {
        if (v[m].size() == 0) continue;
        const CMat g = h * v[m];
        k_sum += g * g.adjoint();
        if (m != self) {
            const CMat gu = u_now.adjoint() * g;
            y0 += gu * gu.adjoint();
        }
    }

    RateSurrogate s;
    s.self = self;
    s.coef = logdet_minorizer(x0, y0);
    s.form.offset = (s.coef.const_term - sigma2 * s.coef.F1.trace().real()) / kLn2;
    s.form.lin_var = self;
    s.form.lin = g_self * s.coef.F2;  // Re tr(F2 U^H G_self) = Re tr(lin^H U)
    s.form.lin /= kLn2;
    s.form.quads.push_back({self, k_sum / kLn2, s.coef.F1});
    s.form.name = "rate floor of user " + std::to_string(self);
    return s;
}

std::vector<CMat> solve_v_subproblem(const std::vector<CMat>& objective_grad,
                                     const std::vector<RateSurrogate>& surrogates, double p_max,
                                     const Vec& rate_floors, const std::vector<CMat>& v_now,
                                     const QcqpOptions& opt) {
    std::vector<QuadConstraint> cons;
    cons.reserve(surrogates.size());
    for (std::size_t i = 0; i < surrogates.size(); ++i) {
        QuadConstraint c = surrogates[i].form;
        c.floor = rate_floors[surrogates[i].self];
        cons.push_back(std::move(c));
    }
    QcqpResult res = minimize_linear_qcqp(objective_grad, cons, p_max, nullptr, 0.0, v_now, opt);
    if (!res.feasible) {
        const std::string who = res.worst_constraint >= 0 ? cons[res.worst_constraint].name : "power budget";
        throw InfeasibleError("solve_v_subproblem: no feasible point, violating " + who + " by " +
                              std::to_string(res.max_violation));
    }
    return std::move(res.w);
}

std::vector<CMat> solve_u_subproblem(const std::vector<CMat>& objective_grad_u,
                                     const std::vector<RateSurrogate>& surrogates_u, const Vec& rate_floors,
                                     const std::vector<CMat>& u_now, double trust_radius,
                                     const QcqpOptions& opt) {
    // Each user's receive problem is independent; solve them one at a time.
    std::vector<CMat> result = u_now;
    for (const RateSurrogate& s : surrogates_u) {
        const int i = s.self;
        QuadConstraint c = s.form;
        c.floor = rate_floors[i];
        // Re-index to the single-variable problem.
        c.lin_var = 0;
        for (auto& q : c.quads) q.var = 0;
        std::vector<CMat> grad{objective_grad_u[i]};
        std::vector<CMat> start{u_now[i]};
        QcqpResult res = minimize_linear_qcqp(grad, {c}, kNoBall, &start, trust_radius, start, opt);
        if (!res.feasible)
            throw InfeasibleError("solve_u_subproblem: no feasible point for " + c.name + ", violation " +
                                  std::to_string(res.max_violation));
        result[i] = std::move(res.w[0]);
    }
    return result;
}

double sca_objective(const ScaContext& ctx, const BeamformerSet& bf) {
    const auto symbols = encode_all(ctx);
    double j = 0.0;
    for (int i = 0; i < ctx.num_users(); ++i) {
        const auto est = estimate_g(*ctx.model, ctx.z[i], make_link(ctx, bf, i, symbols), ctx.noise[i]);
        j += ctx.weights[i] * est.g;
    }
    return j;
}

BeamformerSet sca_iterate(const ScaContext& ctx, const BeamformerSet& current, double gamma,
                          const ScaOptions& opt) {
    const int users = ctx.num_users();
    const auto symbols = encode_all(ctx);

    Vec floors(users);
    for (int i = 0; i < users; ++i)
        floors[i] = ctx.lengths[i] / (ctx.bandwidth_hz * ctx.t_max_s);

    // Both subproblems are built at the current iterate, then the convex
    // combination is applied to V and U together.
    std::vector<CMat> grad_v(users), grad_u(users);
    for (int i = 0; i < users; ++i) grad_v[i] = CMat::Zero(current.V[i].rows(), current.V[i].cols());
    for (int i = 0; i < users; ++i) {
        const auto est = estimate_g(*ctx.model, ctx.z[i], make_link(ctx, current, i, symbols), ctx.noise[i],
                                    GradWrt::kBoth);
        for (int m = 0; m < users; ++m) grad_v[m] += ctx.weights[i] * est.grad_v[m];
        grad_u[i] = ctx.weights[i] * est.grad_u;
    }
    std::vector<RateSurrogate> sur_v(users), sur_u(users);
    for (int i = 0; i < users; ++i) {
        sur_v[i] = build_surrogate_rate(ctx.h[i], current.V, current.U[i], ctx.sigma2[i], i);
        sur_u[i] = build_surrogate_rate_u(ctx.h[i], current.V, current.U[i], ctx.sigma2[i], i);
    }

    const auto v_hat = solve_v_subproblem(grad_v, sur_v, ctx.p_max, floors, current.V, opt.qcqp);
    // The receive trust ball stays local so the linearization remains
    // meaningful; the subproblem set is otherwise only floor-bounded.
    double u_norm = 0.0;
    for (const auto& u : current.U) u_norm += u.squaredNorm();
    const double radius = std::min(opt.u_trust_radius, 2.0 * std::max(1.0, std::sqrt(u_norm)));
    // U never carries the floor enforcement beyond what the expansion point
    // certifies; the transmit constraint does. Keeps the set nonempty while
    // the start is still infeasible.
    Vec floors_u(users);
    for (int i = 0; i < users; ++i) floors_u[i] = std::min(floors[i], sur_u[i].value(current.U));
    const auto u_hat = solve_u_subproblem(grad_u, sur_u, floors_u, current.U, radius, opt.qcqp);

    // Eq.-style combination with a pullback: halve the step while the
    // common-noise objective would get worse.
    const double j_now = sca_objective(ctx, current);
    BeamformerSet best = current;
    double best_j = j_now;
    double step = gamma;
    for (int k = 0; k < 5 && step > 0.0; ++k, step *= 0.5) {
        BeamformerSet cand = current;
        for (int m = 0; m < users; ++m) {
            cand.V[m] = current.V[m] + step * (v_hat[m] - current.V[m]);
            cand.U[m] = current.U[m] + step * (u_hat[m] - current.U[m]);
        }
        const double j_cand = sca_objective(ctx, cand);
        if (j_cand < best_j) {
            best = std::move(cand);
            best_j = j_cand;
            break;
        }
    }
    return best;
}

ScaResult sca_optimize(const ScaContext& ctx, BeamformerSet init, const ScaOptions& opt) {
    ScaResult res;
    res.bf = std::move(init);

    const auto record = [&](int iter, const BeamformerSet& bf) {
        ScaTraceRow row;
        row.iter = iter;
        row.objective = sca_objective(ctx, bf);
        row.power = bf.total_power();
        row.r_tilde = Vec::Zero(ctx.num_users());
        row.r_true = Vec::Zero(ctx.num_users());
        for (int i = 0; i < ctx.num_users(); ++i) {
            const auto s = build_surrogate_rate(ctx.h[i], bf.V, bf.U[i], ctx.sigma2[i], i);
            row.r_tilde[i] = s.value(bf.V);
            row.r_true[i] = mimo_rate(ctx.h[i], bf.V, i, bf.U[i], ctx.sigma2[i]);
        }
        res.trace.push_back(std::move(row));
        return res.trace.back().objective;
    };

    double j_prev = record(0, res.bf);
    for (int n = 0; n < opt.max_iters; ++n) {
        const double gamma = opt.gamma0 / (1.0 + n);
        BeamformerSet next = sca_iterate(ctx, res.bf, gamma, opt);
        const double j_next = record(n + 1, next);
        res.bf = std::move(next);
        if (std::abs(j_next - j_prev) <= opt.tol_obj) {
            res.converged = true;
            j_prev = j_next;
            break;
        }
        j_prev = j_next;
    }
    res.objective = j_prev;
    return res;
}

}  // namespace aois

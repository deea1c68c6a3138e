#include "aois/qcqp.hpp"

#include <cmath>
#include <deque>

namespace aois {

namespace {

double dot_re(const std::vector<CMat>& a, const std::vector<CMat>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i].conjugate()).sum().real();
    return s;
}

double norm_sq(const std::vector<CMat>& a) {
    double s = 0.0;
    for (const auto& m : a) s += m.squaredNorm();
    return s;
}

void axpy(std::vector<CMat>& y, double alpha, const std::vector<CMat>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

struct Projector {
    double ball_radius_sq;
    const std::vector<CMat>* center;
    double trust_radius;

    void apply(std::vector<CMat>& w) const {
        if (std::isfinite(ball_radius_sq)) {
            const double n2 = norm_sq(w);
            if (n2 > ball_radius_sq) {
                const double s = std::sqrt(ball_radius_sq / n2);
                for (auto& m : w) m *= s;
            }
        } else if (center && std::isfinite(trust_radius)) {
            double n2 = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) n2 += (w[i] - (*center)[i]).squaredNorm();
            if (n2 > trust_radius * trust_radius) {
                const double s = trust_radius / std::sqrt(n2);
                for (std::size_t i = 0; i < w.size(); ++i) w[i] = (*center)[i] + s * (w[i] - (*center)[i]);
            }
        }
    }
};

}  // namespace

double QuadConstraint::value(const std::vector<CMat>& w) const {
    double v = offset;
    if (lin_var >= 0) v += lin.cwiseProduct(w[lin_var].conjugate()).sum().real();
    for (const QuadTerm& q : quads) v -= (w[q.var].adjoint() * q.left * w[q.var] * q.right).trace().real();
    return v;
}

void QuadConstraint::add_slack_grad(const std::vector<CMat>& w, double mult, std::vector<CMat>& grad) const {
    if (lin_var >= 0) grad[lin_var] -= mult * lin;
    for (const QuadTerm& q : quads) grad[q.var] += (2.0 * mult) * (q.left * w[q.var] * q.right);
}

QcqpResult minimize_linear_qcqp(const std::vector<CMat>& objective_grad,
                                const std::vector<QuadConstraint>& constraints, double ball_radius_sq,
                                const std::vector<CMat>* trust_center, double trust_radius,
                                std::vector<CMat> w0, const QcqpOptions& opt) {
    const int n_con = static_cast<int>(constraints.size());
    const Projector proj{ball_radius_sq, trust_center, trust_radius};
    proj.apply(w0);

    Vec lambda = Vec::Zero(n_con);
    double mu = opt.mu0;
    const double obj_scale = 1.0 + std::sqrt(norm_sq(objective_grad));

    const std::vector<CMat> w_start = w0;
    std::vector<CMat> w = std::move(w0);
    QcqpResult res;

    auto al_value = [&](const std::vector<CMat>& x) {
        double v = dot_re(objective_grad, x);
        for (int j = 0; j < n_con; ++j) {
            const double a = std::max(0.0, lambda[j] + mu * constraints[j].slack(x));
            v += (a * a - lambda[j] * lambda[j]) / (2.0 * mu);
        }
        return v;
    };
    auto al_grad = [&](const std::vector<CMat>& x) {
        std::vector<CMat> g = objective_grad;
        for (int j = 0; j < n_con; ++j) {
            const double a = std::max(0.0, lambda[j] + mu * constraints[j].slack(x));
            if (a > 0.0) constraints[j].add_slack_grad(x, a, g);
        }
        return g;
    };
    auto kkt_stationarity = [&](const std::vector<CMat>& x) {
        std::vector<CMat> g = objective_grad;
        for (int j = 0; j < n_con; ++j)
            if (lambda[j] > 0.0) constraints[j].add_slack_grad(x, lambda[j], g);
        std::vector<CMat> step = x;
        axpy(step, -1.0, g);
        proj.apply(step);
        axpy(step, -1.0, x);
        return std::sqrt(norm_sq(step)) / obj_scale;
    };

    // Inner solves: spectral projected gradient with a nonmonotone
    // (last-10) Armijo reference; robust under large mu.
    auto inner_solve = [&]() {
        double f = al_value(w);
        std::deque<double> recent{f};
        auto g = al_grad(w);
        double eta = 1.0 / std::max(1e-12, std::sqrt(norm_sq(g)));
        for (int it = 0; it < opt.max_inner; ++it) {
            ++res.inner_iterations;
            std::vector<CMat> cand;
            double f_cand = 0.0, step_sq = 0.0;
            const double f_ref = *std::max_element(recent.begin(), recent.end());
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                cand = w;
                axpy(cand, -eta, g);
                proj.apply(cand);
                std::vector<CMat> diff = cand;
                axpy(diff, -1.0, w);
                step_sq = norm_sq(diff);
                f_cand = al_value(cand);
                if (f_cand <= f_ref - 1e-4 * step_sq / std::max(eta, 1e-300)) {
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if (!accepted || step_sq == 0.0) break;

            auto g_next = al_grad(cand);
            // Barzilai-Borwein step for the next iterate.
            std::vector<CMat> dg = g_next;
            axpy(dg, -1.0, g);
            double sy = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                sy += (cand[i] - w[i]).cwiseProduct(dg[i].conjugate()).sum().real();
            const double bb = sy > 1e-300 ? step_sq / sy : 2.0 * eta;
            eta = std::clamp(bb, 1e-12, 1e8);

            w = std::move(cand);
            f = f_cand;
            g = std::move(g_next);
            recent.push_back(f);
            if (recent.size() > 10) recent.pop_front();
            // Unit-step projected-gradient residual.
            std::vector<CMat> r = w;
            axpy(r, -1.0, g);
            proj.apply(r);
            axpy(r, -1.0, w);
            if (std::sqrt(norm_sq(r)) <= 0.05 * opt.tol_kkt * obj_scale) break;
        }
    };

    double prev_violation = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        inner_solve();

        double violation = 0.0;
        int worst = -1;
        for (int j = 0; j < n_con; ++j) {
            const double s = constraints[j].slack(w);
            if (s > violation) {
                violation = s;
                worst = j;
            }
            lambda[j] = std::max(0.0, lambda[j] + mu * s);
        }
        res.max_violation = violation;
        res.worst_constraint = worst;

        const double stat = kkt_stationarity(w);
        double comp = 0.0;
        for (int j = 0; j < n_con; ++j) comp = std::max(comp, std::abs(lambda[j] * constraints[j].slack(w)));
        res.kkt_residual = std::max({stat, violation, comp / obj_scale});

        if (violation <= opt.tol_feas && res.kkt_residual <= opt.tol_kkt) break;
        if (violation > 0.3 * prev_violation) mu = std::min(mu * 4.0, opt.mu_max);
        prev_violation = std::max(violation, 1e-300);
    }

    // Residual violations at a constraint corner: restore feasibility by
    // pulling toward the start point when that point is feasible (the set
    // is convex, so the segment crosses into it).
    if (res.max_violation > opt.tol_feas) {
        auto max_slack = [&](const std::vector<CMat>& x) {
            double s = -std::numeric_limits<double>::infinity();
            for (const auto& c : constraints) s = std::max(s, c.slack(x));
            return s;
        };
        if (max_slack(w_start) <= 0.0) {
            double lo = 0.0, hi = 1.0;  // fraction toward the start
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                std::vector<CMat> cand = w;
                for (std::size_t i = 0; i < w.size(); ++i) cand[i] += mid * (w_start[i] - w[i]);
                (max_slack(cand) <= 0.5 * opt.tol_feas ? hi : lo) = mid;
            }
            for (std::size_t i = 0; i < w.size(); ++i) w[i] += hi * (w_start[i] - w[i]);
            double violation = 0.0;
            for (int j = 0; j < n_con; ++j) violation = std::max(violation, constraints[j].slack(w));
            res.max_violation = std::max(violation, 0.0);
            res.kkt_residual = std::max(res.kkt_residual, res.max_violation);
        }
    }

    res.w = std::move(w);
    res.lambda = lambda;
    res.objective = dot_re(objective_grad, res.w);
    res.feasible = res.max_violation <= 10.0 * opt.tol_feas;
    return res;
}

}  // namespace aois

#include "aois/zf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace aois {

namespace {

CMat gram_inverse(const CMat& h_stacked, const char* what) {
    const Eigen::Index users = h_stacked.cols();
    if (h_stacked.rows() < users)
        throw NumericalError(std::string(what) + ": more users than transmit antennas");
    const CMat gram = h_stacked.adjoint() * h_stacked;
    Eigen::JacobiSVD<CMat> svd(h_stacked);
    const double cond = svd.singularValues()(0) / svd.singularValues()(users - 1);
    if (!(svd.singularValues()(users - 1) > 0.0) || cond > 1e12) {
        std::ostringstream msg;
        msg << what << ": rank-deficient stacked channel (condition number " << cond << ")";
        throw NumericalError(msg.str());
    }
    return gram.llt().solve(CMat::Identity(users, users));
}

}  // namespace

CMat zf_matrix(const CMat& h_stacked, const Vec& power) {
    if (power.size() != h_stacked.cols()) throw std::invalid_argument("zf_matrix: power size mismatch");
    if ((power.array() < 0.0).any()) throw std::invalid_argument("zf_matrix: negative power");
    const CMat pinv_part = h_stacked * gram_inverse(h_stacked, "zf_matrix");
    return pinv_part * power.array().sqrt().matrix().cast<cplx>().asDiagonal();
}

Vec zf_power_weights(const CMat& h_stacked) {
    return gram_inverse(h_stacked, "zf_power_weights").diagonal().real();
}

Vec rate_floor_powers(const std::vector<int>& lengths, double bandwidth_hz, double t_max_s, const Vec& sigma2) {
    if (!(bandwidth_hz > 0.0) || !(t_max_s > 0.0))
        throw std::invalid_argument("rate_floor_powers: bandwidth and delay budget must be positive");
    Vec p0(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        if (lengths[i] < 0) throw std::invalid_argument("rate_floor_powers: negative length");
        p0[i] = sigma2[i] * (std::exp2(lengths[i] / (bandwidth_hz * t_max_s)) - 1.0);
    }
    return p0;
}

ZfState ZfState::make(const CMat& h_stacked, const std::vector<int>& lengths, double bandwidth_hz,
                      double t_max_s, const Vec& sigma2, double p_max, Vec q, CVec u) {
    ZfState s;
    s.h_stacked = h_stacked;
    s.h_vec = zf_power_weights(h_stacked);
    s.p0 = rate_floor_powers(lengths, bandwidth_hz, t_max_s, sigma2);
    s.q = std::move(q);
    s.u = std::move(u);
    s.p_max = p_max;
    s.refresh_power();
    return s;
}

void ZfState::refresh_power() { p = reparameterized_power(q, p0, h_vec, p_max); }

Vec reparameterized_power(const Vec& q, const Vec& p0, const Vec& h_vec, double p_max) {
    const double committed = h_vec.dot(p0);
    if (committed > p_max)
        throw InfeasibleError("reparameterized_power: rate-floor powers exceed the budget (h.p0 = " +
                              std::to_string(committed) + " > P_max = " + std::to_string(p_max) + ")");
    const Vec w = q.array().square();
    const double denom = h_vec.dot(w);
    if (!(denom > 0.0)) throw std::invalid_argument("reparameterized_power: q must have a nonzero entry");
    return p0 + (w / denom) * (p_max - committed);
}

Vec reparameterized_power_grad(const Vec& grad_p, const Vec& q, const Vec& p0, const Vec& h_vec, double p_max) {
    const Vec w = q.array().square();
    const double denom = h_vec.dot(w);
    const double surplus = p_max - h_vec.dot(p0);
    // dp_k/dq_j = 2 q_j (surplus/denom) (delta_kj - w_k h_j / denom)
    const double gw = grad_p.dot(w);
    Vec grad_q(q.size());
    for (Eigen::Index j = 0; j < q.size(); ++j)
        grad_q[j] = 2.0 * q[j] * (surplus / denom) * (grad_p[j] - h_vec[j] * gw / denom);
    return grad_q;
}

ZfOptResult optimize_zf(const ZfObjective& objective, Vec q_init, CVec u_init, const ZfOptOptions& opt,
                        const Vec* h_vec, const Vec* p0, double p_max) {
    const Eigen::Index nq = q_init.size();
    const Eigen::Index nu = u_init.size();
    Vec x(nq + 2 * nu);  // q then Re(u), Im(u)
    x.head(nq) = q_init;
    for (Eigen::Index i = 0; i < nu; ++i) {
        x[nq + 2 * i] = u_init[i].real();
        x[nq + 2 * i + 1] = u_init[i].imag();
    }

    auto unpack_u = [&](const Vec& v) {
        CVec u(nu);
        for (Eigen::Index i = 0; i < nu; ++i) u[i] = cplx(v[nq + 2 * i], v[nq + 2 * i + 1]);
        return u;
    };
    auto budget_residual = [&](const Vec& q) {
        if (!h_vec || !p0) return 0.0;
        return std::abs(h_vec->dot(reparameterized_power(q, *p0, *h_vec, p_max)) - p_max);
    };

    ZfOptResult res;
    res.q = q_init;
    res.u = u_init;
    {
        const auto ev = objective(q_init, u_init, false);
        res.objective = ev.value;
        res.trace.push_back({0, ev.value, budget_residual(q_init)});
    }

    Vec m = Vec::Zero(x.size()), v = Vec::Zero(x.size());
    for (int it = 1; it <= opt.iterations; ++it) {
        const Vec q = x.head(nq);
        const CVec u = unpack_u(x);
        const auto ev = objective(q, u, true);

        Vec grad(x.size());
        grad.head(nq) = ev.grad_q;
        for (Eigen::Index i = 0; i < nu; ++i) {
            grad[nq + 2 * i] = ev.grad_u[i].real();
            grad[nq + 2 * i + 1] = ev.grad_u[i].imag();
        }

        if (opt.adam) {
            m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
            v = opt.beta2 * v + (1.0 - opt.beta2) * grad.array().square().matrix();
            const double bc1 = 1.0 - std::pow(opt.beta1, it);
            const double bc2 = 1.0 - std::pow(opt.beta2, it);
            x -= (opt.step * (m / bc1).array() / ((v / bc2).array().sqrt() + opt.eps)).matrix();
        } else {
            x -= opt.step * grad;
        }

        const Vec q_next = x.head(nq);
        const CVec u_next = unpack_u(x);
        const auto next_val = objective(q_next, u_next, false);
        res.trace.push_back({it, next_val.value, budget_residual(q_next)});
        if (next_val.value < res.objective) {
            res.objective = next_val.value;
            res.q = q_next;
            res.u = u_next;
        }
    }
    return res;
}

}  // namespace aois

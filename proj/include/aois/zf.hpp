#pragma once

#include <functional>
#include <vector>

#include "aois/types.hpp"

namespace aois {

/// Zero-forcing precoder V = H (H^H H)^-1 sqrt(diag(p)) for stacked columns
/// H = [h_1 ... h_U] (N_t x U). Throws NumericalError for rank-deficient H.
CMat zf_matrix(const CMat& h_stacked, const Vec& power);

/// One slot's ZF design state: the stacked channel, the power cost weights,
/// the floor powers, and the (q, u) parameterization with its induced p.
struct ZfState {
    CMat h_stacked;  // N_t x U
    Vec h_vec;       // Re diag((H^H H)^-1)
    Vec p0;          // rate-floor powers
    Vec q;           // unconstrained reparameterization, nonzero
    CVec u;          // per-user receive scalars
    Vec p;           // induced powers: p >= p0, h_vec . p = P_max
    double p_max = 0.0;

    /// Builds the state and the induced power vector; throws
    /// InfeasibleError when the floors exceed the budget.
    static ZfState make(const CMat& h_stacked, const std::vector<int>& lengths, double bandwidth_hz,
                        double t_max_s, const Vec& sigma2, double p_max, Vec q, CVec u);

    /// Re-derives p from the current q.
    void refresh_power();
};

/// Per-user diagonal weights of the ZF power cost: real(diag((H^H H)^-1)),
/// so that total transmit power equals h_vec . p.
Vec zf_power_weights(const CMat& h_stacked);

/// Minimum powers meeting the per-user rate floors,
///   p0_i = sigma_i^2 (2^(L_i / (B T_max)) - 1);
/// the noise factor makes log2(1 + p_i / sigma_i^2) meet L_i / (B T_max)
/// and reduces to the unit-noise form when sigma^2 = 1.
Vec rate_floor_powers(const std::vector<int>& lengths, double bandwidth_hz, double t_max_s, const Vec& sigma2);

/// Power reparameterization: p = p0 + (q.*q) / (h . (q.*q)) * (P_max - h . p0).
/// Every output satisfies h . p = P_max exactly and p >= p0.
/// Throws InfeasibleError when h . p0 > P_max and std::invalid_argument for q = 0.
Vec reparameterized_power(const Vec& q, const Vec& p0, const Vec& h_vec, double p_max);

/// Objective value and gradient w.r.t. (q, u); u is the per-user receive
/// scalar. Gradients use the same packing as MismatchEstimate.
struct ZfObjectiveEval {
    double value = 0.0;
    Vec grad_q;
    CVec grad_u;
};
using ZfObjective = std::function<ZfObjectiveEval(const Vec& q, const CVec& u, bool want_grad)>;

struct ZfOptOptions {
    double step = 1e-2;
    int iterations = 500;
    bool adam = true;       // per-coordinate adaptive steps
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct ZfOptTraceRow {
    int iter;
    double objective;
    double budget_residual;  // |h . p - P_max|
};

struct ZfOptResult {
    Vec q;
    CVec u;
    double objective = 0.0;
    std::vector<ZfOptTraceRow> trace;
};

/// First-order minimization of an unconstrained objective in (q, u);
/// returns the best iterate seen. The budget residual per iterate is
/// recorded for the trace when h_vec/p0/P_max are supplied.
ZfOptResult optimize_zf(const ZfObjective& objective, Vec q_init, CVec u_init, const ZfOptOptions& opt,
                        const Vec* h_vec = nullptr, const Vec* p0 = nullptr, double p_max = 0.0);

/// Chain-rule helper: maps a gradient w.r.t. p through the Jacobian of
/// reparameterized_power, yielding the gradient w.r.t. q.
Vec reparameterized_power_grad(const Vec& grad_p, const Vec& q, const Vec& p0, const Vec& h_vec, double p_max);

}  // namespace aois

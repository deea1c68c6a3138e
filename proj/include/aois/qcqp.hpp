#pragma once

#include <limits>
#include <string>
#include <vector>

#include "aois/types.hpp"

namespace aois {

/// tr(W_var^H left W_var right); left and right are Hermitian PSD, so the
/// term is a convex real quadratic in W_var.
struct QuadTerm {
    int var;
    CMat left;
    CMat right;
};

/// Concave-quadratic floor constraint
///   offset + Re tr(lin^H W_lin_var) - sum_q tr(W^H left W right) >= floor.
struct QuadConstraint {
    double offset = 0.0;
    int lin_var = -1;  // -1: no linear term
    CMat lin;
    std::vector<QuadTerm> quads;
    double floor = 0.0;
    std::string name;

    double value(const std::vector<CMat>& w) const;
    /// slack s = floor - value; feasible iff s <= 0
    double slack(const std::vector<CMat>& w) const { return floor - value(w); }
    /// accumulates mult * d s / d W_v into grad
    void add_slack_grad(const std::vector<CMat>& w, double mult, std::vector<CMat>& grad) const;
};

struct QcqpOptions {
    double tol_kkt = 1e-6;
    double tol_feas = 1e-8;
    int max_outer = 60;
    int max_inner = 600;
    double mu0 = 10.0;
    double mu_max = 1e9;
};

struct QcqpResult {
    std::vector<CMat> w;
    Vec lambda;
    double objective = 0.0;
    double kkt_residual = 0.0;
    double max_violation = 0.0;
    bool feasible = false;
    int worst_constraint = -1;
    int inner_iterations = 0;
};

/// Minimizes the linear objective sum_v Re tr(C_v^H W_v) over the
/// intersection of the QuadConstraint floors with at most one of
///   - a power ball  sum_v ||W_v||_F^2 <= ball_radius_sq, or
///   - a trust ball   sum_v ||W_v - center_v||_F^2 <= trust_radius^2
/// via an augmented Lagrangian with projected-gradient inner solves.
/// Warm-started at w0; with a zero objective and no active constraints the
/// starting point is returned unchanged.
QcqpResult minimize_linear_qcqp(const std::vector<CMat>& objective_grad,
                                const std::vector<QuadConstraint>& constraints, double ball_radius_sq,
                                const std::vector<CMat>* trust_center, double trust_radius,
                                std::vector<CMat> w0, const QcqpOptions& opt = {});

inline constexpr double kNoBall = std::numeric_limits<double>::infinity();

}  // namespace aois

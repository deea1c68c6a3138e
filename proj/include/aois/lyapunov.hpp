#pragma once

#include <vector>

#include "aois/types.hpp"

namespace aois {

/// Virtual queues enforcing the average actuation-cost budget.
struct QueueState {
    Vec q;                // Q_i, starts at 0
    Vec cumulative_cost;  // sum_tau alpha_i(tau) c_i(tau)
    long slot_count = 0;
    Vec cost;       // c_i
    double c_max = 0.0;

    static QueueState init(const Vec& cost, double c_max);

    /// Applies one slot of decisions to every queue.
    void step(const std::vector<bool>& alpha);
};

/// max(Q - c_max, 0) + alpha * c.
double queue_update(double q, bool alpha, double cost, double c_max);

/// Quadratic congestion measure 0.5 * sum Q_i^2.
double lyapunov_value(const Vec& queues);

/// Action-dependent part of the drift-plus-penalty bound:
///   sum_i Q_i (alpha_i c_i - c_max) + omega * sum_i aois_i.
/// The action-independent constant is reported by drift_bound_const.
double dpp_objective(const Vec& queues, const std::vector<bool>& alpha, const Vec& cost, double c_max,
                     double omega, const Vec& aois_values);

/// B = sum_i ((alpha_i c_i)^2 + c_max^2) / 2 for the one-slot drift bound.
double drift_bound_const(const std::vector<bool>& alpha, const Vec& cost, double c_max);

struct QueueStabilityReport {
    Vec mean_queue_rate;  // Q_i(T) / T
    Vec avg_cost;         // (1/T) sum alpha_i c_i
    std::vector<bool> stable;    // Q_i(T)/T <= delta_stab * c_max
    bool telescoping_ok = true;  // pathwise Appendix-style inequality at every slot
    bool satisfied = false;      // stability implies the cost budget within tolerances
};

/// Post-processes a cost trajectory: per_slot_cost(t, i) = alpha_i(t) c_i(t).
/// Checks, slot by slot, that (1/t) sum cost - c_max <= Q_i(t)/t and reports
/// whether mean-rate stability (<= delta_stab * c_max) implies the budget
/// (<= c_max + delta_cost * c_max).
QueueStabilityReport queue_stability_check(const Mat& per_slot_cost, double c_max, double delta_stab, double delta_cost);

}  // namespace aois

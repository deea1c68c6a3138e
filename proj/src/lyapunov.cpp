#include "aois/lyapunov.hpp"

namespace aois {

double queue_update(double q, bool alpha, double cost, double c_max) {
    if (q < 0.0 || cost < 0.0 || c_max < 0.0) throw std::invalid_argument("queue_update: inputs must be >= 0");
    return std::max(q - c_max, 0.0) + (alpha ? cost : 0.0);
}

double lyapunov_value(const Vec& queues) { return 0.5 * queues.squaredNorm(); }

double dpp_objective(const Vec& queues, const std::vector<bool>& alpha, const Vec& cost, double c_max,
                     double omega, const Vec& aois_values) {
    double obj = 0.0;
    for (Eigen::Index i = 0; i < queues.size(); ++i)
        obj += queues[i] * ((alpha[i] ? cost[i] : 0.0) - c_max) + omega * aois_values[i];
    return obj;
}

double drift_bound_const(const std::vector<bool>& alpha, const Vec& cost, double c_max) {
    double b = 0.0;
    for (Eigen::Index i = 0; i < cost.size(); ++i) {
        const double ac = alpha[i] ? cost[i] : 0.0;
        b += 0.5 * (ac * ac + c_max * c_max);
    }
    return b;
}

QueueState QueueState::init(const Vec& cost, double c_max) {
    QueueState s;
    s.q = Vec::Zero(cost.size());
    s.cumulative_cost = Vec::Zero(cost.size());
    s.cost = cost;
    s.c_max = c_max;
    return s;
}

void QueueState::step(const std::vector<bool>& alpha) {
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        q[i] = queue_update(q[i], alpha[i], cost[i], c_max);
        if (alpha[i]) cumulative_cost[i] += cost[i];
    }
    ++slot_count;
}

QueueStabilityReport queue_stability_check(const Mat& per_slot_cost, double c_max, double delta_stab, double delta_cost) {
    const Eigen::Index slots = per_slot_cost.rows();
    const Eigen::Index users = per_slot_cost.cols();
    if (slots < 1) throw std::invalid_argument("queue_stability_check: empty trajectory");

    QueueStabilityReport rep;
    rep.mean_queue_rate = Vec::Zero(users);
    rep.avg_cost = Vec::Zero(users);

    Vec q = Vec::Zero(users);
    Vec running = Vec::Zero(users);
    for (Eigen::Index t = 0; t < slots; ++t) {
        for (Eigen::Index i = 0; i < users; ++i) {
            q[i] = std::max(q[i] - c_max, 0.0) + per_slot_cost(t, i);
            running[i] += per_slot_cost(t, i);
            // Rearranged telescoping of the queue recursion; Q(0) = 0.
            const double lhs = running[i] / static_cast<double>(t + 1) - c_max;
            const double rhs = q[i] / static_cast<double>(t + 1);
            if (lhs > rhs + 1e-12) rep.telescoping_ok = false;
        }
    }
    rep.mean_queue_rate = q / static_cast<double>(slots);
    rep.avg_cost = running / static_cast<double>(slots);

    rep.satisfied = true;
    rep.stable.resize(users);
    for (Eigen::Index i = 0; i < users; ++i) {
        rep.stable[i] = rep.mean_queue_rate[i] <= delta_stab * c_max;
        const bool within = rep.avg_cost[i] <= c_max + delta_cost * c_max;
        if (rep.stable[i] && !within) rep.satisfied = false;
    }
    return rep;
}

}  // namespace aois

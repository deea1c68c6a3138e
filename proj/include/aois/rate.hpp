#pragma once

#include <limits>
#include <vector>

#include "aois/types.hpp"

namespace aois {

/// Achievable rates and delays for one slot. delay_s carries +inf when the
/// corresponding rate is zero and the payload is not.
struct RateReport {
    Vec rate_bps_hz;
    Vec delay_s;
    std::vector<bool> feasible;  // delay_s[i] <= T_max
};

/// Per-user delays and delay-budget feasibility for given rates and payloads.
RateReport make_rate_report(const Vec& rates_bps_hz, const std::vector<int>& lengths, double bandwidth_hz,
                            double t_max_s);

/// Base-2 log-det rate of user `self` under linear receive combining:
///   log2 det(I + U^H H V_i V_i^H H^H U (sum_{j!=i} U^H H V_j V_j^H H^H U + s^2 I)^-1).
/// The interference-plus-noise matrix is Hermitian-cleaned before
/// factorization; throws NumericalError when it is not positive definite.
double mimo_rate(const CMat& h, const std::vector<CMat>& V, int self, const CMat& U, double sigma2);

/// Single-receive-antenna specialization:
///   log2(1 + |h^H v_i|^2 / (sum_{j!=i} |h^H v_j|^2 + s^2)).
double miso_rate(const CVec& h, const std::vector<CVec>& v, int self, double sigma2);

/// L / (B * rate) seconds; 0 when L == 0, +inf when rate == 0 and L > 0.
double transmission_delay(double symbols, double bandwidth_hz, double rate_bps_hz);

inline constexpr double kInfiniteDelay = std::numeric_limits<double>::infinity();

}  // namespace aois

#include "aois/aois_metric.hpp"

#include <cmath>

namespace aois {

double time_penalty(double t, double epsilon, double b) {
    if (t < epsilon) throw std::invalid_argument("time_penalty: t < epsilon violates the age invariant");
    if (!(b > 0.0)) throw std::invalid_argument("time_penalty: b must be positive");
    return std::exp(b * (t - epsilon));
}

double aois_value(double t, double epsilon, double b, double g) {
    if (g < 0.0 || g > 1.0) throw std::domain_error("aois_value: g must lie in [0, 1]");
    return time_penalty(t, epsilon, b) * g;
}

double mismatch(const SemanticModel& m, const Vec& z, const Vec& z_hat) {
    return std::clamp(1.0 - similarity(m, z, z_hat), 0.0, 1.0);
}

AoisState AoisState::warm_start(const SemanticModel& m, const std::vector<Vec>& z0) {
    AoisState st;
    const int users = static_cast<int>(z0.size());
    st.last_update_slot.assign(users, 0);
    st.z_hat.resize(users);
    st.current = Vec::Zero(users);
    const int full = m.max_len();
    for (int i = 0; i < users; ++i) st.z_hat[i] = decode(m, encode(m, z0[i], full), full);
    return st;
}

double evolve(AoisState& state, int user, int t, double b, const SemanticModel& m, const Vec& z_now,
              bool transmit, std::optional<double> g_tx, const std::optional<Vec>& z_hat_tx) {
    double value;
    if (transmit) {
        if (!g_tx || !z_hat_tx)
            throw std::invalid_argument("evolve: transmit requires the realized mismatch and recovered feature");
        state.last_update_slot[user] = t;
        state.z_hat[user] = *z_hat_tx;
        value = aois_value(t, t, b, *g_tx);  // age factor 1 at the decision slot
    } else {
        const double g = mismatch(m, z_now, state.z_hat[user]);
        value = aois_value(t, state.last_update_slot[user], b, g);
    }
    state.current[user] = value;
    return value;
}

}  // namespace aois

#pragma once

#include <optional>
#include <vector>

#include "aois/semantics.hpp"
#include "aois/types.hpp"

namespace aois {

/// Exponential staleness factor exp(b (t - epsilon)).
/// Throws std::invalid_argument when t < epsilon.
double time_penalty(double t, double epsilon, double b);

/// Age of incorrect semantics: f(t) * g, g in [0, 1].
double aois_value(double t, double epsilon, double b, double g);

/// Receiver-side memory per user: when the last accepted update happened and
/// what was recovered then.
struct AoisState {
    std::vector<int> last_update_slot;  // epsilon_i
    std::vector<Vec> z_hat;             // last recovered feature
    Vec current;                        // latest realized AoIS per user

    int num_users() const { return static_cast<int>(last_update_slot.size()); }

    /// All users start at epsilon = 0 holding a noiseless full-length
    /// decode of their slot-0 feature.
    static AoisState warm_start(const SemanticModel& m, const std::vector<Vec>& z0);
};

/// One user's slot transition. On transmit (alpha = 1) both the realized
/// mismatch g_tx and the recovered feature must be supplied; the age factor
/// resets to 1. On skip the stored feature is reused and the mismatch is
/// recomputed against the current source. Returns the realized AoIS.
double evolve(AoisState& state, int user, int t, double b, const SemanticModel& m, const Vec& z_now,
              bool transmit, std::optional<double> g_tx = std::nullopt,
              const std::optional<Vec>& z_hat_tx = std::nullopt);

/// Clamped mismatch 1 - Sim in [0, 1].
double mismatch(const SemanticModel& m, const Vec& z, const Vec& z_hat);

}  // namespace aois

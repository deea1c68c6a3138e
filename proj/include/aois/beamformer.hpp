#pragma once

#include <vector>

#include "aois/types.hpp"

namespace aois {

/// Transmit matrices V_i (N_t x d_i) and receive matrices U_i (N_r x N_r),
/// one pair per user. A user that does not transmit carries an all-zero V_i.
struct BeamformerSet {
    std::vector<CMat> V;
    std::vector<CMat> U;

    int num_users() const { return static_cast<int>(V.size()); }

    double total_power() const {
        double p = 0.0;
        for (const auto& v : V) p += v.squaredNorm();
        return p;
    }

    /// Matched-filter start: V_i spans the strongest receive directions of
    /// H_i, scaled so the power budget is met with equality; U_i = I.
    static BeamformerSet matched_init(const std::vector<CMat>& H, int streams, double p_max);
};

}  // namespace aois

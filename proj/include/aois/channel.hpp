#pragma once

#include <iosfwd>
#include <vector>

#include "aois/beamformer.hpp"
#include "aois/rng.hpp"
#include "aois/types.hpp"

namespace aois {

/// Per-slot downlink channel: one N_r x N_t matrix per user plus the
/// receiver noise variance. Matrices are immutable once constructed and
/// bit-identical across the slots of one fading block.
struct ChannelState {
    std::vector<CMat> per_user;  // H_i, N_r x N_t
    Vec noise_variance;          // sigma_i^2, linear watts
    Vec pathloss_db;             // large-scale loss applied to per_user (0 = none)
    int slot = 0;

    int num_users() const { return static_cast<int>(per_user.size()); }
};

/// i.i.d. CN(0,1) entries; deterministic for a given rng state.
CMat sample_block_fading(int n_rx, int n_tx, Rng& rng);

/// 3GPP-style urban macro loss: 128.1 + 37.6 log10(d[km]).
/// Throws std::domain_error for nonpositive distance.
double path_loss_db(double distance_km);

/// Thermal noise floor in watts from a PSD in dBm/Hz.
double noise_power_w(double bandwidth_hz, double psd_dbm_hz);

/// One channel use: y_i = H_i * sum_j V_j x_j + n_i, n_i ~ CN(0, sigma_i^2 I).
/// `symbols[j]` must match the column count of `bf.V[j]`.
std::vector<CVec> apply_downlink(const ChannelState& ch, const BeamformerSet& bf,
                                 const std::vector<CVec>& symbols, Rng& rng);

/// Regression-fixture CSV with header "slot,user,row,col,re,im".
void export_channel_trace(std::ostream& out, const std::vector<ChannelState>& trace);
std::vector<ChannelState> import_channel_trace(std::istream& in);

}  // namespace aois

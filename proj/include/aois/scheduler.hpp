#pragma once

#include <functional>
#include <vector>

#include "aois/aois_metric.hpp"
#include "aois/beamformer.hpp"
#include "aois/channel.hpp"
#include "aois/config.hpp"
#include "aois/lyapunov.hpp"
#include "aois/sca.hpp"
#include "aois/semantics.hpp"
#include "aois/zf.hpp"

namespace aois {

struct AlphaSearchResult {
    std::vector<bool> alpha;
    double objective = 0.0;
};

/// Exhaustive minimization of sum_i Q_i (alpha_i c_i - c_max) + omega *
/// sum_i aois_i(alpha_i) over all 2^U vectors. Exact ties prefer fewer
/// transmissions. Refuses U beyond `cap` (2^U blowup).
AlphaSearchResult search_alpha(const Vec& queues, const Vec& cost, double c_max, double omega,
                               const Vec& aois_if_tx, const Vec& aois_if_skip, int cap = 16);

struct LengthSearchResult {
    std::vector<int> lengths;
    std::vector<bool> feasible;
    double objective = 0.0;
};

/// Per-user scan over the length set minimizing objective(user, L) subject
/// to rate_i >= L / (B T_max). Users with no feasible length get the
/// smallest one flagged infeasible. The objective must be separable per
/// user, which the joint-enumeration test oracle witnesses.
LengthSearchResult search_lengths(const std::function<double(int user, int length)>& objective,
                                  const Vec& rates, double bandwidth_hz, double t_max_s,
                                  const std::vector<int>& length_set);

/// Everything ao_round needs to decide one slot.
struct SlotContext {
    const SystemConfig* cfg = nullptr;
    Mode mode = Mode::kZf;
    const SemanticModel* model = nullptr;
    const ChannelState* channel = nullptr;
    std::vector<Vec> z;          // current features, all users
    const AoisState* aois = nullptr;
    const QueueState* queues = nullptr;
    int slot = 0;
    uint64_t mc_seed = 0;  // common-random-number stream for this slot
};

struct SlotDecision {
    std::vector<bool> alpha;
    std::vector<int> lengths;
    BeamformerSet bf;            // V zeroed for silent users
    Vec rates;                   // exact per-user rate at the final design
    double objective = 0.0;      // DPP objective of the chosen action
    bool feasible = true;
    std::vector<double> round_objectives;  // accepted objective after each AO round
    std::vector<ScaTraceRow> sca_trace;
    std::vector<ZfOptTraceRow> zf_trace;
};

/// One alternating-optimization round sequence for the slot, in the order
/// each algorithm prescribes (SCA: actuation, beamformers, lengths; ZF:
/// beamformers, actuation, lengths), repeated up to cfg.ao.max_rounds until
/// the DPP objective stalls.
SlotDecision ao_round(const SlotContext& ctx);

/// Dispatches on ctx.mode: the optimizing modes run ao_round, the
/// always/never baselines pick fixed actuation with an unoptimized design.
SlotDecision decide_slot(const SlotContext& ctx);

}  // namespace aois

#include "aois/scheduler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "aois/rate.hpp"

namespace aois {

AlphaSearchResult search_alpha(const Vec& queues, const Vec& cost, double c_max, double omega,
                               const Vec& aois_if_tx, const Vec& aois_if_skip, int cap) {
    const int users = static_cast<int>(queues.size());
    if (users > cap)
        throw ConfigError("search_alpha: " + std::to_string(users) + " users exceeds the exhaustive-search cap of " +
                          std::to_string(cap) + " (2^U candidates); raise alpha_search_cap only deliberately");

    AlphaSearchResult best;
    int best_popcount = users + 1;
    uint32_t best_mask = 0;
    for (uint32_t mask = 0; mask < (1u << users); ++mask) {
        double obj = 0.0;
        for (int i = 0; i < users; ++i) {
            const bool tx = mask & (1u << i);
            obj += queues[i] * ((tx ? cost[i] : 0.0) - c_max) + omega * (tx ? aois_if_tx[i] : aois_if_skip[i]);
        }
        const int pc = std::popcount(mask);
        const bool better = best.alpha.empty() || obj < best.objective ||
                            (obj == best.objective && (pc < best_popcount || (pc == best_popcount && mask < best_mask)));
        if (better) {
            best.objective = obj;
            best.alpha.assign(users, false);
            for (int i = 0; i < users; ++i) best.alpha[i] = mask & (1u << i);
            best_popcount = pc;
            best_mask = mask;
        }
    }
    return best;
}

LengthSearchResult search_lengths(const std::function<double(int user, int length)>& objective,
                                  const Vec& rates, double bandwidth_hz, double t_max_s,
                                  const std::vector<int>& length_set) {
    if (length_set.empty()) throw ConfigError("search_lengths: empty length set");
    std::vector<int> sorted = length_set;
    std::sort(sorted.begin(), sorted.end());

    const int users = static_cast<int>(rates.size());
    LengthSearchResult res;
    res.lengths.resize(users);
    res.feasible.assign(users, true);
    for (int i = 0; i < users; ++i) {
        double best_obj = 0.0;
        int best_len = -1;
        for (int l : sorted) {
            if (rates[i] < l / (bandwidth_hz * t_max_s)) continue;
            const double obj = objective(i, l);
            if (best_len < 0 || obj < best_obj) {
                best_obj = obj;
                best_len = l;
            }
        }
        if (best_len < 0) {
            res.lengths[i] = sorted.front();
            res.feasible[i] = false;
        } else {
            res.lengths[i] = best_len;
            res.objective += best_obj;
        }
    }
    return res;
}

namespace {

// Master CRN noise per user covers the longest configured payload; shorter
// candidates reuse the leading channel uses of every sample so branches are
// compared on common draws.
struct SlotNoise {
    std::vector<CMat> master;  // per user, N_r x (samples * uses_cap)
    int samples = 0;
    int uses_cap = 0;

    CMat slice(int user, int uses) const {
        CMat out(master[user].rows(), samples * uses);
        for (int s = 0; s < samples; ++s)
            out.middleCols(s * uses, uses) = master[user].middleCols(s * uses_cap, uses);
        return out;
    }
};

int uses_for(int length, int streams) { return (length + streams - 1) / streams; }

struct Workspace {
    const SlotContext& ctx;
    const SystemConfig& cfg;
    int users;
    int streams;
    SlotNoise noise;
    Vec skip_aois;          // exp(b age) * g against the stored feature
    std::vector<int> min_lengths;

    explicit Workspace(const SlotContext& c) : ctx(c), cfg(*c.cfg) {
        users = cfg.num_users;
        streams = cfg.streams();
        noise.samples = cfg.mc_samples;
        noise.uses_cap = uses_for(*std::max_element(cfg.symbol_length_set.begin(), cfg.symbol_length_set.end()),
                                  streams);
        noise.master.resize(users);
        for (int i = 0; i < users; ++i) {
            Rng r(derive_seed(ctx.mc_seed, {kRxNoiseTag, static_cast<uint64_t>(i)}));
            noise.master[i] = draw_unit_noise(cfg.n_rx, noise.samples * noise.uses_cap, r);
        }
        skip_aois = Vec::Zero(users);
        for (int i = 0; i < users; ++i) {
            const double g = mismatch(*ctx.model, ctx.z[i], ctx.aois->z_hat[i]);
            skip_aois[i] = time_penalty(ctx.slot, ctx.aois->last_update_slot[i], cfg.penalty_rate) * g;
        }
        min_lengths.assign(users, *std::min_element(cfg.symbol_length_set.begin(), cfg.symbol_length_set.end()));
    }

    /// g estimate for `self`, everyone in tx transmitting at `lengths`
    /// under `bf`; the age factor is 1 at the decision slot.
    double tx_mismatch(int self, const std::vector<int>& tx, const std::vector<int>& lengths,
                       const BeamformerSet& bf) const {
        LinkInstance link;
        link.h = ctx.channel->per_user[self];
        link.sigma2 = ctx.channel->noise_variance[self];
        link.self = -1;
        link.U = bf.U[self];
        for (std::size_t k = 0; k < tx.size(); ++k) {
            link.V.push_back(bf.V[tx[k]]);
            link.x.push_back(encode(*ctx.model, ctx.z[tx[k]], lengths[tx[k]]));
            if (tx[k] == self) link.self = static_cast<int>(k);
        }
        const CMat n = noise.slice(self, uses_for(lengths[self], streams));
        return estimate_g(*ctx.model, ctx.z[self], link, n).g;
    }
};

std::vector<int> tx_set(const std::vector<bool>& alpha) {
    std::vector<int> t;
    for (int i = 0; i < static_cast<int>(alpha.size()); ++i)
        if (alpha[i]) t.push_back(i);
    return t;
}

std::vector<int> all_users(int n) {
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) t[i] = i;
    return t;
}

// ---- mode-specific beamformer design over one transmit set ----

struct Design {
    BeamformerSet bf;  // full-size; silent users zeroed
    Vec rates;         // exact rates, 0 for silent users
    std::vector<int> dropped;  // users removed to restore feasibility
    std::vector<ScaTraceRow> sca_trace;
    std::vector<ZfOptTraceRow> zf_trace;
};

BeamformerSet silent_all(const SystemConfig& cfg) {
    BeamformerSet bf;
    bf.V.assign(cfg.num_users, CMat::Zero(cfg.n_tx, cfg.streams()));
    bf.U.assign(cfg.num_users, CMat::Identity(cfg.n_rx, cfg.n_rx));
    return bf;
}

Design design_zf(const Workspace& ws, std::vector<int> tx, const std::vector<int>& lengths, bool optimize) {
    const SystemConfig& cfg = ws.cfg;
    Design d;
    d.bf = silent_all(cfg);
    d.rates = Vec::Zero(ws.users);

    while (!tx.empty()) {
        const int n = static_cast<int>(tx.size());
        CMat h_stack(cfg.n_tx, n);
        Vec sigma2(n);
        std::vector<int> len_tx(n);
        for (int k = 0; k < n; ++k) {
            h_stack.col(k) = ws.ctx.channel->per_user[tx[k]].row(0).adjoint();
            sigma2[k] = ws.ctx.channel->noise_variance[tx[k]];
            len_tx[k] = lengths[tx[k]];
        }
        const Vec h_vec = zf_power_weights(h_stack);
        const Vec p0 = rate_floor_powers(len_tx, cfg.bandwidth_hz, cfg.delay_budget_s, sigma2);
        if (h_vec.dot(p0) > cfg.power_budget_w) {
            // Shed the most expensive floor and retry with the rest.
            int worst = 0;
            for (int k = 1; k < n; ++k)
                if (h_vec[k] * p0[k] > h_vec[worst] * p0[worst]) worst = k;
            d.dropped.push_back(tx[worst]);
            tx.erase(tx.begin() + worst);
            continue;
        }

        ZfState st = ZfState::make(h_stack, len_tx, cfg.bandwidth_hz, cfg.delay_budget_s, sigma2,
                                   cfg.power_budget_w, Vec::Ones(n), CVec::Ones(n));
        if (optimize && cfg.zf.iterations > 0) {
            const CMat v_dir = h_stack * h_stack.adjoint().lazyProduct(h_stack).eval().llt().solve(
                                   CMat::Identity(n, n));  // H (H^H H)^-1, columns scale with sqrt(p)
            ZfObjective objective = [&](const Vec& qq, const CVec& uu, bool want_grad) {
                const Vec p = reparameterized_power(qq, p0, h_vec, cfg.power_budget_w);
                BeamformerSet bf = silent_all(cfg);
                for (int k = 0; k < n; ++k) {
                    bf.V[tx[k]] = v_dir.col(k) * std::sqrt(p[k]);
                    bf.U[tx[k]] = CMat::Constant(1, 1, uu[k]);
                }
                ZfObjectiveEval ev;
                Vec grad_p = Vec::Zero(n);
                ev.grad_u = CVec::Zero(n);
                for (int k = 0; k < n; ++k) {
                    const int i = tx[k];
                    LinkInstance link;
                    link.h = ws.ctx.channel->per_user[i];
                    link.sigma2 = ws.ctx.channel->noise_variance[i];
                    link.U = bf.U[i];
                    for (int m = 0; m < n; ++m) {
                        link.V.push_back(bf.V[tx[m]]);
                        link.x.push_back(encode(*ws.ctx.model, ws.ctx.z[tx[m]], len_tx[m]));
                        if (tx[m] == i) link.self = m;
                    }
                    const CMat noise = ws.noise.slice(i, uses_for(len_tx[k], ws.streams));
                    const auto est = estimate_g(*ws.ctx.model, ws.ctx.z[i], link, noise,
                                                want_grad ? GradWrt::kBoth : GradWrt::kNone);
                    ev.value += est.g;
                    if (want_grad) {
                        for (int m = 0; m < n; ++m) {
                            const double gp =
                                (est.grad_v[m].conjugate().cwiseProduct(v_dir.col(m)).sum().real()) /
                                (2.0 * std::sqrt(p[m]));
                            grad_p[m] += gp;
                        }
                        ev.grad_u[k] += est.grad_u(0, 0);
                    }
                }
                if (want_grad) ev.grad_q = reparameterized_power_grad(grad_p, qq, p0, h_vec, cfg.power_budget_w);
                return ev;
            };
            ZfOptOptions opt;
            opt.step = cfg.zf.step;
            opt.iterations = cfg.zf.iterations;
            opt.adam = cfg.zf.adam;
            const auto res = optimize_zf(objective, st.q, st.u, opt, &h_vec, &p0, cfg.power_budget_w);
            st.q = res.q;
            st.u = res.u;
            st.refresh_power();
            d.zf_trace = res.trace;
        }

        const CMat v = zf_matrix(h_stack, st.p);
        for (int k = 0; k < n; ++k) {
            d.bf.V[tx[k]] = v.col(k);
            d.bf.U[tx[k]] = CMat::Constant(1, 1, st.u[k]);
            d.rates[tx[k]] = std::log2(1.0 + st.p[k] / sigma2[k]);
        }
        return d;
    }
    return d;
}

Design design_sca(const Workspace& ws, std::vector<int> tx, const std::vector<int>& lengths, bool optimize) {
    const SystemConfig& cfg = ws.cfg;
    Design d;
    d.bf = silent_all(cfg);
    d.rates = Vec::Zero(ws.users);

    while (!tx.empty()) {
        const int n = static_cast<int>(tx.size());
        ScaContext sc;
        sc.model = ws.ctx.model;
        sc.p_max = cfg.power_budget_w;
        sc.bandwidth_hz = cfg.bandwidth_hz;
        sc.t_max_s = cfg.delay_budget_s;
        sc.sigma2 = Vec(n);
        sc.weights = Vec::Ones(n);  // age factor resets to 1 on delivery
        for (int k = 0; k < n; ++k) {
            sc.z.push_back(ws.ctx.z[tx[k]]);
            sc.h.push_back(ws.ctx.channel->per_user[tx[k]]);
            sc.sigma2[k] = ws.ctx.channel->noise_variance[tx[k]];
            sc.lengths.push_back(lengths[tx[k]]);
            sc.noise.push_back(ws.noise.slice(tx[k], uses_for(lengths[tx[k]], ws.streams)));
        }

        BeamformerSet init = BeamformerSet::matched_init(sc.h, ws.streams, cfg.power_budget_w);
        ScaOptions opt;
        opt.gamma0 = cfg.sca.gamma0;
        opt.max_iters = optimize ? cfg.sca.max_iters : 0;
        opt.tol_obj = cfg.sca.tol_obj;
        opt.u_trust_radius = cfg.sca.u_trust_radius;
        opt.qcqp.tol_kkt = cfg.sca.tol_kkt;
        try {
            ScaResult res = sca_optimize(sc, init, opt);
            // Monotone safeguard: never leave the slot worse than the start.
            if (!res.trace.empty() && res.trace.back().objective > res.trace.front().objective + 1e-12) {
                res.bf = init;
                res.objective = res.trace.front().objective;
            }
            for (int k = 0; k < n; ++k) {
                d.bf.V[tx[k]] = res.bf.V[k];
                d.bf.U[tx[k]] = res.bf.U[k];
                d.rates[tx[k]] = mimo_rate(sc.h[k], res.bf.V, k, res.bf.U[k], sc.sigma2[k]);
            }
            d.sca_trace = std::move(res.trace);
            return d;
        } catch (const InfeasibleError&) {
            // Shed the stalest floor (largest length demand relative to a
            // matched single-user rate) and retry.
            int worst = 0;
            double worst_gap = -1e300;
            for (int k = 0; k < n; ++k) {
                const double solo = mimo_rate(sc.h[k], {init.V[k]}, 0, init.U[k], sc.sigma2[k]);
                const double gap = sc.lengths[k] / (cfg.bandwidth_hz * cfg.delay_budget_s) - solo;
                if (gap > worst_gap) {
                    worst_gap = gap;
                    worst = k;
                }
            }
            d.dropped.push_back(tx[worst]);
            tx.erase(tx.begin() + worst);
        }
    }
    return d;
}

Design design(const Workspace& ws, const std::vector<int>& tx, const std::vector<int>& lengths, bool optimize) {
    return ws.ctx.mode == Mode::kZf ? design_zf(ws, tx, lengths, optimize)
                                    : design_sca(ws, tx, lengths, optimize);
}

}  // namespace

SlotDecision ao_round(const SlotContext& ctx) {
    Workspace ws(ctx);
    const SystemConfig& cfg = ws.cfg;
    const int users = ws.users;
    const bool actuation_first =
        cfg.ao.actuation_first.value_or(ctx.mode == Mode::kSca);  // printed order of each algorithm

    // Reference design over all users: branch values for the actuation
    // search when a user is outside the current transmit set.
    const Design ref = design(ws, all_users(users), ws.min_lengths, /*optimize=*/false);
    Vec ref_tx_aois = Vec::Zero(users);
    {
        std::vector<int> survivors;
        for (int i = 0; i < users; ++i)
            if (std::find(ref.dropped.begin(), ref.dropped.end(), i) == ref.dropped.end()) survivors.push_back(i);
        for (int i = 0; i < users; ++i) {
            const bool in = std::find(survivors.begin(), survivors.end(), i) != survivors.end();
            ref_tx_aois[i] = in ? ws.tx_mismatch(i, survivors, ws.min_lengths, ref.bf) : ws.skip_aois[i];
        }
    }

    // Baseline: transmit nobody.
    SlotDecision best;
    best.alpha.assign(users, false);
    best.lengths = ws.min_lengths;
    best.bf = silent_all(cfg);
    best.rates = Vec::Zero(users);
    best.objective = dpp_objective(ctx.queues->q, best.alpha, cfg.cost_per_action, cfg.cost_cap,
                                   cfg.dpp_weight, ws.skip_aois);

    std::vector<bool> alpha(users, true);
    std::vector<int> lengths = ws.min_lengths;
    for (int round = 0; round < cfg.ao.max_rounds; ++round) {
        Design dsn;
        if (actuation_first) {
            // Branch estimates from the reference (round 0) or the last
            // accepted design; then redesign for the selected set.
            Vec tx_aois = ref_tx_aois;
            if (round > 0)
                for (int i = 0; i < users; ++i)
                    if (best.alpha[i]) tx_aois[i] = ws.tx_mismatch(i, tx_set(best.alpha), best.lengths, best.bf);
            const auto found = search_alpha(ctx.queues->q, cfg.cost_per_action, cfg.cost_cap, cfg.dpp_weight,
                                            tx_aois, ws.skip_aois, cfg.alpha_search_cap);
            alpha = found.alpha;
            dsn = design(ws, tx_set(alpha), lengths, true);
        } else {
            dsn = design(ws, round == 0 ? all_users(users) : tx_set(alpha), lengths, true);
            std::vector<int> live;
            for (int k = 0; k < users; ++k)
                if (dsn.bf.V[k].squaredNorm() > 0.0) live.push_back(k);
            Vec tx_aois(users);
            for (int i = 0; i < users; ++i) {
                const bool designed = dsn.bf.V[i].squaredNorm() > 0.0;
                tx_aois[i] = designed ? ws.tx_mismatch(i, live, lengths, dsn.bf) : ref_tx_aois[i];
            }
            const auto found = search_alpha(ctx.queues->q, cfg.cost_per_action, cfg.cost_cap, cfg.dpp_weight,
                                            tx_aois, ws.skip_aois, cfg.alpha_search_cap);
            alpha = found.alpha;
        }
        for (int i : dsn.dropped) alpha[i] = false;
        std::vector<int> tx = tx_set(alpha);
        // The design must cover exactly the selected set.
        {
            bool matches = true;
            for (int i = 0; i < users; ++i) {
                const bool designed = dsn.bf.V[i].squaredNorm() > 0.0;
                if (designed != alpha[i]) matches = false;
            }
            if (!matches && !tx.empty()) dsn = design(ws, tx, lengths, true);
            for (int i : dsn.dropped) alpha[i] = false;
            tx = tx_set(alpha);
        }

        // Length search with the other users frozen at the incumbent;
        // rate floors come from the exact rates of the design.
        std::vector<int> next_lengths = lengths;
        if (!tx.empty()) {
            auto objective = [&](int k, int l) {
                std::vector<int> cand = next_lengths;
                cand[tx[k]] = l;
                return ws.tx_mismatch(tx[k], tx, cand, dsn.bf);
            };
            Vec tx_rates(tx.size());
            for (std::size_t k = 0; k < tx.size(); ++k) tx_rates[k] = dsn.rates[tx[k]];
            const auto ls = search_lengths(objective, tx_rates, cfg.bandwidth_hz, cfg.delay_budget_s,
                                           cfg.symbol_length_set);
            for (std::size_t k = 0; k < tx.size(); ++k)
                if (ls.feasible[k]) next_lengths[tx[k]] = ls.lengths[k];
        }

        // DPP objective of this round's full decision, common noise.
        Vec aois(users);
        for (int i = 0; i < users; ++i)
            aois[i] = alpha[i] ? ws.tx_mismatch(i, tx, next_lengths, dsn.bf) : ws.skip_aois[i];
        const double obj =
            dpp_objective(ctx.queues->q, alpha, cfg.cost_per_action, cfg.cost_cap, cfg.dpp_weight, aois);

        const double gain = best.objective - obj;
        if (obj < best.objective) {
            best.alpha = alpha;
            best.lengths = next_lengths;
            best.bf = dsn.bf;
            best.rates = dsn.rates;
            best.objective = obj;
            best.sca_trace = dsn.sca_trace;
            best.zf_trace = dsn.zf_trace;
        }
        best.round_objectives.push_back(best.objective);
        lengths = best.lengths;
        alpha = best.alpha;
        if (gain <= cfg.ao.tol * std::max(1.0, std::abs(best.objective))) break;
    }

    best.feasible = true;
    for (int i = 0; i < users; ++i)
        if (best.alpha[i] &&
            best.rates[i] < best.lengths[i] / (cfg.bandwidth_hz * cfg.delay_budget_s) - 1e-9)
            best.feasible = false;
    return best;
}

SlotDecision decide_slot(const SlotContext& ctx) {
    if (ctx.mode == Mode::kSca || ctx.mode == Mode::kZf) return ao_round(ctx);

    Workspace ws(ctx);
    const SystemConfig& cfg = ws.cfg;
    SlotDecision d;
    d.lengths = ws.min_lengths;
    d.rates = Vec::Zero(ws.users);
    if (ctx.mode == Mode::kNeverTransmit) {
        d.alpha.assign(ws.users, false);
        d.bf = silent_all(cfg);
        d.objective = dpp_objective(ctx.queues->q, d.alpha, cfg.cost_per_action, cfg.cost_cap,
                                    cfg.dpp_weight, ws.skip_aois);
        return d;
    }
    // Always-transmit: the sampling decision is unconditional even when the
    // design cannot serve a user (its V stays zero).
    d.alpha.assign(ws.users, true);
    Mode design_mode = cfg.n_rx == 1 && cfg.num_users <= cfg.n_tx ? Mode::kZf : Mode::kSca;
    SlotContext design_ctx = ctx;
    design_ctx.mode = design_mode;
    Workspace dws(design_ctx);
    Design dsn = design(dws, all_users(ws.users), d.lengths, /*optimize=*/false);
    d.bf = std::move(dsn.bf);
    d.rates = std::move(dsn.rates);
    d.feasible = dsn.dropped.empty();
    return d;
}

}  // namespace aois

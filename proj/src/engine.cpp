#include "aois/engine.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "aois/rate.hpp"

namespace aois {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ChannelState channel_for_slot(const SystemConfig& cfg, int slot) {
    ChannelState ch;
    ch.slot = slot;
    const int block = slot / cfg.block_length;
    ch.per_user.resize(cfg.num_users);
    ch.noise_variance = Vec::Constant(cfg.num_users, cfg.noise_variance_w);
    ch.pathloss_db = Vec::Zero(cfg.num_users);
    for (int u = 0; u < cfg.num_users; ++u) {
        Rng rng(derive_seed(cfg.rng_seed, {kChannelTag, static_cast<uint64_t>(block), static_cast<uint64_t>(u)}));
        ch.per_user[u] = sample_block_fading(cfg.n_rx, cfg.n_tx, rng);
        if (cfg.pathloss.enabled) {
            const double dist = cfg.pathloss.distance_km.size() == 1 ? cfg.pathloss.distance_km[0]
                                                                     : cfg.pathloss.distance_km[u];
            double loss_db = path_loss_db(dist);
            if (cfg.pathloss.shadow_sigma_db > 0.0) {
                Rng srng(derive_seed(cfg.rng_seed,
                                     {kShadowTag, static_cast<uint64_t>(block), static_cast<uint64_t>(u)}));
                loss_db += cfg.pathloss.shadow_sigma_db * srng.gaussian();
            }
            ch.pathloss_db[u] = loss_db;
            ch.per_user[u] *= std::pow(10.0, -loss_db / 20.0);
        }
    }
    return ch;
}

EpisodeResult run_episode(const SystemConfig& cfg, Mode mode) {
    cfg.validate();
    if (mode == Mode::kZf && (cfg.n_rx != 1 || cfg.num_users > cfg.n_tx))
        throw ConfigError("zf mode needs n_rx == 1 and num_users <= n_tx");

    const SemanticModel model =
        SemanticModel::make(cfg.feature_dim, cfg.model_capacity(), cfg.task_dim, cfg.rng_seed);
    std::vector<SemanticSource> sources;
    sources.reserve(cfg.num_users);
    for (int u = 0; u < cfg.num_users; ++u)
        sources.emplace_back(cfg.feature_dim, cfg.source_rho,
                             derive_seed(cfg.rng_seed, {kSourceTag, static_cast<uint64_t>(u)}));

    std::vector<Vec> z(cfg.num_users);
    for (int u = 0; u < cfg.num_users; ++u) z[u] = sources[u].current();
    AoisState aois = AoisState::warm_start(model, z);
    QueueState queues = QueueState::init(cfg.cost_per_action, cfg.cost_cap);

    EpisodeResult res;
    res.mode = mode;
    res.slots = cfg.slots;
    res.users = cfg.num_users;
    res.records.reserve(static_cast<std::size_t>(cfg.slots) * cfg.num_users);

    double aois_sum = 0.0;
    double g_sum = 0.0, rate_sum = 0.0;
    long tx_records = 0;

    for (int t = 0; t < cfg.slots; ++t) {
        if (t > 0)
            for (int u = 0; u < cfg.num_users; ++u) {
                sources[u].advance();
                z[u] = sources[u].current();
            }
        const ChannelState channel = channel_for_slot(cfg, t);

        SlotContext sctx;
        sctx.cfg = &cfg;
        sctx.mode = mode;
        sctx.model = &model;
        sctx.channel = &channel;
        sctx.z = z;
        sctx.aois = &aois;
        sctx.queues = &queues;
        sctx.slot = t;
        sctx.mc_seed = derive_seed(cfg.rng_seed, {kSlotNoiseTag, static_cast<uint64_t>(t)});
        SlotDecision decision = decide_slot(sctx);

        for (const auto& e : decision.sca_trace) res.sca_trace.push_back({t, e});
        for (const auto& e : decision.zf_trace) res.zf_trace.push_back({t, e});

        // Realize the transmission with fresh receiver noise.
        std::vector<int> tx;
        for (int u = 0; u < cfg.num_users; ++u)
            if (decision.alpha[u]) tx.push_back(u);
        std::vector<CVec> symbols(tx.size());
        for (std::size_t k = 0; k < tx.size(); ++k)
            symbols[k] = encode(model, z[tx[k]], decision.lengths[tx[k]]);

        double slot_aois = 0.0;
        for (int u = 0; u < cfg.num_users; ++u) {
            SlotRecord rec;
            rec.slot = t;
            rec.user = u;
            rec.alpha = decision.alpha[u];
            rec.length = decision.lengths[u];
            rec.queue = queues.q[u];
            rec.power_w = decision.bf.V[u].squaredNorm();
            if (decision.alpha[u]) {
                LinkInstance link;
                link.h = channel.per_user[u];
                link.sigma2 = channel.noise_variance[u];
                link.U = decision.bf.U[u];
                for (std::size_t k = 0; k < tx.size(); ++k) {
                    link.V.push_back(decision.bf.V[tx[k]]);
                    link.x.push_back(symbols[k]);
                    if (tx[k] == u) link.self = static_cast<int>(k);
                }
                Rng noise_rng(derive_seed(cfg.rng_seed,
                                          {kRxNoiseTag, static_cast<uint64_t>(t), 0x7fffu + static_cast<uint64_t>(u)}));
                const CMat noise = draw_unit_noise(cfg.n_rx, link.channel_uses(), noise_rng);
                const Vec z_hat = decode_realization(model, link, noise);
                const double g_real = mismatch(model, z[u], z_hat);
                rec.aois = evolve(aois, u, t, cfg.penalty_rate, model, z[u], true, g_real, z_hat);
                rec.g = g_real;
                rec.rate_bps_hz = decision.rates[u];
                rec.delay_s = transmission_delay(decision.lengths[u], cfg.bandwidth_hz, decision.rates[u]);
                g_sum += g_real;
                rate_sum += rec.rate_bps_hz;
                ++tx_records;
            } else {
                rec.aois = evolve(aois, u, t, cfg.penalty_rate, model, z[u], false);
                rec.g = mismatch(model, z[u], aois.z_hat[u]);
                rec.rate_bps_hz = 0.0;
                rec.delay_s = 0.0;
            }
            rec.epsilon = aois.last_update_slot[u];
            slot_aois += rec.aois;
            res.records.push_back(rec);
        }
        aois_sum += slot_aois;
        res.max_power_w = std::max(res.max_power_w, decision.bf.total_power());
        queues.step(decision.alpha);
    }

    res.avg_aois = aois_sum / cfg.slots;
    res.avg_cost = queues.cumulative_cost / static_cast<double>(cfg.slots);
    res.queue_rate = queues.q / static_cast<double>(cfg.slots);
    res.transmissions = Vec::Zero(cfg.num_users);
    for (const auto& r : res.records)
        if (r.alpha) res.transmissions[r.user] += 1.0;
    res.avg_g = tx_records > 0 ? g_sum / tx_records : 0.0;
    res.avg_rate = tx_records > 0 ? rate_sum / tx_records : 0.0;
    res.length_set = cfg.symbol_length_set;
    res.feature_dim = cfg.feature_dim;
    return res;
}

void write_episode_csv(std::ostream& out, const std::vector<SlotRecord>& records) {
    out << "slot,user,alpha,length,queue,epsilon,aois,g,rate_bps_hz,delay_s,power_w\n";
    for (const auto& r : records) {
        out << r.slot << ',' << r.user << ',' << (r.alpha ? 1 : 0) << ',' << r.length << ',' << fmt(r.queue)
            << ',' << fmt(r.epsilon) << ',' << fmt(r.aois) << ',' << fmt(r.g) << ',' << fmt(r.rate_bps_hz)
            << ',' << fmt(r.delay_s) << ',' << fmt(r.power_w) << '\n';
    }
}

std::vector<SlotRecord> read_episode_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("slot,user,alpha,length,queue", 0) != 0)
        throw std::invalid_argument("read_episode_csv: missing header");
    std::vector<SlotRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        SlotRecord r;
        int alpha = 0;
        std::istringstream ss(line);
        char c;
        if (!(ss >> r.slot >> c >> r.user >> c >> alpha >> c >> r.length >> c >> r.queue >> c >> r.epsilon >>
              c >> r.aois >> c >> r.g >> c >> r.rate_bps_hz >> c >> r.delay_s >> c >> r.power_w))
            throw std::invalid_argument("read_episode_csv: malformed row: " + line);
        r.alpha = alpha != 0;
        records.push_back(r);
    }
    return records;
}

void write_sca_trace_csv(std::ostream& out, const std::vector<EpisodeResult::ScaTraceEntry>& trace) {
    out << "slot,iter,objective,power,user,r_tilde,r_true\n";
    for (const auto& e : trace)
        for (Eigen::Index u = 0; u < e.row.r_tilde.size(); ++u)
            out << e.slot << ',' << e.row.iter << ',' << fmt(e.row.objective) << ',' << fmt(e.row.power) << ','
                << u << ',' << fmt(e.row.r_tilde[u]) << ',' << fmt(e.row.r_true[u]) << '\n';
}

void write_zf_trace_csv(std::ostream& out, const std::vector<EpisodeResult::ZfTraceEntry>& trace) {
    out << "slot,iter,objective,budget_residual\n";
    for (const auto& e : trace)
        out << e.slot << ',' << e.row.iter << ',' << fmt(e.row.objective) << ',' << fmt(e.row.budget_residual)
            << '\n';
}

std::string EpisodeResult::summary_json() const {
    nlohmann::json j;
    j["mode"] = to_string(mode);
    j["slots"] = slots;
    j["users"] = users;
    j["avg_aois"] = avg_aois;
    j["avg_cost"] = std::vector<double>(avg_cost.data(), avg_cost.data() + avg_cost.size());
    j["queue_rate"] = std::vector<double>(queue_rate.data(), queue_rate.data() + queue_rate.size());
    j["transmissions"] = std::vector<double>(transmissions.data(), transmissions.data() + transmissions.size());
    j["avg_g"] = avg_g;
    j["avg_rate"] = avg_rate;
    j["max_power_w"] = max_power_w;
    // Bandwidth-ratio metadata: symbols per feature dimension, per length.
    if (feature_dim > 0) {
        nlohmann::json cbr = nlohmann::json::object();
        for (int l : length_set) cbr[std::to_string(l)] = static_cast<double>(l) / feature_dim;
        j["cbr_per_length"] = cbr;
    }
    return j.dump(2);
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "p_max" || s == "power_budget") return SweepAxis::kPowerBudget;
    if (s == "mean_length" || s == "mean_l") return SweepAxis::kMeanLength;
    if (s == "omega" || s == "dpp_weight") return SweepAxis::kDppWeight;
    throw ConfigError("unknown sweep axis '" + s + "' (expected p_max|mean_length|omega)");
}

std::vector<SweepRow> sweep(const SystemConfig& base, Mode mode, SweepAxis axis,
                            const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("sweep: no values");
    std::vector<SweepRow> rows;
    for (double v : values) {
        SystemConfig cfg = base;
        switch (axis) {
            case SweepAxis::kPowerBudget: cfg.power_budget_w = v; break;
            case SweepAxis::kMeanLength: cfg.symbol_length_set = {static_cast<int>(std::lround(v))}; break;
            case SweepAxis::kDppWeight: cfg.dpp_weight = v; break;
        }
        const EpisodeResult r = run_episode(cfg, mode);
        SweepRow row;
        row.value = v;
        row.avg_aois = r.avg_aois;
        row.avg_g = r.avg_g;
        row.avg_cost_total = r.avg_cost.sum();
        row.transmissions_total = r.transmissions.sum();
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows) {
    const char* name = axis == SweepAxis::kPowerBudget ? "p_max"
                       : axis == SweepAxis::kMeanLength ? "mean_length"
                                                        : "omega";
    out << name << ",avg_aois,avg_g,avg_cost_total,transmissions_total\n";
    for (const auto& r : rows)
        out << fmt(r.value) << ',' << fmt(r.avg_aois) << ',' << fmt(r.avg_g) << ',' << fmt(r.avg_cost_total)
            << ',' << fmt(r.transmissions_total) << '\n';
}

void emit_plots(const EpisodeResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream aois_dat(fs::path(out_dir) / "aois.dat");
        aois_dat << "# slot total_aois\n";
        if (result.users > 0)
            for (std::size_t i = 0; i < result.records.size(); i += result.users) {
                double total = 0.0;
                for (int u = 0; u < result.users; ++u) total += result.records[i + u].aois;
                aois_dat << result.records[i].slot << ' ' << fmt(total) << '\n';
            }
    }
    {
        std::ofstream queue_dat(fs::path(out_dir) / "queue.dat");
        queue_dat << "# slot";
        for (int u = 0; u < result.users; ++u) queue_dat << " q" << u;
        queue_dat << '\n';
        if (result.users > 0)
            for (std::size_t i = 0; i < result.records.size(); i += result.users) {
                queue_dat << result.records[i].slot;
                for (int u = 0; u < result.users; ++u) queue_dat << ' ' << fmt(result.records[i + u].queue);
                queue_dat << '\n';
            }
    }
    {
        std::ofstream conv_dat(fs::path(out_dir) / "convergence.dat");
        conv_dat << "# iter objective\n";
        if (!result.sca_trace.empty()) {
            const int first_slot = result.sca_trace.front().slot;
            for (const auto& e : result.sca_trace)
                if (e.slot == first_slot) conv_dat << e.row.iter << ' ' << fmt(e.row.objective) << '\n';
        } else if (!result.zf_trace.empty()) {
            const int first_slot = result.zf_trace.front().slot;
            for (const auto& e : result.zf_trace)
                if (e.slot == first_slot) conv_dat << e.row.iter << ' ' << fmt(e.row.objective) << '\n';
        }
    }
    std::ofstream gp(fs::path(out_dir) / "plots.gp");
    gp << "set terminal pngcairo size 900,600\n"
          "set output 'aois.png'\n"
          "set xlabel 'slot'\nset ylabel 'total AoIS'\n"
          "plot 'aois.dat' using 1:2 with lines title 'AoIS'\n"
          "set output 'queue.png'\n"
          "set ylabel 'virtual queue'\n"
          "plot for [u=2:*] 'queue.dat' using 1:u with lines title sprintf('user %d', u-2)\n"
          "set output 'convergence.png'\n"
          "set xlabel 'iteration'\nset ylabel 'objective'\n"
          "plot 'convergence.dat' using 1:2 with linespoints title 'objective'\n";
}

void write_episode_outputs(const EpisodeResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "episode.csv", std::ios::binary);
        write_episode_csv(out, result.records);
    }
    if (!result.sca_trace.empty()) {
        std::ofstream out(fs::path(out_dir) / "sca_trace.csv", std::ios::binary);
        write_sca_trace_csv(out, result.sca_trace);
    }
    if (!result.zf_trace.empty()) {
        std::ofstream out(fs::path(out_dir) / "zf_trace.csv", std::ios::binary);
        write_zf_trace_csv(out, result.zf_trace);
    }
    std::ofstream summary(fs::path(out_dir) / "summary.json", std::ios::binary);
    summary << result.summary_json() << '\n';
}

}  // namespace aois

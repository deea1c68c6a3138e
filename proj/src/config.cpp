#include "aois/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aois/channel.hpp"

namespace aois {

using nlohmann::json;

Mode mode_from_string(const std::string& s) {
    if (s == "sca") return Mode::kSca;
    if (s == "zf") return Mode::kZf;
    if (s == "always") return Mode::kAlwaysTransmit;
    if (s == "never") return Mode::kNeverTransmit;
    throw ConfigError("unknown mode '" + s + "' (expected sca|zf|always|never)");
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::kSca: return "sca";
        case Mode::kZf: return "zf";
        case Mode::kAlwaysTransmit: return "always";
        case Mode::kNeverTransmit: return "never";
    }
    return "?";
}

int SystemConfig::model_capacity() const {
    int cap = feature_dim;
    for (int l : symbol_length_set) cap = std::max(cap, l);
    return cap;
}

void SystemConfig::validate() const {
    std::vector<std::string> bad;
    auto req = [&](bool ok, const std::string& field) {
        if (!ok) bad.push_back(field);
    };
    req(num_users >= 1, "num_users must be >= 1");
    req(n_tx >= 1 && n_rx >= 1, "n_tx and n_rx must be >= 1");
    req(power_budget_w > 0.0, "power_budget must be positive");
    req(delay_budget_s > 0.0, "delay_budget_s must be positive");
    req(bandwidth_hz > 0.0, "bandwidth_hz must be positive");
    req(!symbol_length_set.empty(), "symbol_length_set must be nonempty");
    for (int l : symbol_length_set) req(l >= 1, "symbol_length_set entries must be >= 1");
    req(penalty_rate > 0.0, "penalty_rate must be positive");
    req(dpp_weight > 0.0, "dpp_weight must be positive");
    req(mc_samples >= 1, "mc_samples must be >= 1");
    req(cost_per_action.size() == num_users, "cost_per_action must have one entry per user");
    if (cost_per_action.size() == num_users) req((cost_per_action.array() >= 0.0).all(), "cost_per_action must be >= 0");
    req(cost_cap > 0.0, "cost_cap must be positive");
    req(feature_dim >= 1, "feature_dim must be >= 1");
    req(task_dim >= 1, "task_dim must be >= 1");
    req(block_length >= 1, "block_length must be >= 1");
    req(source_rho >= 0.0 && source_rho <= 1.0, "source_rho must be in [0, 1]");
    req(noise_variance_w > 0.0, "noise must resolve to a positive variance");
    req(slots >= 1, "slots must be >= 1");
    req(alpha_search_cap >= 1, "alpha_search_cap must be >= 1");
    if (pathloss.enabled) {
        req(pathloss.distance_km.size() == 1 || static_cast<int>(pathloss.distance_km.size()) == num_users,
            "pathloss.distance_km must be scalar or one per user");
        for (double d : pathloss.distance_km) req(d > 0.0, "pathloss.distance_km entries must be positive");
    }
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "invalid configuration (" << bad.size() << " problem" << (bad.size() > 1 ? "s" : "") << "):";
        for (const auto& b : bad) msg << "\n  - " << b;
        throw ConfigError(msg.str());
    }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

SystemConfig SystemConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"num_users", "n_tx", "n_rx", "power_budget_w", "power_budget_dbm", "delay_budget_s",
                       "bandwidth_hz", "symbol_length_set", "penalty_rate", "dpp_weight", "mc_samples",
                       "cost_per_action", "cost_cap", "feature_dim", "block_length", "rng_seed", "source_rho",
                       "task_dim", "noise_variance_w", "noise_psd_dbm_hz", "pathloss", "sca", "zf", "ao",
                       "alpha_search_cap", "slots"},
                   "config root");

    SystemConfig c;
    auto get = [&](const char* key, auto& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("num_users", c.num_users);
    get("n_tx", c.n_tx);
    get("n_rx", c.n_rx);
    get("delay_budget_s", c.delay_budget_s);
    get("bandwidth_hz", c.bandwidth_hz);
    get("symbol_length_set", c.symbol_length_set);
    get("penalty_rate", c.penalty_rate);
    get("dpp_weight", c.dpp_weight);
    get("mc_samples", c.mc_samples);
    get("cost_cap", c.cost_cap);
    get("feature_dim", c.feature_dim);
    get("block_length", c.block_length);
    get("rng_seed", c.rng_seed);
    get("source_rho", c.source_rho);
    get("task_dim", c.task_dim);
    get("alpha_search_cap", c.alpha_search_cap);
    get("slots", c.slots);

    if (j.contains("power_budget_w") && j.contains("power_budget_dbm"))
        throw ConfigError("give either power_budget_w or power_budget_dbm, not both");
    if (j.contains("power_budget_w")) c.power_budget_w = j.at("power_budget_w").get<double>();
    else if (j.contains("power_budget_dbm"))
        c.power_budget_w = std::pow(10.0, (j.at("power_budget_dbm").get<double>() - 30.0) / 10.0);

    if (j.contains("noise_variance_w") && j.contains("noise_psd_dbm_hz"))
        throw ConfigError("give either noise_variance_w or noise_psd_dbm_hz, not both");
    if (j.contains("noise_variance_w")) c.noise_variance_w = j.at("noise_variance_w").get<double>();
    else if (j.contains("noise_psd_dbm_hz"))
        c.noise_variance_w = noise_power_w(c.bandwidth_hz, j.at("noise_psd_dbm_hz").get<double>());

    if (j.contains("cost_per_action")) {
        const auto& cost = j.at("cost_per_action");
        if (cost.is_number()) c.cost_per_action = Vec::Constant(c.num_users, cost.get<double>());
        else {
            const auto v = cost.get<std::vector<double>>();
            c.cost_per_action = Eigen::Map<const Vec>(v.data(), v.size());
        }
    } else {
        c.cost_per_action = Vec::Ones(c.num_users);
    }

    if (j.contains("pathloss")) {
        const json& p = j.at("pathloss");
        reject_unknown(p, {"enabled", "distance_km", "shadow_sigma_db"}, "pathloss");
        if (p.contains("enabled")) c.pathloss.enabled = p.at("enabled").get<bool>();
        if (p.contains("distance_km")) {
            const auto& d = p.at("distance_km");
            if (d.is_number()) c.pathloss.distance_km = {d.get<double>()};
            else c.pathloss.distance_km = d.get<std::vector<double>>();
        }
        if (p.contains("shadow_sigma_db")) c.pathloss.shadow_sigma_db = p.at("shadow_sigma_db").get<double>();
    }
    if (j.contains("sca")) {
        const json& s = j.at("sca");
        reject_unknown(s, {"gamma0", "max_iters", "tol_obj", "u_trust_radius", "tol_kkt"}, "sca");
        if (s.contains("gamma0")) c.sca.gamma0 = s.at("gamma0").get<double>();
        if (s.contains("max_iters")) c.sca.max_iters = s.at("max_iters").get<int>();
        if (s.contains("tol_obj")) c.sca.tol_obj = s.at("tol_obj").get<double>();
        if (s.contains("u_trust_radius")) c.sca.u_trust_radius = s.at("u_trust_radius").get<double>();
        if (s.contains("tol_kkt")) c.sca.tol_kkt = s.at("tol_kkt").get<double>();
    }
    if (j.contains("zf")) {
        const json& z = j.at("zf");
        reject_unknown(z, {"step", "iterations", "adam"}, "zf");
        if (z.contains("step")) c.zf.step = z.at("step").get<double>();
        if (z.contains("iterations")) c.zf.iterations = z.at("iterations").get<int>();
        if (z.contains("adam")) c.zf.adam = z.at("adam").get<bool>();
    }
    if (j.contains("ao")) {
        const json& a = j.at("ao");
        reject_unknown(a, {"max_rounds", "tol", "actuation_first"}, "ao");
        if (a.contains("max_rounds")) c.ao.max_rounds = a.at("max_rounds").get<int>();
        if (a.contains("tol")) c.ao.tol = a.at("tol").get<double>();
        if (a.contains("actuation_first")) c.ao.actuation_first = a.at("actuation_first").get<bool>();
    }

    c.validate();
    return c;
}

SystemConfig SystemConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string SystemConfig::to_json_text() const {
    json j;
    j["num_users"] = num_users;
    j["n_tx"] = n_tx;
    j["n_rx"] = n_rx;
    j["power_budget_w"] = power_budget_w;
    j["delay_budget_s"] = delay_budget_s;
    j["bandwidth_hz"] = bandwidth_hz;
    j["symbol_length_set"] = symbol_length_set;
    j["penalty_rate"] = penalty_rate;
    j["dpp_weight"] = dpp_weight;
    j["mc_samples"] = mc_samples;
    j["cost_per_action"] = std::vector<double>(cost_per_action.data(), cost_per_action.data() + cost_per_action.size());
    j["cost_cap"] = cost_cap;
    j["feature_dim"] = feature_dim;
    j["block_length"] = block_length;
    j["rng_seed"] = rng_seed;
    j["source_rho"] = source_rho;
    j["task_dim"] = task_dim;
    j["noise_variance_w"] = noise_variance_w;
    j["pathloss"] = {{"enabled", pathloss.enabled},
                     {"distance_km", pathloss.distance_km},
                     {"shadow_sigma_db", pathloss.shadow_sigma_db}};
    j["sca"] = {{"gamma0", sca.gamma0},
                {"max_iters", sca.max_iters},
                {"tol_obj", sca.tol_obj},
                {"u_trust_radius", sca.u_trust_radius},
                {"tol_kkt", sca.tol_kkt}};
    j["zf"] = {{"step", zf.step}, {"iterations", zf.iterations}, {"adam", zf.adam}};
    j["ao"] = {{"max_rounds", ao.max_rounds}, {"tol", ao.tol}};
    if (ao.actuation_first) j["ao"]["actuation_first"] = *ao.actuation_first;
    j["alpha_search_cap"] = alpha_search_cap;
    j["slots"] = slots;
    return j.dump(2);
}

}  // namespace aois

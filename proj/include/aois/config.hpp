#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aois/types.hpp"

namespace aois {

enum class Mode { kSca, kZf, kAlwaysTransmit, kNeverTransmit };

Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

struct ScaConfig {
    double gamma0 = 1.0;
    int max_iters = 30;
    double tol_obj = 1e-5;
    double u_trust_radius = 1e3;
    double tol_kkt = 1e-6;
};

struct ZfConfig {
    double step = 1e-2;
    int iterations = 500;
    bool adam = true;
};

struct AoConfig {
    int max_rounds = 10;
    double tol = 1e-4;
    // Algorithm order override: actuation search before beamforming.
    // Unset follows the algorithm's printed order (SCA: first, ZF: after).
    std::optional<bool> actuation_first;
};

struct PathlossConfig {
    bool enabled = false;
    std::vector<double> distance_km;  // scalar broadcast or one per user
    double shadow_sigma_db = 0.0;     // lognormal shadow fading, per block
};

struct SystemConfig {
    int num_users = 4;
    int n_tx = 4;
    int n_rx = 1;
    double power_budget_w = 1.0;
    double delay_budget_s = 1e-3;
    double bandwidth_hz = 5e6;
    std::vector<int> symbol_length_set = {4, 8, 16, 32};
    double penalty_rate = 0.05;  // b, per slot
    double dpp_weight = 1.0;     // omega
    int mc_samples = 16;
    Vec cost_per_action;   // c_i
    double cost_cap = 1.0;  // c_max
    int feature_dim = 16;
    int block_length = 10;
    uint64_t rng_seed = 1;

    double source_rho = 0.95;
    int task_dim = 8;
    double noise_variance_w = 1.0;
    PathlossConfig pathloss;
    ScaConfig sca;
    ZfConfig zf;
    AoConfig ao;
    int alpha_search_cap = 16;
    int slots = 1000;

    /// Model capacity: every configured length fits and full-length decoding
    /// stays exact.
    int model_capacity() const;
    int streams() const { return std::min(n_tx, n_rx); }

    /// Throws ConfigError listing every violated field.
    void validate() const;

    static SystemConfig from_json_text(const std::string& text);
    static SystemConfig from_file(const std::string& path);
    std::string to_json_text() const;
};

}  // namespace aois

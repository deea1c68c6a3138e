#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aois/config.hpp"
#include "aois/scheduler.hpp"

namespace aois {

struct SlotRecord {
    int slot = 0;
    int user = 0;
    bool alpha = false;
    int length = 0;
    double queue = 0.0;    // Q_i(t) observed by the decision
    double epsilon = 0.0;  // last update slot after the decision
    double aois = 0.0;     // realized AoIS
    double g = 0.0;        // realized mismatch
    double rate_bps_hz = 0.0;
    double delay_s = 0.0;
    double power_w = 0.0;  // tr(V_i V_i^H)
};

struct EpisodeResult {
    Mode mode = Mode::kZf;
    int slots = 0;
    int users = 0;
    std::vector<SlotRecord> records;  // slot-major, user-minor

    struct ScaTraceEntry {
        int slot;
        ScaTraceRow row;
    };
    struct ZfTraceEntry {
        int slot;
        ZfOptTraceRow row;
    };
    std::vector<ScaTraceEntry> sca_trace;
    std::vector<ZfTraceEntry> zf_trace;

    double avg_aois = 0.0;  // mean over slots of sum_i AoIS_i
    Vec avg_cost;           // (1/T) sum alpha_i c_i
    Vec queue_rate;         // Q_i(T) / T
    Vec transmissions;
    double avg_g = 0.0;      // mean realized g over transmit records
    double avg_rate = 0.0;   // mean rate over transmit records
    double max_power_w = 0.0;
    std::vector<int> length_set;  // configured lengths (for the CBR metadata)
    int feature_dim = 0;

    std::string summary_json() const;
};

EpisodeResult run_episode(const SystemConfig& cfg, Mode mode);

/// Fading state the episode loop uses at `slot`: matrices are bit-identical
/// within one block of cfg.block_length slots and redrawn across blocks.
ChannelState channel_for_slot(const SystemConfig& cfg, int slot);

/// RFC 4180 CSV, fixed header, %.17g numbers; byte-stable per (config, seed).
void write_episode_csv(std::ostream& out, const std::vector<SlotRecord>& records);
std::vector<SlotRecord> read_episode_csv(std::istream& in);
void write_sca_trace_csv(std::ostream& out, const std::vector<EpisodeResult::ScaTraceEntry>& trace);
void write_zf_trace_csv(std::ostream& out, const std::vector<EpisodeResult::ZfTraceEntry>& trace);

enum class SweepAxis { kPowerBudget, kMeanLength, kDppWeight };
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepRow {
    double value = 0.0;
    double avg_aois = 0.0;
    double avg_g = 0.0;
    double avg_cost_total = 0.0;
    double transmissions_total = 0.0;
};

/// One episode aggregate per value; mean_length pins the length set to the
/// single given value.
std::vector<SweepRow> sweep(const SystemConfig& base, Mode mode, SweepAxis axis, const std::vector<double>& values);

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows);

/// Gnuplot-ready .dat files (aois.dat, queue.dat, convergence.dat) plus a
/// plots.gp script.
void emit_plots(const EpisodeResult& result, const std::string& out_dir);

/// Writes episode.csv, trace csv, and summary.json under out_dir.
void write_episode_outputs(const EpisodeResult& result, const std::string& out_dir);

}  // namespace aois

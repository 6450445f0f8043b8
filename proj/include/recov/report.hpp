#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "recov/recov.hpp"

namespace recov {

// Serialized record of one recov/fastrecov job: full effective configuration,
// per-sample outputs, detected ids, per-run metric trace and wall-clock
// timings. Also serves as the resumable checkpoint (runs_completed below the
// target marks a partial job).
struct RunReport {
    static constexpr const char* kVersion = "recov-report/1";

    std::string version = kVersion;
    std::string mode;  // "recov" | "fastrecov"
    nlohmann::json config = nlohmann::json::object();
    std::int64_t n_runs_target = 0;
    std::int64_t runs_completed = 0;

    std::vector<std::string> ids;
    std::vector<std::int64_t> counts;    // recov mode: worst-fold occurrences
    std::int64_t total_occurrences = 0;  // recov mode
    std::vector<double> memory;          // fastrecov mode: EMA scores
    std::int64_t memory_updates = 0;     // fastrecov mode

    std::vector<std::string> detected_ids;
    std::vector<RunTrace> run_trace;
    bool has_threshold = false;
    double separation_threshold = 0.0;

    double total_seconds = 0.0;  // wall clock; not part of the canonical payload

    nlohmann::json to_json(bool include_timings = true) const;
    // Deterministic content only: everything except timings. Two jobs with the
    // same config and seed compare bit-identically on this.
    nlohmann::json canonical_payload() const { return to_json(false); }

    static RunReport from_json(const nlohmann::json& j);
};

void save_report(const RunReport& report, const std::string& path);
RunReport load_report(const std::string& path);

}  // namespace recov

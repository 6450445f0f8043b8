#include "recov/report.hpp"

#include <fstream>

#include "recov/errors.hpp"

namespace recov {

using nlohmann::json;

json RunReport::to_json(bool include_timings) const {
    json j;
    j["version"] = version;
    j["mode"] = mode;
    j["config"] = config;
    j["n_runs_target"] = n_runs_target;
    j["runs_completed"] = runs_completed;

    json per_sample = json::array();
    const bool is_recov = mode == "recov";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        json entry;
        entry["id"] = ids[i];
        if (is_recov) entry["count"] = counts[i];
        else entry["memory"] = memory[i];
        per_sample.push_back(std::move(entry));
    }
    j["per_sample"] = std::move(per_sample);
    if (is_recov) j["total_occurrences"] = total_occurrences;
    else j["memory_updates"] = memory_updates;

    j["detected_ids"] = detected_ids;

    json trace = json::array();
    for (const auto& tr : run_trace) {
        json entry;
        entry["run"] = tr.run;
        entry["seed"] = tr.split_seed;
        entry["fold_metrics"] = tr.fold_metrics;
        entry["worst_fold"] = tr.worst_fold;
        entry["n_dropped"] = tr.n_dropped;
        trace.push_back(std::move(entry));
    }
    j["run_trace"] = std::move(trace);

    j["separation_threshold"] = has_threshold ? json(separation_threshold) : json(nullptr);
    if (include_timings) j["timings"] = {{"total_seconds", total_seconds}};
    return j;
}

RunReport RunReport::from_json(const json& j) {
    if (!j.contains("version") || !j["version"].is_string())
        throw VersionError("report: missing version tag");
    if (j["version"].get<std::string>() != kVersion)
        throw VersionError("report: unsupported version '" + j["version"].get<std::string>() +
                           "' (expected '" + kVersion + "')");
    RunReport r;
    try {
        r.mode = j.at("mode").get<std::string>();
        if (r.mode != "recov" && r.mode != "fastrecov")
            throw ValidationError("report: unknown mode '" + r.mode + "'");
        r.config = j.at("config");
        r.n_runs_target = j.at("n_runs_target").get<std::int64_t>();
        r.runs_completed = j.at("runs_completed").get<std::int64_t>();

        for (const auto& entry : j.at("per_sample")) {
            r.ids.push_back(entry.at("id").get<std::string>());
            if (r.mode == "recov") r.counts.push_back(entry.at("count").get<std::int64_t>());
            else r.memory.push_back(entry.at("memory").get<double>());
        }
        if (r.mode == "recov") r.total_occurrences = j.at("total_occurrences").get<std::int64_t>();
        else r.memory_updates = j.at("memory_updates").get<std::int64_t>();

        r.detected_ids = j.at("detected_ids").get<std::vector<std::string>>();

        for (const auto& entry : j.at("run_trace")) {
            RunTrace tr;
            tr.run = entry.at("run").get<std::int64_t>();
            tr.split_seed = entry.at("seed").get<std::uint64_t>();
            tr.fold_metrics = entry.at("fold_metrics").get<std::vector<double>>();
            tr.worst_fold = entry.at("worst_fold").get<std::int32_t>();
            tr.n_dropped = entry.at("n_dropped").get<std::int64_t>();
            r.run_trace.push_back(std::move(tr));
        }

        if (!j.at("separation_threshold").is_null()) {
            r.has_threshold = true;
            r.separation_threshold = j["separation_threshold"].get<double>();
        }
        if (j.contains("timings")) r.total_seconds = j["timings"].value("total_seconds", 0.0);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("report: malformed document: ") + e.what());
    }
    return r;
}

void save_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << report.to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(path + ": not valid JSON: " + e.what());
    }
    return RunReport::from_json(j);
}

}  // namespace recov

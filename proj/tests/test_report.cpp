#include <doctest.h>

#include <json.hpp>

#include "recov/errors.hpp"
#include "recov/report.hpp"
#include "recov/rng.hpp"
#include "testutil.hpp"

using namespace recov;

namespace {

RunReport sample_report(const std::string& mode) {
    RunReport r;
    r.mode = mode;
    r.config = nlohmann::json{{"dataset", "x.csv"}, {"master_seed", 17}, {"k", 5}};
    r.n_runs_target = 10;
    r.runs_completed = 10;
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        r.ids.push_back("s" + std::to_string(i));
        if (mode == "recov") r.counts.push_back(static_cast<std::int64_t>(rng.below(11)));
        else r.memory.push_back(rng.uniform01());
    }
    if (mode == "recov") {
        for (const auto c : r.counts) r.total_occurrences += c;
    } else {
        r.memory_updates = 10;
    }
    r.detected_ids = {"s3", "s7"};
    for (int run = 0; run < 3; ++run) {
        RunTrace tr;
        tr.run = run;
        tr.split_seed = rng.u64();  // stress 64-bit round-trip
        tr.fold_metrics = {rng.uniform01(), rng.uniform01(), 1.0 / 3.0};
        tr.worst_fold = 2;
        tr.n_dropped = run;
        r.run_trace.push_back(tr);
    }
    r.has_threshold = mode == "recov";
    r.separation_threshold = 4.25;
    r.total_seconds = 12.5;
    return r;
}

}  // namespace

TEST_CASE("report round-trips losslessly through save/load") {
    for (const std::string mode : {"recov", "fastrecov"}) {
        const RunReport r = sample_report(mode);
        testutil::TempDir tmp;
        const auto path = tmp.file("report.json");
        save_report(r, path);
        const RunReport back = load_report(path);
        CHECK(back.mode == r.mode);
        CHECK(back.config == r.config);
        CHECK(back.n_runs_target == r.n_runs_target);
        CHECK(back.runs_completed == r.runs_completed);
        CHECK(back.ids == r.ids);
        CHECK(back.counts == r.counts);
        CHECK(back.memory == r.memory);
        CHECK(back.total_occurrences == r.total_occurrences);
        CHECK(back.memory_updates == r.memory_updates);
        CHECK(back.detected_ids == r.detected_ids);
        REQUIRE(back.run_trace.size() == r.run_trace.size());
        for (std::size_t i = 0; i < r.run_trace.size(); ++i) {
            CHECK(back.run_trace[i].split_seed == r.run_trace[i].split_seed);
            CHECK(back.run_trace[i].fold_metrics == r.run_trace[i].fold_metrics);
            CHECK(back.run_trace[i].worst_fold == r.run_trace[i].worst_fold);
            CHECK(back.run_trace[i].n_dropped == r.run_trace[i].n_dropped);
        }
        CHECK(back.has_threshold == r.has_threshold);
        if (r.has_threshold) CHECK(back.separation_threshold == r.separation_threshold);
        CHECK(back.total_seconds == r.total_seconds);
        // double round-trip is byte-stable
        const auto path2 = tmp.file("report2.json");
        save_report(back, path2);
        CHECK(testutil::read_text(path) == testutil::read_text(path2));
    }
}

TEST_CASE("unknown report version is a versioned error") {
    nlohmann::json j = sample_report("recov").to_json();
    j["version"] = "recov-report/99";
    CHECK_THROWS_AS(RunReport::from_json(j), VersionError);
    nlohmann::json missing = j;
    missing.erase("version");
    CHECK_THROWS_AS(RunReport::from_json(missing), VersionError);
}

TEST_CASE("canonical payload drops timings only") {
    RunReport a = sample_report("recov");
    RunReport b = sample_report("recov");
    b.total_seconds = 9999.0;
    CHECK(a.canonical_payload() == b.canonical_payload());
    CHECK(a.to_json() != b.to_json());
}

TEST_CASE("malformed report documents surface as structured errors") {
    testutil::TempDir tmp;
    const auto path = tmp.file("broken.json");
    testutil::write_text(path, "{not json");
    CHECK_THROWS_AS(load_report(path), IoError);
    const auto path2 = tmp.file("incomplete.json");
    testutil::write_text(path2, R"({"version":"recov-report/1","mode":"recov"})");
    CHECK_THROWS_AS(load_report(path2), ValidationError);
}

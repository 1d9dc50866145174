#include "doctest.h"
#include "support.hpp"

#include "orbench/errors.hpp"
#include "orbench/ingest.hpp"
#include "orbench/qagen.hpp"
#include "orbench/simulator.hpp"

#include <fstream>
#include <set>
#include <sstream>

using namespace orbench;
namespace ts = testing_support;

namespace {

std::string serialize(const ingest::AnnotationFile& f) {
    std::string out = ingest::header_to_line(f.header) + "\n";
    for (const auto& r : f.records) out += ingest::record_to_line(r) + "\n";
    return out;
}

bool breach_answer(const TimepointRecord& r) {
    return qagen::gen_sterility_breach(r, qagen::GenConfig{}).front().answer == "true";
}

} // namespace

TEST_CASE("same seed gives byte-identical output, thread count does not matter") {
    sim::SimulatorConfig cfg;
    cfg.seed = 1;
    cfg.n_clips = 2;
    cfg.timepoints_per_clip = 50;
    const auto a = serialize(sim::simulate_procedures(cfg, 1));
    const auto b = serialize(sim::simulate_procedures(cfg, 1));
    const auto c = serialize(sim::simulate_procedures(cfg, 4));
    CHECK(a == b);
    CHECK(a == c);
    cfg.seed = 2;
    CHECK(serialize(sim::simulate_procedures(cfg)) != a);
}

TEST_CASE("breach rate zero yields no breach answers") {
    sim::SimulatorConfig cfg;
    cfg.sterility_breach_rate = 0.0;
    cfg.n_clips = 10;
    for (const auto& r : sim::simulate_procedures(cfg).records) CHECK_FALSE(breach_answer(r));
}

TEST_CASE("output satisfies every record invariant over 100 seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        sim::SimulatorConfig cfg;
        cfg.seed = seed;
        cfg.n_clips = 2;
        cfg.timepoints_per_clip = 20;
        const auto f = sim::simulate_procedures(cfg);
        REQUIRE(f.records.size() == 40);
        std::map<std::string, double> last;
        for (const auto& r : f.records) {
            CHECK_NOTHROW(ingest::validate_record(r));
            if (last.count(r.clip_id)) CHECK(r.time_s > last[r.clip_id]);
            last[r.clip_id] = r.time_s;
            for (const auto& e : r.entities) {
                REQUIRE(e.centroid3d.has_value());
                CHECK(e.centroid3d->x >= 0.0);
                CHECK(e.centroid3d->x <= cfg.room_extent_m.x);
                CHECK(e.centroid3d->y >= 0.0);
                CHECK(e.centroid3d->y <= cfg.room_extent_m.y);
                CHECK(e.centroid3d->z >= 0.0);
                CHECK(e.centroid3d->z <= cfg.room_extent_m.z);
            }
        }
    }
}

TEST_CASE("phase timeline is contiguous and covers the clip") {
    sim::SimulatorConfig cfg;
    cfg.n_clips = 3;
    const auto f = sim::simulate_procedures(cfg);
    std::set<std::string> seen;
    for (const auto& r : f.records) {
        if (!seen.insert(r.clip_id).second) continue;
        std::vector<TimelineEvent> phases;
        bool has_robot = false;
        for (const auto& e : r.timeline) {
            if (e.kind == EventKind::phase) phases.push_back(e);
            has_robot = has_robot || e.kind == EventKind::robot_step;
        }
        CHECK(has_robot);
        REQUIRE(phases.size() == cfg.phase_vocab.size());
        CHECK(phases.front().start_s == doctest::Approx(0.0));
        for (std::size_t i = 1; i < phases.size(); ++i) CHECK(phases[i].start_s == doctest::Approx(phases[i - 1].end_s));
        CHECK(phases.back().end_s >= cfg.timepoints_per_clip * cfg.timepoint_interval_s - 1e-9);
    }
}

TEST_CASE("breach rate matches configuration within 2% over 6000 timepoints") {
    for (double rate : {0.1, 0.3}) {
        sim::SimulatorConfig cfg;
        cfg.seed = 11;
        cfg.sterility_breach_rate = rate;
        cfg.n_clips = 100;
        cfg.timepoints_per_clip = 60;
        const auto f = sim::simulate_procedures(cfg);
        std::size_t breaches = 0;
        for (const auto& r : f.records) breaches += breach_answer(r);
        const double observed = static_cast<double>(breaches) / static_cast<double>(f.records.size());
        MESSAGE("rate " << rate << " observed " << observed);
        CHECK(std::abs(observed - rate) <= 0.02);
    }
}

TEST_CASE("gaze lands on a tool box in at least half the timepoints") {
    sim::SimulatorConfig cfg;
    cfg.n_clips = 20;
    const auto f = sim::simulate_procedures(cfg);
    std::size_t with_gaze = 0, on_tool = 0;
    for (const auto& r : f.records) {
        if (!r.gaze) continue;
        ++with_gaze;
        bool hit = false;
        for (const auto& e : r.entities) {
            if (e.category != EntityCategory::tool) continue;
            auto it = e.bbox2d.find(r.gaze->view);
            hit = hit || (it != e.bbox2d.end() && it->second.contains(r.gaze->x, r.gaze->y));
        }
        on_tool += hit;
    }
    REQUIRE(with_gaze > 0);
    CHECK(static_cast<double>(on_tool) / static_cast<double>(f.records.size()) >= 0.5);
}

TEST_CASE("scene graphs follow the phase grammar") {
    sim::SimulatorConfig cfg;
    cfg.n_clips = 4;
    const auto f = sim::simulate_procedures(cfg);
    std::set<std::string> allowed_any{"holding", "touching", "assisting", "monitoring", "preparing", "lying_on"};
    for (const auto& r : f.records) {
        std::size_t phase_index = 0;
        for (const auto& e : r.timeline) {
            if (e.kind != EventKind::phase) continue;
            if (e.active_at(r.time_s)) break;
            ++phase_index;
        }
        const auto phase_preds = sim::phase_predicates(phase_index);
        for (const auto& t : r.scene_graph) {
            if (t.object != "patient" || t.predicate == "lying_on") continue;
            const bool ok = allowed_any.count(t.predicate) ||
                            std::find(phase_preds.begin(), phase_preds.end(), t.predicate) != phase_preds.end();
            CHECK_MESSAGE(ok, r.locus() << " " << t.predicate);
        }
    }
}

TEST_CASE("default output is generatable for every task") {
    const auto f = sim::simulate_procedures(sim::SimulatorConfig{});
    std::set<TaskKind> tasks;
    for (const auto& p : qagen::generate_all(f.records, qagen::GenConfig{})) tasks.insert(p.task);
    CHECK(tasks.size() == kTaskCount);
}

TEST_CASE("invalid configurations are rejected") {
    auto expect_usage = [](auto mutate) {
        sim::SimulatorConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), UsageError);
    };
    expect_usage([](auto& c) { c.n_clips = 0; });
    expect_usage([](auto& c) { c.timepoints_per_clip = 0; });
    expect_usage([](auto& c) { c.tool_vocab.clear(); });
    expect_usage([](auto& c) { c.sterility_breach_rate = 1.5; });
    expect_usage([](auto& c) { c.phase_vocab.push_back("Bad Label"); });
    expect_usage([](auto& c) { c.role_vocab = {"head_surgeon"}; });
    expect_usage([](auto& c) { c.room_extent_m.x = 0; });
}

#include "doctest.h"
#include "oracle/oracle.hpp"
#include "support.hpp"

#include "orbench/answers.hpp"
#include "orbench/errors.hpp"
#include "orbench/qagen.hpp"
#include "orbench/simulator.hpp"

#include <set>

using namespace orbench;
namespace ts = testing_support;

namespace {

std::string only_answer(const std::vector<QAPair>& pairs) {
    REQUIRE(pairs.size() == 1);
    return pairs.front().answer;
}

std::map<std::string, std::string> by_question(const std::vector<QAPair>& pairs) {
    std::map<std::string, std::string> m;
    for (const auto& p : pairs) m[p.question] = p.answer;
    return m;
}

Entity person(const std::string& label) {
    return Entity{label, label, EntityCategory::person, label, {}, std::nullopt, {}, std::nullopt};
}

Entity tool(const std::string& label, BBox box) {
    return Entity{label, label, EntityCategory::tool, std::nullopt, {}, std::nullopt, {{"cam_1", box}}, true};
}

std::vector<TimepointRecord> corpus() {
    sim::SimulatorConfig cfg;
    cfg.seed = 3;
    cfg.n_clips = 4;
    cfg.timepoints_per_clip = 60;
    return sim::simulate_procedures(cfg).records;
}

} // namespace

TEST_CASE("people counting") {
    auto r = ts::basic_record();
    r.entities = {person("a"), person("b"), person("c"), person("d")};
    r.scene_graph.clear();
    CHECK(only_answer(qagen::gen_people_counting(r, {})) == "4");
    r.entities.clear();
    CHECK(only_answer(qagen::gen_people_counting(r, {})) == "0");
}

TEST_CASE("distance between centroids") {
    auto r = ts::basic_record();
    r.scene_graph.clear();
    r.entities = {person("a"), person("b")};
    r.entities[0].centroid3d = Vec3{0, 0, 0};
    r.entities[1].centroid3d = Vec3{3, 4, 0};
    auto pairs = qagen::gen_distance_3d(r, {});
    CHECK(only_answer(pairs) == "5.00");
    CHECK(pairs.front().question.find("a") != std::string::npos);
    r.entities[1].centroid3d = Vec3{0, 0, 0};
    CHECK(only_answer(qagen::gen_distance_3d(r, {})) == "0.00");
    r.entities[1].centroid3d.reset();
    CHECK(qagen::gen_distance_3d(r, {}).empty());
}

TEST_CASE("sterility breach") {
    auto r = ts::basic_record();
    CHECK(only_answer(qagen::gen_sterility_breach(r, {})) == "false");
    r.entities.push_back(Entity{"e5", "saw", EntityCategory::tool, std::nullopt, {}, std::nullopt, {}, false});
    r.scene_graph.push_back({"head_surgeon", "touching", "saw"});
    CHECK(only_answer(qagen::gen_sterility_breach(r, {})) == "true");
    // non-contact predicate does not count
    r.scene_graph.back().predicate = "looking_at";
    CHECK(only_answer(qagen::gen_sterility_breach(r, {})) == "false");
    r.scene_graph.clear();
    CHECK(only_answer(qagen::gen_sterility_breach(r, {})) == "false");
}

TEST_CASE("gaze object") {
    auto r = ts::basic_record();
    r.scene_graph.clear();
    r.entities = {tool("outer", BBox{100, 100, 200, 200}), tool("inner", BBox{150, 150, 20, 20}),
                  tool("far", BBox{800, 500, 50, 50})};
    r.gaze = Gaze{820, 520, "cam_1"};
    CHECK(only_answer(qagen::gen_gaze_object(r, {})) == "far");
    r.gaze = Gaze{10, 10, "cam_1"};
    CHECK(only_answer(qagen::gen_gaze_object(r, {})) == "none");
    r.gaze = Gaze{155, 155, "cam_1"};
    CHECK(only_answer(qagen::gen_gaze_object(r, {})) == "inner");
    CHECK(only_answer(qagen::gen_gaze_location(r, {})) == "155,155");
}

TEST_CASE("temporal questions") {
    auto r = ts::basic_record(10.0);
    const auto until = by_question(qagen::gen_estimate_time_until(r, {}));
    REQUIRE(until.size() == 1);
    CHECK(until.at(qagen::question_for(TaskKind::EstimateTimeUntil, {"suturing"})) == "15");
    CHECK(only_answer(qagen::gen_estimate_status(r, {})) == "50");
    const auto done = by_question(qagen::gen_is_completed(r, {}));
    CHECK(done.at(qagen::question_for(TaskKind::IsCompleted, {"drilling"})) == "false");
    CHECK(done.at(qagen::question_for(TaskKind::IsCompleted, {"suturing"})) == "false");

    auto later = ts::basic_record(20.0);
    CHECK(by_question(qagen::gen_is_completed(later, {})).at(qagen::question_for(TaskKind::IsCompleted, {"drilling"})) ==
          "true");
    CHECK(qagen::gen_estimate_status(later, {}).empty());
    CHECK(only_answer(qagen::gen_action_detection(later, {})) == "none");
    // boundary instants are excluded from status
    CHECK(qagen::gen_estimate_status(ts::basic_record(5.0), {}).empty());
}

TEST_CASE("sorted entities follow bbox-center x") {
    auto r = ts::basic_record();
    r.scene_graph.clear();
    r.entities = {tool("b", BBox{30, 0, 20, 10}), tool("a", BBox{0, 0, 20, 10}), tool("c", BBox{290, 0, 20, 10})};
    // centers 40, 10, 300
    CHECK(only_answer(qagen::gen_sorted_entity_detection(r, {})) == "a,b,c");
}

TEST_CASE("robot flags and data-absence silence") {
    auto r = ts::basic_record();
    CHECK(qagen::gen_is_robot_calibrated(r, {}).empty());
    r.robot_flags["calibrated"] = true;
    CHECK(only_answer(qagen::gen_is_robot_calibrated(r, {})) == "true");

    std::set<TaskKind> tasks;
    for (const auto& p : qagen::generate_for_record(ts::basic_record(), {})) tasks.insert(p.task);
    CHECK_FALSE(tasks.count(TaskKind::GazeLocation));
    CHECK_FALSE(tasks.count(TaskKind::GazeObjectDetection));
    CHECK_FALSE(tasks.count(TaskKind::MonitorTextOCR));
    CHECK(tasks.count(TaskKind::PeopleCounting));
}

TEST_CASE("remaining per-record answers") {
    const auto r = ts::basic_record();
    CHECK(only_answer(qagen::gen_role_detection(r, {})) == "circulating_nurse,head_surgeon");
    CHECK(only_answer(qagen::gen_tool_detection(r, {})) == "drill");
    CHECK(only_answer(qagen::gen_scene_graph(r, {})) == "(head_surgeon,drill,holding);(head_surgeon,patient,drilling)");
    CHECK(only_answer(qagen::gen_entity_detection(r, {})) == "circulating_nurse,drill,head_surgeon,patient");
    CHECK(only_answer(qagen::gen_action_detection(r, {})) == "drilling");
    const auto attrs = by_question(qagen::gen_attribute_detection(r, {}));
    CHECK(attrs.at(qagen::question_for(TaskKind::AttributeDetection, {"color", "drill"})) == "silver");
    const auto boxes = by_question(qagen::gen_detection_2d(r, {}));
    CHECK(boxes.at(qagen::question_for(TaskKind::Detection2D, {"drill", "cam_1"})) == "150,200,20,20");
    const auto centers = by_question(qagen::gen_detection_3d(r, {}));
    CHECK(centers.at(qagen::question_for(TaskKind::Detection3D, {"drill"})) == "1.00,1.00,1.20");
}

TEST_CASE("invalid generation config") {
    qagen::GenConfig cfg;
    cfg.negative_pair_rate = -0.1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = {};
    cfg.distance_round_dp = 5;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("generation is deterministic and thread-independent") {
    const auto records = corpus();
    const auto a = qagen::generate_all(records, {}, 1);
    const auto b = qagen::generate_all(records, {}, 4);
    CHECK(a == b);
    std::vector<QAPair> streamed;
    std::size_t i = 0;
    qagen::generate_stream(
        [&](TimepointRecord& r) {
            if (i == records.size()) return false;
            r = records[i++];
            return true;
        },
        {}, [&](const QAPair& p) { streamed.push_back(p); }, 2, 7);
    CHECK(streamed == a);
}

TEST_CASE("every answer conforms to the wire grammar (closed loop)") {
    std::size_t failures = 0, n = 0;
    for (const auto& p : qagen::generate_all(corpus(), {})) {
        ++n;
        if (!answers::conforms(p.task, p.answer)) {
            ++failures;
            MESSAGE(task_name(p.task) << ": " << p.answer);
        }
    }
    CHECK(n > 0);
    CHECK(failures == 0);
}

TEST_CASE("answers match an independent re-derivation for every task") {
    const qagen::GenConfig cfg;
    for (const auto& r : corpus()) {
        for (auto task : all_tasks()) {
            const auto got = qagen::generate_task(task, r, cfg);
            const auto expected = oracle::derive(r, task, cfg.distance_round_dp, cfg.contact_predicates);
            if (task == TaskKind::InteractionDetection) {
                std::size_t positives = 0;
                for (const auto& p : got) {
                    auto it = expected.find(p.question);
                    if (it == expected.end()) {
                        CHECK(p.answer == "none");
                    } else {
                        ++positives;
                        CHECK(p.answer == it->second);
                    }
                }
                CHECK(positives == expected.size());
                continue;
            }
            const auto actual = by_question(got);
            CHECK_MESSAGE(actual == expected, r.locus() << " " << task_name(task));
        }
    }
}

TEST_CASE("no pair references a label absent from its record") {
    for (const auto& r : corpus()) {
        std::set<std::string> labels;
        for (const auto& e : r.entities) labels.insert(e.label);
        auto pairs = qagen::gen_interaction_detection(r, {});
        for (const auto& p : qagen::gen_distance_3d(r, {})) pairs.push_back(p);
        for (const auto& p : qagen::gen_detection_3d(r, {})) pairs.push_back(p);
        for (const auto& p : pairs) {
            // questions name entities as "the <label>"
            std::size_t pos = 0;
            while ((pos = p.question.find("the ", pos)) != std::string::npos) {
                pos += 4;
                const auto end = p.question.find_first_of(" ?", pos);
                const auto word = p.question.substr(pos, end - pos);
                if (word == "interaction" || word == "distance" || word == "3D") continue;
                CHECK_MESSAGE(labels.count(word), p.question);
            }
        }
        for (const auto& p : qagen::gen_entity_detection(r, {})) {
            for (const auto& l : answers::parse_label_list(p.answer)) CHECK(labels.count(l));
        }
    }
}

TEST_CASE("default simulator corpus covers all 23 tasks") {
    std::set<TaskKind> tasks;
    for (const auto& p : qagen::generate_all(sim::simulate_procedures({}).records, {})) tasks.insert(p.task);
    CHECK(tasks.size() == kTaskCount);
}

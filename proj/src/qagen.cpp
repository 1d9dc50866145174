#include "orbench/qagen.hpp"

#include "orbench/answers.hpp"
#include "orbench/errors.hpp"
#include "orbench/hashing.hpp"
#include "orbench/memory.hpp"
#include "orbench/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace orbench::qagen {

namespace {

using GenFn = std::vector<QAPair> (*)(const TimepointRecord&, const GenConfig&);

const std::string& slot(const std::vector<std::string>& slots, std::size_t i) {
    if (i >= slots.size()) throw UsageError("question template needs more slot values");
    return slots[i];
}

QAPair make_pair(const TimepointRecord& r, TaskKind task, std::string question, std::string answer) {
    QAPair p;
    p.id = make_qa_id(r.dataset, r.clip_id, r.timepoint_id, task, question);
    p.task = task;
    p.question = std::move(question);
    p.answer = std::move(answer);
    p.dataset = r.dataset;
    p.clip_id = r.clip_id;
    p.timepoint_id = r.timepoint_id;
    return p;
}

std::vector<QAPair> single(const TimepointRecord& r, TaskKind task, std::string answer) {
    return {make_pair(r, task, question_for(task), std::move(answer))};
}

bool has_events(const TimepointRecord& r, EventKind kind) {
    return std::any_of(r.timeline.begin(), r.timeline.end(), [&](const TimelineEvent& e) { return e.kind == kind; });
}

const TimelineEvent* active_event(const TimepointRecord& r, EventKind kind) {
    for (const auto& e : r.timeline) {
        if (e.kind == kind && e.active_at(r.time_s)) return &e;
    }
    return nullptr;
}

bool is_contact(const GenConfig& cfg, const std::string& predicate) {
    return std::find(cfg.contact_predicates.begin(), cfg.contact_predicates.end(), predicate) !=
           cfg.contact_predicates.end();
}

std::vector<std::string> detection_views(const TimepointRecord& r, const GenConfig& cfg) {
    if (!cfg.views.empty()) return cfg.views;
    if (r.reference_view.empty()) return {};
    return {r.reference_view};
}

constexpr std::array<GenFn, kTaskCount> kGenerators = {
    gen_people_counting,     gen_role_detection,     gen_interaction_detection, gen_attribute_detection,
    gen_action_detection,    gen_estimate_time_until, gen_estimate_status,      gen_is_completed,
    gen_is_base_array_visible, gen_is_robot_calibrated, gen_sterility_breach,   gen_robot_step_detection,
    gen_next_robot_step,     gen_detection_2d,       gen_detection_3d,          gen_distance_3d,
    gen_tool_detection,      gen_scene_graph,        gen_entity_detection,      gen_sorted_entity_detection,
    gen_gaze_location,       gen_gaze_object,        gen_monitor_text,
};

} // namespace

void GenConfig::validate() const {
    if (!(negative_pair_rate >= 0.0 && negative_pair_rate <= 1.0)) throw UsageError("qagen: negative_pair_rate must lie in [0,1]");
    if (distance_round_dp < 0 || distance_round_dp > 4) throw UsageError("qagen: distance_round_dp must lie in [0,4]");
}

std::string question_for(TaskKind task, const std::vector<std::string>& s) {
    switch (task) {
        case TaskKind::PeopleCounting: return "How many people are in the operating room?";
        case TaskKind::RoleDetection: return "What are the roles of the people in the operating room?";
        case TaskKind::InteractionDetection:
            return "What is the interaction between the " + slot(s, 0) + " and the " + slot(s, 1) + "?";
        case TaskKind::AttributeDetection: return "What is the " + slot(s, 0) + " of the " + slot(s, 1) + "?";
        case TaskKind::ActionDetection: return "What is the current action?";
        case TaskKind::EstimateTimeUntil: return "How many seconds until " + slot(s, 0) + " starts?";
        case TaskKind::EstimateStatus: return "What is the progress of the current action in percent?";
        case TaskKind::IsCompleted: return "Has " + slot(s, 0) + " already been performed?";
        case TaskKind::IsBaseArrayVisible: return "Is the robot base array visible?";
        case TaskKind::IsRobotCalibrated: return "Is the robot calibrated?";
        case TaskKind::SterilityBreachDetection: return "Is there a sterility breach?";
        case TaskKind::RobotStepDetection: return "What is the current robot step?";
        case TaskKind::NextRobotStepEstimation: return "What is the next robot step?";
        case TaskKind::Detection2D:
            return "What is the bounding box of the " + slot(s, 0) + " in view " + slot(s, 1) + "?";
        case TaskKind::Detection3D: return "What is the 3D center point of the " + slot(s, 0) + "?";
        case TaskKind::Distance3D: return "What is the distance between the " + slot(s, 0) + " and the " + slot(s, 1) + "?";
        case TaskKind::ToolDetection: return "Which tools are currently used?";
        case TaskKind::SceneGraphGeneration: return "What is the current scene graph?";
        case TaskKind::EntityDetection: return "Which entities are in the operating room?";
        case TaskKind::SortedEntityDetection: return "Which entities are in the operating room, from left to right?";
        case TaskKind::GazeLocation: return "Where is the surgeon looking in view " + slot(s, 0) + "?";
        case TaskKind::GazeObjectDetection: return "What is the surgeon looking at?";
        case TaskKind::MonitorTextOCR: return "What is shown on the monitor?";
    }
    throw UsageError("unknown task");
}

std::vector<QAPair> gen_people_counting(const TimepointRecord& r, const GenConfig&) {
    const auto n = std::count_if(r.entities.begin(), r.entities.end(),
                                 [](const Entity& e) { return e.category == EntityCategory::person; });
    return single(r, TaskKind::PeopleCounting, std::to_string(n));
}

std::vector<QAPair> gen_role_detection(const TimepointRecord& r, const GenConfig&) {
    std::vector<std::string> roles;
    for (const auto& e : r.entities) {
        if (e.category == EntityCategory::person && e.role) roles.push_back(normalize_label(*e.role));
    }
    return single(r, TaskKind::RoleDetection, answers::format_set(std::move(roles)));
}

std::vector<QAPair> gen_interaction_detection(const TimepointRecord& r, const GenConfig& cfg) {
    std::map<std::pair<std::string, std::string>, std::string> edges;
    for (const auto& t : r.scene_graph) {
        auto [it, inserted] = edges.try_emplace({t.subject, t.object}, t.predicate);
        if (!inserted && t.predicate < it->second) it->second = t.predicate;
    }
    std::vector<QAPair> out;
    for (const auto& [pair, predicate] : edges) {
        out.push_back(make_pair(r, TaskKind::InteractionDetection,
                                question_for(TaskKind::InteractionDetection, {pair.first, pair.second}), predicate));
    }
    if (cfg.negative_pair_rate <= 0.0) return out;
    const auto base = hashing::derive_seed(cfg.seed, "negatives/" + r.locus());
    for (const auto& s : r.entities) {
        if (s.category != EntityCategory::person) continue;
        for (const auto& o : r.entities) {
            if (&s == &o || edges.count({s.label, o.label})) continue;
            const auto h = hashing::combine(base, hashing::fnv1a64(s.label + "\x1f" + o.label));
            if (hashing::unit_open(h) >= cfg.negative_pair_rate) continue;
            out.push_back(make_pair(r, TaskKind::InteractionDetection,
                                    question_for(TaskKind::InteractionDetection, {s.label, o.label}),
                                    std::string(answers::kNone)));
        }
    }
    return out;
}

std::vector<QAPair> gen_attribute_detection(const TimepointRecord& r, const GenConfig&) {
    std::vector<QAPair> out;
    for (const auto& e : r.entities) {
        for (const auto& [name, value] : e.attributes) {
            if (value.empty()) continue;
            out.push_back(make_pair(r, TaskKind::AttributeDetection,
                                    question_for(TaskKind::AttributeDetection, {name, e.label}), normalize_label(value)));
        }
    }
    return out;
}

std::vector<QAPair> gen_action_detection(const TimepointRecord& r, const GenConfig&) {
    if (!has_events(r, EventKind::action)) return {};
    const auto* ev = active_event(r, EventKind::action);
    return single(r, TaskKind::ActionDetection, ev ? ev->name : std::string(answers::kNone));
}

std::vector<QAPair> gen_estimate_time_until(const TimepointRecord& r, const GenConfig&) {
    // Nearest upcoming start per action name.
    std::map<std::string, double> next_start;
    for (const auto& e : r.timeline) {
        if (e.kind != EventKind::action || !(e.start_s > r.time_s)) continue;
        auto [it, inserted] = next_start.try_emplace(e.name, e.start_s);
        if (!inserted) it->second = std::min(it->second, e.start_s);
    }
    std::vector<QAPair> out;
    for (const auto& [name, start] : next_start) {
        out.push_back(make_pair(r, TaskKind::EstimateTimeUntil, question_for(TaskKind::EstimateTimeUntil, {name}),
                                std::to_string(std::llround(start - r.time_s))));
    }
    return out;
}

std::vector<QAPair> gen_estimate_status(const TimepointRecord& r, const GenConfig&) {
    for (const auto& e : r.timeline) {
        if (e.kind != EventKind::action || !e.contains_strictly(r.time_s)) continue;
        const auto pct = std::llround(100.0 * (r.time_s - e.start_s) / (e.end_s - e.start_s));
        return single(r, TaskKind::EstimateStatus, std::to_string(pct));
    }
    return {};
}

std::vector<QAPair> gen_is_completed(const TimepointRecord& r, const GenConfig&) {
    std::map<std::string, bool> done;
    for (const auto& e : r.timeline) {
        if (e.kind != EventKind::action) continue;
        done[e.name] = done[e.name] || e.end_s <= r.time_s;
    }
    std::vector<QAPair> out;
    for (const auto& [name, completed] : done) {
        out.push_back(make_pair(r, TaskKind::IsCompleted, question_for(TaskKind::IsCompleted, {name}),
                                answers::format_bool(completed)));
    }
    return out;
}

std::vector<QAPair> gen_is_base_array_visible(const TimepointRecord& r, const GenConfig&) {
    auto it = r.robot_flags.find("base_array_visible");
    if (it == r.robot_flags.end()) return {};
    return single(r, TaskKind::IsBaseArrayVisible, answers::format_bool(it->second));
}

std::vector<QAPair> gen_is_robot_calibrated(const TimepointRecord& r, const GenConfig&) {
    auto it = r.robot_flags.find("calibrated");
    if (it == r.robot_flags.end()) return {};
    return single(r, TaskKind::IsRobotCalibrated, answers::format_bool(it->second));
}

std::vector<QAPair> gen_sterility_breach(const TimepointRecord& r, const GenConfig& cfg) {
    bool breach = false;
    for (const auto& t : r.scene_graph) {
        if (!is_contact(cfg, t.predicate)) continue;
        const auto* s = r.find_entity(t.subject);
        const auto* o = r.find_entity(t.object);
        if (!s || !o || !s->sterile || !o->sterile) continue;
        if (*s->sterile != *o->sterile) {
            breach = true;
            break;
        }
    }
    return single(r, TaskKind::SterilityBreachDetection, answers::format_bool(breach));
}

std::vector<QAPair> gen_robot_step_detection(const TimepointRecord& r, const GenConfig&) {
    if (!has_events(r, EventKind::robot_step)) return {};
    const auto* ev = active_event(r, EventKind::robot_step);
    return single(r, TaskKind::RobotStepDetection, ev ? ev->name : std::string(answers::kNone));
}

std::vector<QAPair> gen_next_robot_step(const TimepointRecord& r, const GenConfig&) {
    if (!has_events(r, EventKind::robot_step)) return {};
    const TimelineEvent* next = nullptr;
    for (const auto& e : r.timeline) {
        if (e.kind != EventKind::robot_step || !(e.start_s > r.time_s)) continue;
        if (!next || e.start_s < next->start_s) next = &e;
    }
    return single(r, TaskKind::NextRobotStepEstimation, next ? next->name : std::string(answers::kNone));
}

std::vector<QAPair> gen_detection_2d(const TimepointRecord& r, const GenConfig& cfg) {
    std::vector<QAPair> out;
    for (const auto& view : detection_views(r, cfg)) {
        for (const auto& e : r.entities) {
            auto it = e.bbox2d.find(view);
            if (it == e.bbox2d.end()) continue;
            out.push_back(make_pair(r, TaskKind::Detection2D, question_for(TaskKind::Detection2D, {e.label, view}),
                                    answers::format_bbox(it->second)));
        }
    }
    return out;
}

std::vector<QAPair> gen_detection_3d(const TimepointRecord& r, const GenConfig& cfg) {
    std::vector<QAPair> out;
    for (const auto& e : r.entities) {
        if (!e.centroid3d) continue;
        out.push_back(make_pair(r, TaskKind::Detection3D, question_for(TaskKind::Detection3D, {e.label}),
                                answers::format_point3(*e.centroid3d, cfg.distance_round_dp)));
    }
    return out;
}

std::vector<QAPair> gen_distance_3d(const TimepointRecord& r, const GenConfig& cfg) {
    std::vector<const Entity*> located;
    for (const auto& e : r.entities) {
        if (e.centroid3d) located.push_back(&e);
    }
    std::sort(located.begin(), located.end(), [](const Entity* a, const Entity* b) { return a->label < b->label; });
    std::vector<QAPair> out;
    for (std::size_t i = 0; i < located.size(); ++i) {
        for (std::size_t j = i + 1; j < located.size(); ++j) {
            const double d = euclidean_distance(*located[i]->centroid3d, *located[j]->centroid3d);
            out.push_back(make_pair(r, TaskKind::Distance3D,
                                    question_for(TaskKind::Distance3D, {located[i]->label, located[j]->label}),
                                    answers::format_fixed(d, cfg.distance_round_dp)));
        }
    }
    return out;
}

std::vector<QAPair> gen_tool_detection(const TimepointRecord& r, const GenConfig& cfg) {
    std::vector<std::string> tools;
    for (const auto& t : r.scene_graph) {
        if (!is_contact(cfg, t.predicate)) continue;
        for (const std::string* endpoint : {&t.subject, &t.object}) {
            const auto* e = r.find_entity(*endpoint);
            if (e && e->category == EntityCategory::tool) tools.push_back(e->label);
        }
    }
    return single(r, TaskKind::ToolDetection, answers::format_set(std::move(tools)));
}

std::vector<QAPair> gen_scene_graph(const TimepointRecord& r, const GenConfig&) {
    return single(r, TaskKind::SceneGraphGeneration, answers::format_triplets(r.scene_graph));
}

std::vector<QAPair> gen_entity_detection(const TimepointRecord& r, const GenConfig&) {
    std::vector<std::string> labels;
    for (const auto& e : r.entities) labels.push_back(e.label);
    return single(r, TaskKind::EntityDetection, answers::format_set(std::move(labels)));
}

std::vector<QAPair> gen_sorted_entity_detection(const TimepointRecord& r, const GenConfig&) {
    if (r.reference_view.empty()) return {};
    std::vector<std::pair<double, std::string>> placed;
    for (const auto& e : r.entities) {
        auto it = e.bbox2d.find(r.reference_view);
        if (it != e.bbox2d.end()) placed.emplace_back(it->second.center_x(), e.label);
    }
    if (placed.empty()) return {};
    std::sort(placed.begin(), placed.end());
    std::vector<std::string> labels;
    for (auto& [x, label] : placed) labels.push_back(std::move(label));
    return single(r, TaskKind::SortedEntityDetection, answers::format_sequence(labels));
}

std::vector<QAPair> gen_gaze_location(const TimepointRecord& r, const GenConfig&) {
    if (!r.gaze) return {};
    return {make_pair(r, TaskKind::GazeLocation, question_for(TaskKind::GazeLocation, {r.gaze->view}),
                      std::to_string(r.gaze->x) + "," + std::to_string(r.gaze->y))};
}

std::vector<QAPair> gen_gaze_object(const TimepointRecord& r, const GenConfig&) {
    if (!r.gaze) return {};
    const Entity* best = nullptr;
    long long best_area = 0;
    for (const auto& e : r.entities) {
        if (e.category != EntityCategory::tool) continue;
        auto it = e.bbox2d.find(r.gaze->view);
        if (it == e.bbox2d.end() || !it->second.contains(r.gaze->x, r.gaze->y)) continue;
        const auto area = it->second.area();
        if (!best || area < best_area || (area == best_area && e.label < best->label)) {
            best = &e;
            best_area = area;
        }
    }
    return single(r, TaskKind::GazeObjectDetection, best ? best->label : std::string(answers::kNone));
}

std::vector<QAPair> gen_monitor_text(const TimepointRecord& r, const GenConfig&) {
    if (!r.monitor_text) return {};
    return single(r, TaskKind::MonitorTextOCR, *r.monitor_text);
}

std::vector<QAPair> generate_task(TaskKind task, const TimepointRecord& r, const GenConfig& cfg) {
    return kGenerators.at(static_cast<std::size_t>(task))(r, cfg);
}

std::vector<QAPair> generate_for_record(const TimepointRecord& r, const GenConfig& cfg) {
    std::vector<QAPair> out;
    for (auto task : all_tasks()) {
        auto pairs = generate_task(task, r, cfg);
        std::sort(pairs.begin(), pairs.end(), [](const QAPair& a, const QAPair& b) { return a.question < b.question; });
        for (auto& p : pairs) out.push_back(std::move(p));
    }
    return out;
}

void generate_stream(const std::function<bool(TimepointRecord&)>& next, const GenConfig& cfg,
                     const std::function<void(const QAPair&)>& emit, unsigned threads, std::size_t batch_size) {
    cfg.validate();
    if (batch_size == 0) batch_size = 1;
    std::optional<memory::MemoryTracker> tracker;
    if (cfg.memory_k > 0) tracker.emplace(cfg.memory_k);

    std::vector<TimepointRecord> batch;
    std::vector<std::string> contexts;
    std::vector<std::vector<QAPair>> results;
    bool more = true;
    while (more) {
        batch.clear();
        contexts.clear();
        while (batch.size() < batch_size) {
            TimepointRecord r;
            if (!next(r)) {
                more = false;
                break;
            }
            if (tracker) {
                tracker->push(r);
                contexts.push_back(memory::render_memory(tracker->current()));
            }
            batch.push_back(std::move(r));
        }
        results.assign(batch.size(), {});
        parallel_for(batch.size(), threads, [&](std::size_t i) { results[i] = generate_for_record(batch[i], cfg); });
        for (std::size_t i = 0; i < results.size(); ++i) {
            for (auto& p : results[i]) {
                if (tracker) p.context = contexts[i];
                emit(p);
            }
        }
    }
}

std::vector<QAPair> generate_all(const std::vector<TimepointRecord>& records, const GenConfig& cfg, unsigned threads) {
    std::vector<QAPair> out;
    std::size_t cursor = 0;
    generate_stream(
        [&](TimepointRecord& r) {
            if (cursor >= records.size()) return false;
            r = records[cursor++];
            return true;
        },
        cfg, [&](const QAPair& p) { out.push_back(p); }, threads);
    return out;
}

} // namespace orbench::qagen

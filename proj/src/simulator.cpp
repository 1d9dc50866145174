#include "orbench/simulator.hpp"

#include "orbench/errors.hpp"
#include "orbench/hashing.hpp"
#include "orbench/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace orbench::sim {

namespace {

using hashing::Rng;

constexpr std::array<std::string_view, 7> kPhasePredicatePool = {
    "preparing", "cutting", "drilling", "sawing", "hammering", "suturing", "cleaning"};
constexpr std::array<std::string_view, 4> kColors = {"silver", "blue", "black", "green"};
constexpr std::array<std::string_view, 3> kGownColors = {"blue", "green", "teal"};

struct Size2 {
    double w;
    double h;
};

struct EquipmentSpec {
    std::string_view label;
    std::optional<bool> sterile;
    double dx, dy, z;  // offset from room center, height
    Size2 size;
};

constexpr std::array<EquipmentSpec, 4> kEquipment = {{
    {"operating_table", std::nullopt, 0.0, 0.0, 0.8, {2.0, 0.9}},
    {"instrument_table", true, 1.5, -1.2, 0.9, {1.2, 0.9}},
    {"anesthesia_machine", false, -1.8, 1.0, 1.0, {0.8, 1.5}},
    {"robot", std::nullopt, 1.2, 1.0, 1.2, {1.0, 1.8}},
}};

constexpr Size2 kPersonSize{0.6, 1.8};
constexpr Size2 kPatientSize{1.8, 0.5};
constexpr Size2 kToolSize{0.3, 0.2};

bool is_sterile_role(std::string_view role) {
    return role.find("surgeon") != std::string_view::npos || role.find("scrub") != std::string_view::npos;
}

double round_to(double v, double step) {
    return std::round(v / step) * step;
}

double round3(double v) {
    return std::round(v * 1000.0) / 1000.0;
}

Vec3 clamp_to_room(Vec3 p, const Vec3& room) {
    p.x = std::clamp(p.x, 0.05 * room.x, 0.95 * room.x);
    p.y = std::clamp(p.y, 0.05 * room.y, 0.95 * room.y);
    p.z = std::clamp(p.z, 0.05 * room.z, 0.95 * room.z);
    return p;
}

Vec3 rounded(const Vec3& p) {
    return Vec3{round3(p.x), round3(p.y), round3(p.z)};
}

// Front camera: x maps to image columns, height to rows, depth shrinks the box.
BBox project(const Vec3& c, Size2 size, const Vec3& room, const ImageDims& img) {
    const double depth_scale = 1.2 - 0.4 * (c.y / room.y);
    const double u = c.x / room.x * img.width;
    const double v = (1.0 - c.z / room.z) * img.height;
    const double pw = size.w / room.x * img.width * depth_scale;
    const double ph = size.h / room.z * img.height * depth_scale;
    int x0 = static_cast<int>(std::lround(u - pw / 2));
    int y0 = static_cast<int>(std::lround(v - ph / 2));
    int x1 = static_cast<int>(std::lround(u + pw / 2));
    int y1 = static_cast<int>(std::lround(v + ph / 2));
    x0 = std::clamp(x0, 0, img.width - 1);
    y0 = std::clamp(y0, 0, img.height - 1);
    x1 = std::clamp(x1, x0 + 1, img.width);
    y1 = std::clamp(y1, y0 + 1, img.height);
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

struct RawEvent {
    double start;
    double end;
};

// Quantizes event bounds to 0.1 s unless that would collapse or reorder events.
std::vector<RawEvent> tidy(std::vector<RawEvent> events) {
    std::vector<RawEvent> q = events;
    for (auto& e : q) {
        e.start = round_to(e.start, 0.1);
        e.end = round_to(e.end, 0.1);
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i].end > q[i].start)) return events;
        if (i > 0 && q[i].start < q[i - 1].end) return events;
    }
    return q;
}

std::vector<TimelineEvent> build_timeline(const SimulatorConfig& cfg, double duration, Rng& rng) {
    std::vector<TimelineEvent> timeline;

    const auto n_phase = cfg.phase_vocab.size();
    std::vector<double> weights(n_phase);
    double total = 0.0;
    for (auto& w : weights) total += (w = rng.uniform(0.6, 1.4));
    std::vector<RawEvent> phases;
    double cum = 0.0;
    for (std::size_t i = 0; i < n_phase; ++i) {
        const double start = duration * cum / total;
        cum += weights[i];
        const double end = (i + 1 == n_phase) ? duration : duration * cum / total;
        phases.push_back({start, end});
    }
    phases = tidy(std::move(phases));
    phases.front().start = 0.0;
    phases.back().end = duration;
    for (std::size_t i = 0; i < n_phase; ++i) {
        timeline.push_back({cfg.phase_vocab[i], EventKind::phase, phases[i].start, phases[i].end});
    }

    const auto n_action = cfg.action_vocab.size();
    const double action_slot = duration / static_cast<double>(n_action);
    std::vector<RawEvent> actions;
    for (std::size_t i = 0; i < n_action; ++i) {
        const double start = i * action_slot + rng.uniform(0.05, 0.3) * action_slot;
        actions.push_back({start, start + rng.uniform(0.4, 0.65) * action_slot});
    }
    actions = tidy(std::move(actions));
    for (std::size_t i = 0; i < n_action; ++i) {
        timeline.push_back({cfg.action_vocab[i], EventKind::action, actions[i].start, actions[i].end});
    }

    const auto n_step = cfg.robot_step_vocab.size();
    const double step_origin = 0.05 * duration;
    const double step_slot = 0.9 * duration / static_cast<double>(n_step);
    std::vector<RawEvent> steps;
    for (std::size_t i = 0; i < n_step; ++i) {
        const double start = step_origin + i * step_slot + rng.uniform(0.0, 0.1) * step_slot;
        const double end = step_origin + (i + 1) * step_slot - rng.uniform(0.0, 0.1) * step_slot;
        steps.push_back({start, end});
    }
    steps = tidy(std::move(steps));
    for (std::size_t i = 0; i < n_step; ++i) {
        timeline.push_back({cfg.robot_step_vocab[i], EventKind::robot_step, steps[i].start, steps[i].end});
    }
    return timeline;
}

std::size_t active_phase(const std::vector<TimelineEvent>& timeline, double t) {
    std::size_t index = 0;
    for (const auto& ev : timeline) {
        if (ev.kind != EventKind::phase) continue;
        if (ev.active_at(t)) return index;
        ++index;
    }
    return index == 0 ? 0 : index - 1;
}

struct Vitals {
    int hr = 75;
    int spo2 = 98;
    int sys = 120;
    int dia = 78;
    int rr = 14;

    void step(Rng& rng) {
        hr = std::clamp<int>(hr + static_cast<int>(rng.uniform_int(-3, 3)), 55, 110);
        spo2 = std::clamp<int>(spo2 + static_cast<int>(rng.uniform_int(-1, 1)), 92, 100);
        sys = std::clamp<int>(sys + static_cast<int>(rng.uniform_int(-4, 4)), 100, 140);
        dia = std::clamp<int>(dia + static_cast<int>(rng.uniform_int(-3, 3)), 60, 90);
        rr = std::clamp<int>(rr + static_cast<int>(rng.uniform_int(-1, 1)), 10, 20);
    }

    std::string text() const {
        return "HR " + std::to_string(hr) + " SpO2 " + std::to_string(spo2) + " BP " + std::to_string(sys) + "/" +
               std::to_string(dia) + " RR " + std::to_string(rr);
    }
};

// Per-clip mutable state advanced once per timepoint.
struct ClipState {
    std::vector<Vec3> person_pos;
    std::vector<bool> person_present;
    std::vector<bool> tool_present;
    std::vector<std::string> person_gown;
    std::vector<std::string> tool_color;
    std::vector<std::string> equipment_color;
    std::vector<Vec3> equipment_pos;
    bool base_array_visible = true;
    Vitals vitals;
};

bool markov_step(bool present, double p_leave, double p_return, Rng& rng) {
    return present ? !rng.bernoulli(p_leave) : rng.bernoulli(p_return);
}

} // namespace

const std::vector<std::string>& default_contact_predicates() {
    static const std::vector<std::string> preds{"holding", "touching"};
    return preds;
}

std::vector<std::string> phase_predicates(std::size_t phase_index) {
    const auto n = kPhasePredicatePool.size();
    return {std::string(kPhasePredicatePool[(2 * phase_index) % n]),
            std::string(kPhasePredicatePool[(2 * phase_index + 1) % n])};
}

void SimulatorConfig::validate() const {
    if (dataset.empty()) throw UsageError("simulator: dataset name is empty");
    if (n_clips == 0 || timepoints_per_clip == 0) throw UsageError("simulator: counts must be >= 1");
    if (!(timepoint_interval_s > 0.0)) throw UsageError("simulator: timepoint_interval_s must be > 0");
    const std::pair<const char*, const std::vector<std::string>*> vocabs[] = {
        {"phase_vocab", &phase_vocab},       {"action_vocab", &action_vocab}, {"robot_step_vocab", &robot_step_vocab},
        {"tool_vocab", &tool_vocab},         {"role_vocab", &role_vocab}};
    std::set<std::string> entity_labels{"patient"};
    for (const auto& eq : kEquipment) entity_labels.insert(std::string(eq.label));
    for (const auto& [name, vocab] : vocabs) {
        if (vocab->empty()) throw UsageError(std::string("simulator: ") + name + " is empty");
        std::set<std::string> seen;
        for (const auto& w : *vocab) {
            if (normalize_label(w) != w) throw UsageError(std::string("simulator: non-canonical entry in ") + name + ": '" + w + "'");
            if (!seen.insert(w).second) throw UsageError(std::string("simulator: duplicate entry in ") + name + ": '" + w + "'");
        }
        if (vocab == &tool_vocab || vocab == &role_vocab) {
            for (const auto& w : *vocab) {
                if (!entity_labels.insert(w).second) throw UsageError("simulator: entity label '" + w + "' is reserved or repeated");
            }
        }
    }
    if (!(sterility_breach_rate >= 0.0 && sterility_breach_rate <= 1.0)) {
        throw UsageError("simulator: sterility_breach_rate must lie in [0,1]");
    }
    if (sterility_breach_rate > 0.0 &&
        std::none_of(role_vocab.begin(), role_vocab.end(), [](const std::string& r) { return !is_sterile_role(r); })) {
        throw UsageError("simulator: sterility breaches need at least one non-sterile role");
    }
    if (!(room_extent_m.x > 0 && room_extent_m.y > 0 && room_extent_m.z > 0) || !std::isfinite(room_extent_m.x) ||
        !std::isfinite(room_extent_m.y) || !std::isfinite(room_extent_m.z)) {
        throw UsageError("simulator: room_extent_m must be positive and finite");
    }
    if (image.width < 16 || image.height < 16) throw UsageError("simulator: image must be at least 16x16");
}

std::vector<TimepointRecord> simulate_clip(const SimulatorConfig& cfg, std::size_t clip_index) {
    Rng rng(hashing::derive_seed(cfg.seed, "clip/" + std::to_string(clip_index)));
    const auto& room = cfg.room_extent_m;
    const std::string view(kReferenceView);
    const double duration = static_cast<double>(cfg.timepoints_per_clip) * cfg.timepoint_interval_s;

    char clip_buf[32];
    std::snprintf(clip_buf, sizeof clip_buf, "clip_%03zu", clip_index);
    const std::string clip_id(clip_buf);

    const auto timeline = build_timeline(cfg, duration, rng);
    const TimelineEvent* first_robot_step = nullptr;
    for (const auto& ev : timeline) {
        if (ev.kind == EventKind::robot_step) {
            first_robot_step = &ev;
            break;
        }
    }

    const auto n_roles = cfg.role_vocab.size();
    const auto n_tools = cfg.tool_vocab.size();
    const Vec3 center{room.x / 2, room.y / 2, 0.0};

    ClipState st;
    for (std::size_t i = 0; i < n_roles; ++i) {
        st.person_pos.push_back(clamp_to_room(
            Vec3{rng.uniform(0.15, 0.85) * room.x, rng.uniform(0.15, 0.85) * room.y, 0.9}, room));
        st.person_present.push_back(i == 0 || rng.bernoulli(0.8));
        st.person_gown.emplace_back(kGownColors[rng.uniform_int(0, kGownColors.size() - 1)]);
    }
    for (std::size_t i = 0; i < n_tools; ++i) {
        st.tool_present.push_back(rng.bernoulli(0.7));
        st.tool_color.emplace_back(kColors[rng.uniform_int(0, kColors.size() - 1)]);
    }
    for (const auto& eq : kEquipment) {
        st.equipment_pos.push_back(clamp_to_room(
            Vec3{center.x + eq.dx + rng.normal(0, 0.05), center.y + eq.dy + rng.normal(0, 0.05), eq.z}, room));
        st.equipment_color.emplace_back(kColors[rng.uniform_int(0, kColors.size() - 1)]);
    }
    const Vec3 table_pos = st.equipment_pos[0];
    const Vec3 instrument_table_pos = st.equipment_pos[1];

    std::vector<TimepointRecord> records;
    records.reserve(cfg.timepoints_per_clip);

    for (std::size_t tp = 0; tp < cfg.timepoints_per_clip; ++tp) {
        const double t = (static_cast<double>(tp) + 0.5) * cfg.timepoint_interval_s;
        if (tp > 0) {
            for (std::size_t i = 0; i < n_roles; ++i) {
                if (i > 0) st.person_present[i] = markov_step(st.person_present[i], 0.08, 0.3, rng);
                auto& p = st.person_pos[i];
                p = clamp_to_room(Vec3{p.x + rng.normal(0, 0.1), p.y + rng.normal(0, 0.1), 0.9}, room);
            }
            for (std::size_t i = 0; i < n_tools; ++i) st.tool_present[i] = markov_step(st.tool_present[i], 0.1, 0.25, rng);
            st.base_array_visible = markov_step(st.base_array_visible, 0.25, 0.4, rng);
            st.vitals.step(rng);
        }
        if (std::none_of(st.tool_present.begin(), st.tool_present.end(), [](bool b) { return b; })) {
            st.tool_present[static_cast<std::size_t>(rng.uniform_int(0, n_tools - 1))] = true;
        }

        const bool breach = rng.bernoulli(cfg.sterility_breach_rate);
        std::vector<bool> present = st.person_present;
        std::vector<std::size_t> non_sterile;
        for (std::size_t i = 0; i < n_roles; ++i) {
            if (!is_sterile_role(cfg.role_vocab[i])) non_sterile.push_back(i);
        }
        std::size_t breacher = n_roles;
        if (breach) {
            std::vector<std::size_t> candidates;
            for (auto i : non_sterile) {
                if (present[i]) candidates.push_back(i);
            }
            if (candidates.empty()) {
                breacher = non_sterile.front();
                present[breacher] = true;
            } else {
                breacher = candidates[static_cast<std::size_t>(rng.uniform_int(0, candidates.size() - 1))];
            }
        }

        // Scene graph from the phase-conditioned grammar.
        const auto phase_index = active_phase(timeline, t);
        const auto phase_preds = phase_predicates(phase_index);
        std::vector<Triplet> graph;
        std::set<std::pair<std::string, std::string>> used_pairs;
        auto add = [&](const std::string& s, const std::string& o, const std::string& p) {
            if (used_pairs.emplace(s, o).second) graph.push_back(Triplet{s, p, o});
        };
        add("patient", "operating_table", "lying_on");

        std::vector<std::size_t> free_tools;
        for (std::size_t i = 0; i < n_tools; ++i) {
            if (st.tool_present[i]) free_tools.push_back(i);
        }
        std::vector<std::size_t> holder_of_tool(n_tools, n_roles);
        std::vector<std::size_t> sterile_present;
        for (std::size_t i = 0; i < n_roles; ++i) {
            if (!present[i] || !is_sterile_role(cfg.role_vocab[i])) continue;
            sterile_present.push_back(i);
            const auto& who = cfg.role_vocab[i];
            if (!free_tools.empty() && rng.bernoulli(0.7)) {
                const auto pick = static_cast<std::size_t>(rng.uniform_int(0, free_tools.size() - 1));
                const auto tool = free_tools[pick];
                free_tools.erase(free_tools.begin() + static_cast<std::ptrdiff_t>(pick));
                holder_of_tool[tool] = i;
                add(who, cfg.tool_vocab[tool], "holding");
            }
            if (rng.bernoulli(0.5)) {
                add(who, "patient", phase_preds[static_cast<std::size_t>(rng.uniform_int(0, phase_preds.size() - 1))]);
            }
        }
        if (sterile_present.size() >= 2 && rng.bernoulli(0.5)) {
            add(cfg.role_vocab[sterile_present[1]], cfg.role_vocab[sterile_present[0]], "assisting");
        }
        for (auto i : non_sterile) {
            if (!present[i]) continue;
            if (cfg.role_vocab[i].find("anesthet") != std::string::npos) {
                if (rng.bernoulli(0.6)) add(cfg.role_vocab[i], "anesthesia_machine", "monitoring");
            } else if (rng.bernoulli(0.4)) {
                add(cfg.role_vocab[i], "instrument_table", "preparing");
            }
        }
        if (breach) {
            std::vector<std::size_t> tools;
            for (std::size_t i = 0; i < n_tools; ++i) {
                if (st.tool_present[i]) tools.push_back(i);
            }
            const auto tool = tools[static_cast<std::size_t>(rng.uniform_int(0, tools.size() - 1))];
            add(cfg.role_vocab[breacher], cfg.tool_vocab[tool], "touching");
        }

        // Entities.
        TimepointRecord r;
        r.dataset = cfg.dataset;
        r.clip_id = clip_id;
        char tp_buf[32];
        std::snprintf(tp_buf, sizeof tp_buf, "tp_%04zu", tp);
        r.timepoint_id = tp_buf;
        r.time_s = t;
        r.reference_view = view;
        r.image_dims[view] = cfg.image;

        auto make_entity = [&](const std::string& label, EntityCategory cat, const Vec3& pos, Size2 size) {
            Entity e;
            e.id = clip_id + "/" + label;
            e.label = label;
            e.category = cat;
            e.centroid3d = rounded(pos);
            e.bbox2d[view] = project(*e.centroid3d, size, room, cfg.image);
            return e;
        };

        for (std::size_t i = 0; i < n_roles; ++i) {
            if (!present[i]) continue;
            auto e = make_entity(cfg.role_vocab[i], EntityCategory::person, st.person_pos[i], kPersonSize);
            e.role = cfg.role_vocab[i];
            e.attributes["gown_color"] = st.person_gown[i];
            e.sterile = is_sterile_role(cfg.role_vocab[i]);
            r.entities.push_back(std::move(e));
        }
        r.entities.push_back(make_entity("patient", EntityCategory::patient,
                                         Vec3{table_pos.x, table_pos.y, table_pos.z + 0.2}, kPatientSize));
        for (std::size_t i = 0; i < kEquipment.size(); ++i) {
            const auto& spec = kEquipment[i];
            auto e = make_entity(std::string(spec.label), EntityCategory::equipment, st.equipment_pos[i], spec.size);
            e.attributes["color"] = st.equipment_color[i];
            e.sterile = spec.sterile;
            r.entities.push_back(std::move(e));
        }
        std::vector<std::size_t> tool_entity_index(n_tools, 0);
        for (std::size_t i = 0; i < n_tools; ++i) {
            if (!st.tool_present[i]) continue;
            Vec3 pos;
            if (holder_of_tool[i] < n_roles) {
                const auto& hp = st.person_pos[holder_of_tool[i]];
                pos = Vec3{hp.x + 0.3, hp.y - 0.1, 1.1};
            } else {
                pos = Vec3{instrument_table_pos.x - 0.3 + 0.15 * static_cast<double>(i) + rng.normal(0, 0.02),
                           instrument_table_pos.y + rng.normal(0, 0.02), 1.0};
            }
            auto e = make_entity(cfg.tool_vocab[i], EntityCategory::tool, clamp_to_room(pos, room), kToolSize);
            e.attributes["color"] = st.tool_color[i];
            e.sterile = true;
            tool_entity_index[i] = r.entities.size();
            r.entities.push_back(std::move(e));
        }
        r.scene_graph = std::move(graph);
        r.timeline = timeline;

        // Gaze lands on a tool most of the time.
        std::vector<const BBox*> tool_boxes;
        for (std::size_t i = 0; i < n_tools; ++i) {
            if (st.tool_present[i]) tool_boxes.push_back(&r.entities[tool_entity_index[i]].bbox2d.at(view));
        }
        Gaze gaze;
        gaze.view = view;
        if (!tool_boxes.empty() && rng.bernoulli(0.75)) {
            const auto* b = tool_boxes[static_cast<std::size_t>(rng.uniform_int(0, tool_boxes.size() - 1))];
            gaze.x = static_cast<int>(rng.uniform_int(b->x, b->x + b->w - 1));
            gaze.y = static_cast<int>(rng.uniform_int(b->y, b->y + b->h - 1));
        } else {
            gaze.x = static_cast<int>(rng.uniform_int(0, cfg.image.width - 1));
            gaze.y = static_cast<int>(rng.uniform_int(0, cfg.image.height - 1));
        }
        r.gaze = gaze;
        r.monitor_text = st.vitals.text();
        r.robot_flags["base_array_visible"] = st.base_array_visible;
        r.robot_flags["calibrated"] = first_robot_step != nullptr && t >= first_robot_step->end_s;

        records.push_back(std::move(r));
    }
    return records;
}

ingest::AnnotationFile simulate_procedures(const SimulatorConfig& cfg, unsigned threads) {
    cfg.validate();
    std::vector<std::vector<TimepointRecord>> clips(cfg.n_clips);
    parallel_for(cfg.n_clips, threads, [&](std::size_t i) { clips[i] = simulate_clip(cfg, i); });
    ingest::AnnotationFile file;
    file.header.dataset = cfg.dataset;
    file.records.reserve(cfg.n_clips * cfg.timepoints_per_clip);
    for (auto& clip : clips) {
        for (auto& r : clip) file.records.push_back(std::move(r));
    }
    return file;
}

} // namespace orbench::sim

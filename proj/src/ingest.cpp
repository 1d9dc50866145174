#include "orbench/ingest.hpp"

#include "orbench/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace orbench::ingest {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---- encoding --------------------------------------------------------------

ordered_json entity_to_json(const Entity& e) {
    ordered_json j;
    j["id"] = e.id;
    j["label"] = e.label;
    j["category"] = std::string(category_name(e.category));
    if (e.role) j["role"] = *e.role;
    if (!e.attributes.empty()) {
        ordered_json attrs = ordered_json::object();
        for (const auto& [k, v] : e.attributes) attrs[k] = v;
        j["attributes"] = std::move(attrs);
    }
    if (e.centroid3d) j["centroid3d"] = {e.centroid3d->x, e.centroid3d->y, e.centroid3d->z};
    if (!e.bbox2d.empty()) {
        ordered_json boxes = ordered_json::object();
        for (const auto& [view, b] : e.bbox2d) boxes[view] = {b.x, b.y, b.w, b.h};
        j["bbox2d"] = std::move(boxes);
    }
    if (e.sterile) j["sterile"] = *e.sterile;
    return j;
}

ordered_json record_to_json(const TimepointRecord& r) {
    ordered_json j;
    j["dataset"] = r.dataset;
    j["clip_id"] = r.clip_id;
    j["timepoint_id"] = r.timepoint_id;
    j["time_s"] = r.time_s;
    ordered_json entities = ordered_json::array();
    for (const auto& e : r.entities) entities.push_back(entity_to_json(e));
    j["entities"] = std::move(entities);
    ordered_json graph = ordered_json::array();
    for (const auto& t : r.scene_graph) {
        graph.push_back(ordered_json{{"subject", t.subject}, {"predicate", t.predicate}, {"object", t.object}});
    }
    j["scene_graph"] = std::move(graph);
    ordered_json timeline = ordered_json::array();
    for (const auto& ev : r.timeline) {
        timeline.push_back(ordered_json{{"name", ev.name},
                                        {"kind", std::string(event_kind_name(ev.kind))},
                                        {"start_s", ev.start_s},
                                        {"end_s", ev.end_s}});
    }
    j["timeline"] = std::move(timeline);
    if (r.gaze) j["gaze"] = ordered_json{{"x", r.gaze->x}, {"y", r.gaze->y}, {"view", r.gaze->view}};
    if (r.monitor_text) j["monitor_text"] = *r.monitor_text;
    ordered_json flags = ordered_json::object();
    for (const auto& [k, v] : r.robot_flags) flags[k] = v;
    j["robot_flags"] = std::move(flags);
    j["reference_view"] = r.reference_view;
    ordered_json dims = ordered_json::object();
    for (const auto& [view, d] : r.image_dims) dims[view] = {d.width, d.height};
    j["image_dims"] = std::move(dims);
    return j;
}

// ---- decoding --------------------------------------------------------------

struct FieldReader {
    std::size_t line;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line, msg); }

    const json& require(const json& obj, const char* key) const {
        if (!obj.is_object()) fail("expected an object");
        auto it = obj.find(key);
        if (it == obj.end()) fail(std::string("missing field '") + key + "'");
        return *it;
    }

    const json* optional(const json& obj, const char* key) const {
        auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }

    std::string string(const json& v, const char* what) const {
        if (!v.is_string()) fail(std::string("field '") + what + "' must be a string");
        return v.get<std::string>();
    }

    double number(const json& v, const char* what) const {
        if (!v.is_number()) fail(std::string("field '") + what + "' must be a number");
        return v.get<double>();
    }

    int integer(const json& v, const char* what) const {
        if (!v.is_number_integer()) fail(std::string("field '") + what + "' must be an integer");
        return v.get<int>();
    }

    bool boolean(const json& v, const char* what) const {
        if (!v.is_boolean()) fail(std::string("field '") + what + "' must be a boolean");
        return v.get<bool>();
    }

    const json& array(const json& v, const char* what, std::size_t expected_size = 0) const {
        if (!v.is_array()) fail(std::string("field '") + what + "' must be an array");
        if (expected_size != 0 && v.size() != expected_size) {
            fail(std::string("field '") + what + "' must have " + std::to_string(expected_size) + " elements");
        }
        return v;
    }

    const json& object(const json& v, const char* what) const {
        if (!v.is_object()) fail(std::string("field '") + what + "' must be an object");
        return v;
    }
};

Entity entity_from_json(const json& j, const FieldReader& rd) {
    Entity e;
    e.id = rd.string(rd.require(j, "id"), "id");
    e.label = rd.string(rd.require(j, "label"), "label");
    const auto cat = rd.string(rd.require(j, "category"), "category");
    auto parsed = try_parse_category(cat);
    if (!parsed) rd.fail("unknown entity category '" + cat + "'");
    e.category = *parsed;
    if (auto* v = rd.optional(j, "role")) e.role = rd.string(*v, "role");
    if (auto* v = rd.optional(j, "attributes")) {
        for (const auto& [k, val] : rd.object(*v, "attributes").items()) e.attributes[k] = rd.string(val, "attributes");
    }
    if (auto* v = rd.optional(j, "centroid3d")) {
        const auto& a = rd.array(*v, "centroid3d", 3);
        e.centroid3d = Vec3{rd.number(a[0], "centroid3d"), rd.number(a[1], "centroid3d"), rd.number(a[2], "centroid3d")};
    }
    if (auto* v = rd.optional(j, "bbox2d")) {
        for (const auto& [view, box] : rd.object(*v, "bbox2d").items()) {
            const auto& a = rd.array(box, "bbox2d", 4);
            e.bbox2d[view] = BBox{rd.integer(a[0], "bbox2d"), rd.integer(a[1], "bbox2d"),
                                  rd.integer(a[2], "bbox2d"), rd.integer(a[3], "bbox2d")};
        }
    }
    if (auto* v = rd.optional(j, "sterile")) e.sterile = rd.boolean(*v, "sterile");
    return e;
}

TimepointRecord record_from_json(const json& j, const FieldReader& rd) {
    TimepointRecord r;
    r.dataset = rd.string(rd.require(j, "dataset"), "dataset");
    r.clip_id = rd.string(rd.require(j, "clip_id"), "clip_id");
    r.timepoint_id = rd.string(rd.require(j, "timepoint_id"), "timepoint_id");
    r.time_s = rd.number(rd.require(j, "time_s"), "time_s");
    for (const auto& e : rd.array(rd.require(j, "entities"), "entities")) r.entities.push_back(entity_from_json(e, rd));
    for (const auto& t : rd.array(rd.require(j, "scene_graph"), "scene_graph")) {
        r.scene_graph.push_back(Triplet{rd.string(rd.require(t, "subject"), "subject"),
                                        rd.string(rd.require(t, "predicate"), "predicate"),
                                        rd.string(rd.require(t, "object"), "object")});
    }
    for (const auto& ev : rd.array(rd.require(j, "timeline"), "timeline")) {
        TimelineEvent event;
        event.name = rd.string(rd.require(ev, "name"), "name");
        const auto kind = rd.string(rd.require(ev, "kind"), "kind");
        auto parsed = try_parse_event_kind(kind);
        if (!parsed) rd.fail("unknown timeline event kind '" + kind + "'");
        event.kind = *parsed;
        event.start_s = rd.number(rd.require(ev, "start_s"), "start_s");
        event.end_s = rd.number(rd.require(ev, "end_s"), "end_s");
        r.timeline.push_back(std::move(event));
    }
    if (auto* g = rd.optional(j, "gaze")) {
        r.gaze = Gaze{rd.integer(rd.require(*g, "x"), "gaze.x"), rd.integer(rd.require(*g, "y"), "gaze.y"),
                      rd.string(rd.require(*g, "view"), "gaze.view")};
    }
    if (auto* m = rd.optional(j, "monitor_text")) r.monitor_text = rd.string(*m, "monitor_text");
    for (const auto& [k, v] : rd.object(rd.require(j, "robot_flags"), "robot_flags").items()) {
        r.robot_flags[k] = rd.boolean(v, "robot_flags");
    }
    r.reference_view = rd.string(rd.require(j, "reference_view"), "reference_view");
    for (const auto& [view, d] : rd.object(rd.require(j, "image_dims"), "image_dims").items()) {
        const auto& a = rd.array(d, "image_dims", 2);
        r.image_dims[view] = ImageDims{rd.integer(a[0], "image_dims"), rd.integer(a[1], "image_dims")};
    }
    return r;
}

json parse_json_line(std::string_view line, std::size_t line_no) {
    try {
        return json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
}

int major_version(const std::string& semver) {
    const auto dot = semver.find('.');
    const auto head = semver.substr(0, dot);
    if (head.empty() || !std::all_of(head.begin(), head.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return -1;
    }
    return std::stoi(head);
}

void check_bbox_view(const TimepointRecord& r, const std::string& view, const char* field) {
    if (!r.image_dims.count(view)) {
        throw ValidationError(r.locus(), field, "view '" + view + "' has no image_dims entry");
    }
}

} // namespace

void validate_record(const TimepointRecord& r) {
    const auto locus = r.locus();
    if (r.dataset.empty()) throw ValidationError(locus, "dataset", "empty");
    if (r.clip_id.empty()) throw ValidationError(locus, "clip_id", "empty");
    if (r.timepoint_id.empty()) throw ValidationError(locus, "timepoint_id", "empty");
    if (!std::isfinite(r.time_s) || r.time_s < 0.0) throw ValidationError(locus, "time_s", "must be finite and >= 0");

    for (const auto& [view, d] : r.image_dims) {
        if (d.width <= 0 || d.height <= 0) throw ValidationError(locus, "image_dims", "non-positive size for " + view);
    }
    if (!r.reference_view.empty()) check_bbox_view(r, r.reference_view, "reference_view");

    std::set<std::string> labels;
    for (const auto& e : r.entities) {
        if (e.id.empty()) throw ValidationError(locus, "entities.id", "empty entity id");
        std::string canonical;
        try {
            canonical = normalize_label(e.label);
        } catch (const InvalidLabel&) {
            throw ValidationError(locus, "entities.label", "empty label");
        }
        if (canonical != e.label) throw ValidationError(locus, "entities.label", "label not canonical: '" + e.label + "'");
        if (!labels.insert(e.label).second) throw ValidationError(locus, "entities.label", "duplicate label '" + e.label + "'");
        if (e.role && e.category != EntityCategory::person) {
            throw ValidationError(locus, "entities.role", "role set on non-person '" + e.label + "'");
        }
        if (e.centroid3d) {
            const auto& c = *e.centroid3d;
            if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(c.z)) {
                throw ValidationError(locus, "entities.centroid3d", "non-finite centroid for '" + e.label + "'");
            }
        }
        for (const auto& [view, b] : e.bbox2d) {
            if (b.w <= 0 || b.h <= 0) throw ValidationError(locus, "entities.bbox2d", "non-positive size for '" + e.label + "'");
            check_bbox_view(r, view, "entities.bbox2d");
        }
    }

    for (const auto& t : r.scene_graph) {
        try {
            validate_triplet(t);
        } catch (const InvalidTriplet& err) {
            throw ValidationError(locus, "scene_graph", err.what());
        }
        for (const std::string* endpoint : {&t.subject, &t.object}) {
            if (!labels.count(*endpoint)) {
                throw ValidationError(locus, "scene_graph", "triplet endpoint '" + *endpoint + "' is not an entity label");
            }
        }
    }

    std::array<const TimelineEvent*, 3> last_of_kind{};
    double max_end = 0.0;
    for (const auto& ev : r.timeline) {
        if (ev.name.empty()) throw ValidationError(locus, "timeline.name", "empty event name");
        if (!std::isfinite(ev.start_s) || !std::isfinite(ev.end_s) || !(ev.end_s > ev.start_s)) {
            throw ValidationError(locus, "timeline", "event '" + ev.name + "' must satisfy end_s > start_s");
        }
        auto& prev = last_of_kind[static_cast<std::size_t>(ev.kind)];
        if (prev && ev.start_s < prev->end_s) {
            throw ValidationError(locus, "timeline", "events of kind " + std::string(event_kind_name(ev.kind)) +
                                                         " overlap or are unsorted at '" + ev.name + "'");
        }
        prev = &ev;
        max_end = std::max(max_end, ev.end_s);
    }
    if (!r.timeline.empty() && r.time_s > max_end) {
        throw ValidationError(locus, "time_s", "beyond the end of the clip timeline");
    }

    if (r.gaze) {
        auto it = r.image_dims.find(r.gaze->view);
        if (it == r.image_dims.end()) throw ValidationError(locus, "gaze.view", "unknown view '" + r.gaze->view + "'");
        if (r.gaze->x < 0 || r.gaze->y < 0 || r.gaze->x >= it->second.width || r.gaze->y >= it->second.height) {
            throw ValidationError(locus, "gaze", "gaze point outside the image");
        }
    }
}

std::string record_to_line(const TimepointRecord& record) {
    return record_to_json(record).dump();
}

TimepointRecord record_from_line(std::string_view line, std::size_t line_no) {
    const auto j = parse_json_line(line, line_no);
    return record_from_json(j, FieldReader{line_no});
}

std::string header_to_line(const AnnotationHeader& header) {
    ordered_json j;
    j["format_version"] = header.format_version;
    j["dataset"] = header.dataset;
    return j.dump();
}

AnnotationReader::AnnotationReader(const std::filesystem::path& path) : in_(path), path_(path.string()) {
    if (!in_) throw IoError("cannot open annotation file '" + path_ + "'");
    if (!std::getline(in_, buffer_)) throw ParseError(1, "missing header line in '" + path_ + "'");
    line_no_ = 1;
    const auto j = parse_json_line(buffer_, line_no_);
    const FieldReader rd{line_no_};
    header_.format_version = rd.string(rd.require(j, "format_version"), "format_version");
    header_.dataset = rd.string(rd.require(j, "dataset"), "dataset");
    if (major_version(header_.format_version) != kSupportedMajor) {
        throw ValidationError(path_ + ":1", "format_version",
                              "unsupported format version '" + header_.format_version + "'");
    }
}

bool AnnotationReader::next(TimepointRecord& out) {
    while (std::getline(in_, buffer_)) {
        ++line_no_;
        if (buffer_.empty()) continue;
        out = record_from_line(buffer_, line_no_);
        validate_record(out);
        if (out.dataset != header_.dataset) {
            throw ValidationError(out.locus(), "dataset", "record dataset differs from header '" + header_.dataset + "'");
        }
        auto [it, inserted] = last_time_by_clip_.try_emplace(out.clip_id, out.time_s);
        if (!inserted) {
            if (!(out.time_s > it->second)) {
                throw ValidationError(out.locus(), "time_s", "records within a clip must have strictly increasing time_s");
            }
            it->second = out.time_s;
        }
        return true;
    }
    return false;
}

AnnotationFile parse_annotations(const std::filesystem::path& path) {
    AnnotationReader reader(path);
    AnnotationFile file;
    file.header = reader.header();
    TimepointRecord r;
    while (reader.next(r)) file.records.push_back(std::move(r));
    return file;
}

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const AnnotationHeader&, TimepointRecord&&)>& fn) {
    AnnotationReader reader(path);
    TimepointRecord r;
    while (reader.next(r)) fn(reader.header(), std::move(r));
}

AnnotationWriter::AnnotationWriter(const std::filesystem::path& path, const AnnotationHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
    if (!out_) throw IoError("cannot write annotation file '" + path_ + "'");
    out_ << header_to_line(header) << '\n';
}

void AnnotationWriter::write(const TimepointRecord& record) {
    out_ << record_to_line(record) << '\n';
    if (!out_) throw IoError("write failed for '" + path_ + "'");
}

void AnnotationWriter::close() {
    out_.close();
    if (out_.fail()) throw IoError("closing '" + path_ + "' failed");
}

void write_annotations(const AnnotationFile& file, const std::filesystem::path& path) {
    AnnotationWriter writer(path, file.header);
    for (const auto& r : file.records) writer.write(r);
    writer.close();
}

} // namespace orbench::ingest

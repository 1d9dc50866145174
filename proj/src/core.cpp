#include "orbench/core.hpp"

#include "orbench/errors.hpp"
#include "orbench/hashing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace orbench {

namespace {

constexpr std::array<std::string_view, kTaskCount> kTaskNames = {
    "PeopleCounting",
    "RoleDetection",
    "InteractionDetection",
    "AttributeDetection",
    "ActionDetection",
    "EstimateTimeUntil",
    "EstimateStatus",
    "IsCompleted",
    "IsBaseArrayVisible",
    "IsRobotCalibrated",
    "SterilityBreachDetection",
    "RobotStepDetection",
    "NextRobotStepEstimation",
    "Detection2D",
    "Detection3D",
    "Distance3D",
    "ToolDetection",
    "SceneGraphGeneration",
    "EntityDetection",
    "SortedEntityDetection",
    "GazeLocation",
    "GazeObjectDetection",
    "MonitorTextOCR",
};

constexpr std::array<std::string_view, 4> kCategoryNames = {"person", "tool", "equipment", "patient"};
constexpr std::array<std::string_view, 3> kEventKindNames = {"action", "phase", "robot_step"};

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

} // namespace

const std::array<TaskKind, kTaskCount>& all_tasks() {
    static const std::array<TaskKind, kTaskCount> tasks = [] {
        std::array<TaskKind, kTaskCount> out{};
        for (std::size_t i = 0; i < kTaskCount; ++i) out[i] = static_cast<TaskKind>(i);
        return out;
    }();
    return tasks;
}

std::string_view task_name(TaskKind task) {
    return kTaskNames.at(static_cast<std::size_t>(task));
}

std::optional<TaskKind> try_parse_task(std::string_view name) {
    for (std::size_t i = 0; i < kTaskCount; ++i) {
        if (kTaskNames[i] == name) return static_cast<TaskKind>(i);
    }
    return std::nullopt;
}

TaskKind parse_task(std::string_view name) {
    if (auto t = try_parse_task(name)) return *t;
    throw UsageError("unknown task '" + std::string(name) + "'");
}

std::string_view category_name(EntityCategory c) {
    return kCategoryNames.at(static_cast<std::size_t>(c));
}

std::optional<EntityCategory> try_parse_category(std::string_view s) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == s) return static_cast<EntityCategory>(i);
    }
    return std::nullopt;
}

std::string_view event_kind_name(EventKind k) {
    return kEventKindNames.at(static_cast<std::size_t>(k));
}

std::optional<EventKind> try_parse_event_kind(std::string_view s) {
    for (std::size_t i = 0; i < kEventKindNames.size(); ++i) {
        if (kEventKindNames[i] == s) return static_cast<EventKind>(i);
    }
    return std::nullopt;
}

double euclidean_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

const Entity* TimepointRecord::find_entity(std::string_view label) const {
    auto it = std::find_if(entities.begin(), entities.end(),
                           [&](const Entity& e) { return e.label == label; });
    return it == entities.end() ? nullptr : &*it;
}

std::string normalize_label(std::string_view raw) {
    const auto body = trim(raw);
    if (body.empty()) throw InvalidLabel("label is empty after trimming: '" + std::string(raw) + "'");
    std::string out;
    out.reserve(body.size());
    bool in_space = false;
    for (char c : body) {
        if (is_space(c)) {
            in_space = true;
            continue;
        }
        if (in_space) out.push_back('_');
        in_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

void validate_triplet(const Triplet& t) {
    for (const std::string* part : {&t.subject, &t.predicate, &t.object}) {
        if (part->empty()) throw InvalidTriplet("triplet component is empty");
        for (char c : *part) {
            if (c == ';' || c == ',' || c == '(' || c == ')') {
                throw InvalidTriplet("reserved character '" + std::string(1, c) + "' in '" + *part + "'");
            }
            if (std::isupper(static_cast<unsigned char>(c)) || is_space(c)) {
                throw InvalidTriplet("triplet component not canonical: '" + *part + "'");
            }
        }
    }
}

std::string canonical_triplet_string(const Triplet& t) {
    validate_triplet(t);
    std::string out;
    out.reserve(t.subject.size() + t.object.size() + t.predicate.size() + 4);
    out += '(';
    out += t.subject;
    out += ',';
    out += t.object;
    out += ',';
    out += t.predicate;
    out += ')';
    return out;
}

std::string answer_key(std::string_view answer) {
    const auto body = trim(answer);
    std::string out(body);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string make_qa_id(std::string_view dataset, std::string_view clip_id,
                       std::string_view timepoint_id, TaskKind task, std::string_view question) {
    // Field separator 0x1f cannot occur in labels, so distinct tuples hash distinct inputs.
    std::uint64_t h = hashing::kFnvOffset;
    const char sep = '\x1f';
    for (std::string_view part : {dataset, clip_id, timepoint_id, task_name(task), question}) {
        h = hashing::fnv1a64(part, h);
        h = hashing::fnv1a64(std::string_view(&sep, 1), h);
    }
    return hashing::hex16(hashing::mix64(h));
}

} // namespace orbench

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace orbench {

inline constexpr std::string_view kToolVersion = "1.0.0";

// The 23 benchmark tasks. Declaration order is the canonical task order used
// for output sorting and report tables.
enum class TaskKind : std::uint8_t {
    PeopleCounting,
    RoleDetection,
    InteractionDetection,
    AttributeDetection,
    ActionDetection,
    EstimateTimeUntil,
    EstimateStatus,
    IsCompleted,
    IsBaseArrayVisible,
    IsRobotCalibrated,
    SterilityBreachDetection,
    RobotStepDetection,
    NextRobotStepEstimation,
    Detection2D,
    Detection3D,
    Distance3D,
    ToolDetection,
    SceneGraphGeneration,
    EntityDetection,
    SortedEntityDetection,
    GazeLocation,
    GazeObjectDetection,
    MonitorTextOCR,
};

inline constexpr std::size_t kTaskCount = 23;

const std::array<TaskKind, kTaskCount>& all_tasks();
std::string_view task_name(TaskKind task);
std::optional<TaskKind> try_parse_task(std::string_view name);
/// Throws UsageError on an unknown name.
TaskKind parse_task(std::string_view name);

enum class EntityCategory : std::uint8_t { person, tool, equipment, patient };
enum class EventKind : std::uint8_t { action, phase, robot_step };

std::string_view category_name(EntityCategory c);
std::optional<EntityCategory> try_parse_category(std::string_view s);
std::string_view event_kind_name(EventKind k);
std::optional<EventKind> try_parse_event_kind(std::string_view s);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

double euclidean_distance(const Vec3& a, const Vec3& b);

/// Axis-aligned pixel rectangle, half-open: [x, x+w) x [y, y+h).
struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    double center_x() const { return x + w / 2.0; }
    bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

struct ImageDims {
    int width = 0;
    int height = 0;
    friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct Entity {
    std::string id;
    std::string label;
    EntityCategory category = EntityCategory::equipment;
    std::optional<std::string> role;
    std::map<std::string, std::string> attributes;
    std::optional<Vec3> centroid3d;
    std::map<std::string, BBox> bbox2d;  // view-id -> box
    std::optional<bool> sterile;

    friend bool operator==(const Entity&, const Entity&) = default;
};

struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;

    friend auto operator<=>(const Triplet&, const Triplet&) = default;
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TimelineEvent {
    std::string name;
    EventKind kind = EventKind::action;
    double start_s = 0.0;
    double end_s = 0.0;

    bool contains_strictly(double t) const { return t > start_s && t < end_s; }
    bool active_at(double t) const { return t >= start_s && t < end_s; }
    friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

struct Gaze {
    int x = 0;
    int y = 0;
    std::string view;
    friend bool operator==(const Gaze&, const Gaze&) = default;
};

struct TimepointRecord {
    std::string dataset;
    std::string clip_id;
    std::string timepoint_id;
    double time_s = 0.0;
    std::vector<Entity> entities;
    std::vector<Triplet> scene_graph;
    std::vector<TimelineEvent> timeline;
    std::optional<Gaze> gaze;
    std::optional<std::string> monitor_text;
    std::map<std::string, bool> robot_flags;
    std::string reference_view;
    std::map<std::string, ImageDims> image_dims;

    const Entity* find_entity(std::string_view label) const;
    std::string locus() const { return dataset + "/" + clip_id + "/" + timepoint_id; }

    friend bool operator==(const TimepointRecord&, const TimepointRecord&) = default;
};

struct QAPair {
    std::string id;
    TaskKind task = TaskKind::PeopleCounting;
    std::string question;
    std::string answer;
    std::string dataset;
    std::string clip_id;
    std::string timepoint_id;
    std::optional<std::string> context;  // rendered memory scene graphs

    friend bool operator==(const QAPair&, const QAPair&) = default;
};

/// Lowercase, trim, and collapse internal whitespace runs into one underscore.
/// Throws InvalidLabel when nothing is left.
std::string normalize_label(std::string_view raw);

/// Throws InvalidTriplet when a component is empty, not lowercase, or holds a
/// reserved character (`;`, `,`, `(`, `)`).
void validate_triplet(const Triplet& t);

/// "(subject,object,predicate)" -- the triplet notation of the scene-graph
/// literature, e.g. (surgeon,drill,holding).
std::string canonical_triplet_string(const Triplet& t);

/// Trimmed and lowercased answer, the key used for answer-frequency counting.
std::string answer_key(std::string_view answer);

/// 16 hex digits identifying a QA pair; stable across runs and platforms.
std::string make_qa_id(std::string_view dataset, std::string_view clip_id,
                       std::string_view timepoint_id, TaskKind task, std::string_view question);

} // namespace orbench

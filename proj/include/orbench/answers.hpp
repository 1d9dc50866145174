#pragma once

#include "orbench/core.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Wire grammar of canonical answers, per task:
//
//   Count      PeopleCounting                         "4"
//   Integer    EstimateTimeUntil, EstimateStatus      "15"
//   Decimal    Distance3D                             "2.35"
//   Boolean    IsCompleted, IsBaseArrayVisible,
//              IsRobotCalibrated, SterilityBreach...  "true" | "false"
//   Label      InteractionDetection, Attribute...,
//              ActionDetection, RobotStep..., Next...,
//              GazeObjectDetection                    "drilling" | "none"
//   LabelSet   RoleDetection, ToolDetection,
//              EntityDetection                        "drill,saw" (sorted) | "none"
//   Sequence   SortedEntityDetection                  "nurse,patient,drill" | "none"
//   Triplets   SceneGraphGeneration                   "(s,o,p);(s,o,p)" (sorted) | "none"
//   BBox       Detection2D                            "x,y,w,h" integers
//   Point3     Detection3D                            "x.xx,y.yy,z.zz"
//   Point2     GazeLocation                           "x,y" integers
//   Text       MonitorTextOCR                         verbatim
namespace orbench::answers {

inline constexpr std::string_view kNone = "none";

enum class Shape { Count, Integer, Decimal, Boolean, Label, LabelSet, Sequence, Triplets, BBox, Point3, Point2, Text };

Shape shape_of(TaskKind task);

/// Strict check that `answer` is a canonical wire-grammar answer for `task`.
bool conforms(TaskKind task, std::string_view answer);

// ---- formatting ------------------------------------------------------------

/// Fixed-point decimal; never emits "-0.00".
std::string format_fixed(double value, int decimals);
std::string format_bool(bool value);
/// Sorted, de-duplicated, comma-joined; "none" when empty.
std::string format_set(std::vector<std::string> labels);
/// Comma-joined in the given order; "none" when empty.
std::string format_sequence(const std::vector<std::string>& labels);
/// Canonical triplet strings, sorted, ';'-joined; "none" when empty.
std::string format_triplets(const std::vector<Triplet>& triplets);
std::string format_bbox(const BBox& b);
std::string format_point3(const Vec3& p, int decimals);

// ---- lenient parsing of free-text predictions --------------------------------

std::vector<double> extract_numbers(std::string_view text);
std::optional<double> parse_number(std::string_view text);
std::optional<bool> parse_bool(std::string_view text);
/// Normalized single label; nullopt for blank input.
std::optional<std::string> parse_label(std::string_view text);
/// Comma/semicolon separated labels, normalized; "none" or blank -> empty list.
std::vector<std::string> parse_label_list(std::string_view text);
/// "(s,o,p);(s,o,p)" with or without parentheses; nullopt if any item is malformed.
std::optional<std::vector<Triplet>> parse_triplets(std::string_view text);

} // namespace orbench::answers

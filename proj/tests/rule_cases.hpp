#pragma once

// Table of scoring-rule cases shared by the unit tests and the acceptance
// binary. Expected values are computed by hand; boundary rows check that a
// value exactly on a band threshold falls into the lower band.

#include "orbench/core.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace rule_cases {

struct Case {
    const char* rule;
    orbench::TaskKind task;
    std::string predicted;
    std::string truth;
    double expected;
    std::optional<orbench::ImageDims> image = std::nullopt;
};

inline const std::vector<Case>& all() {
    using orbench::TaskKind;
    static const std::vector<Case> cases = {
        // counting
        {"count", TaskKind::PeopleCounting, "4", "4", 1.0},
        {"count", TaskKind::PeopleCounting, "5", "4", 0.5},
        {"count", TaskKind::PeopleCounting, "3", "4", 0.5},
        {"count", TaskKind::PeopleCounting, "6", "4", 0.0},
        {"count", TaskKind::PeopleCounting, "There are 4 people.", "4", 1.0},
        // label sets
        {"set-iou", TaskKind::ToolDetection, "drill", "drill,saw", 0.5},
        {"set-iou", TaskKind::ToolDetection, "saw, drill", "drill,saw", 1.0},
        {"set-iou", TaskKind::ToolDetection, "scalpel", "drill", 0.0},
        {"set-iou", TaskKind::RoleDetection, "a,b,c", "a,b,d", 0.5},
        {"set-iou", TaskKind::EntityDetection, "none", "none", 1.0},
        // single labels
        {"label", TaskKind::ActionDetection, "drilling", "drilling", 1.0},
        {"label", TaskKind::ActionDetection, " Drilling ", "drilling", 1.0},
        {"label", TaskKind::ActionDetection, "suturing", "drilling", 0.0},
        {"label", TaskKind::SterilityBreachDetection, "True", "true", 1.0},
        {"label", TaskKind::IsCompleted, "false", "true", 0.0},
        // relative error bands
        {"relative", TaskKind::Distance3D, "2.10", "2.00", 1.0},
        {"relative", TaskKind::Distance3D, "2.40", "2.00", 0.5},
        {"relative", TaskKind::Distance3D, "2.20", "2.00", 0.5},  // exactly 10%
        {"relative", TaskKind::Distance3D, "1.80", "2.00", 0.5},  // exactly 10% below
        {"relative", TaskKind::Distance3D, "2.50", "2.00", 0.0},  // exactly 25%
        {"relative", TaskKind::EstimateStatus, "45", "50", 0.5},
        {"relative", TaskKind::EstimateTimeUntil, "0", "0", 1.0},
        {"relative", TaskKind::EstimateTimeUntil, "1", "0", 0.0},
        {"relative", TaskKind::EstimateTimeUntil, "109", "100", 1.0},
        // 2D box IoU bands
        {"bbox-iou", TaskKind::Detection2D, "0,0,10,10", "0,0,10,10", 1.0},
        {"bbox-iou", TaskKind::Detection2D, "0,0,10,10", "5,0,10,10", 0.5},       // IoU 1/3
        {"bbox-iou", TaskKind::Detection2D, "0,0,75,100", "0,0,100,100", 1.0},    // IoU exactly 0.75
        {"bbox-iou", TaskKind::Detection2D, "0,0,50,100", "0,0,100,100", 0.75},   // exactly 0.5
        {"bbox-iou", TaskKind::Detection2D, "0,0,25,100", "0,0,100,100", 0.5},    // exactly 0.25
        {"bbox-iou", TaskKind::Detection2D, "0,0,10,100", "0,0,80,100", 0.25},    // exactly 0.125
        {"bbox-iou", TaskKind::Detection2D, "0,0,12,100", "0,0,100,100", 0.0},    // 0.12
        {"bbox-iou", TaskKind::Detection2D, "200,200,10,10", "0,0,10,10", 0.0},
        // scene graphs
        {"macro-f1", TaskKind::SceneGraphGeneration, "(a,b,holding);(a,c,cutting)", "(a,b,holding);(a,c,cutting)", 1.0},
        {"macro-f1", TaskKind::SceneGraphGeneration, "(a,b,holding)", "(a,b,holding);(a,c,cutting)", 0.5},
        {"macro-f1", TaskKind::SceneGraphGeneration, "a,b,holding; a,c,holding", "(a,b,holding)", 2.0 / 3.0},
        {"macro-f1", TaskKind::SceneGraphGeneration, "none", "none", 1.0},
        // ordered sequences
        {"levenshtein", TaskKind::SortedEntityDetection, "a,b,c", "a,c", 2.0 / 3.0},
        {"levenshtein", TaskKind::SortedEntityDetection, "a,b,c", "a,b,c", 1.0},
        {"levenshtein", TaskKind::SortedEntityDetection, "c,b,a", "a,b,c", 1.0 / 3.0},
        // monitor text
        {"bleu1", TaskKind::MonitorTextOCR, "HR 72 SpO2 98", "HR 72 SpO2 98", 1.0},
        {"bleu1", TaskKind::MonitorTextOCR, "hr 72", "HR 72 SpO2 98", std::exp(-1.0)},
        {"bleu1", TaskKind::MonitorTextOCR, "hr hr hr", "hr 72 bp", 1.0 / 3.0},
        // 3D point error bands
        {"point3", TaskKind::Detection3D, "1.00,1.00,1.00", "1.00,1.00,1.00", 1.0},
        {"point3", TaskKind::Detection3D, "1.05,1.00,1.00", "1.00,1.00,1.00", 1.0},
        {"point3", TaskKind::Detection3D, "1.10,1.00,1.00", "1.00,1.00,1.00", 0.5},  // exactly 0.10 m
        {"point3", TaskKind::Detection3D, "1.30,1.00,1.00", "1.00,1.00,1.00", 0.0},
        // gaze error over a 300x400 image (diagonal 500)
        {"gaze", TaskKind::GazeLocation, "3,4", "0,0", 1.0, orbench::ImageDims{300, 400}},
        {"gaze", TaskKind::GazeLocation, "30,40", "0,0", 0.5, orbench::ImageDims{300, 400}},  // exactly 10%
        {"gaze", TaskKind::GazeLocation, "90,120", "0,0", 0.0, orbench::ImageDims{300, 400}},
        // unparseable
        {"unparseable", TaskKind::PeopleCounting, "many", "4", 0.0},
        {"unparseable", TaskKind::Detection2D, "left side", "0,0,10,10", 0.0},
        {"unparseable", TaskKind::ActionDetection, "", "drilling", 0.0},
    };
    return cases;
}

} // namespace rule_cases

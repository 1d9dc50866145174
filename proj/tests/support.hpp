#pragma once

#include "orbench/core.hpp"

#include <sys/resource.h>

#include <filesystem>
#include <random>
#include <string>

namespace testing_support {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("orbench_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Peak resident set size in KiB.
inline long peak_rss_kib() {
    rusage u{};
    getrusage(RUSAGE_SELF, &u);
    return u.ru_maxrss;
}

/// Small valid record: two staff, a drill and the patient, one action timeline.
inline orbench::TimepointRecord basic_record(double time_s = 10.0) {
    using namespace orbench;
    TimepointRecord r;
    r.dataset = "unit";
    r.clip_id = "clip_a";
    r.timepoint_id = "tp_0001";
    r.time_s = time_s;
    r.reference_view = "cam_1";
    r.image_dims["cam_1"] = ImageDims{1280, 720};

    Entity surgeon{"e1", "head_surgeon", EntityCategory::person, "head_surgeon", {{"gown_color", "blue"}},
                   Vec3{1.0, 1.0, 1.0}, {{"cam_1", BBox{100, 100, 50, 200}}}, true};
    Entity nurse{"e2", "circulating_nurse", EntityCategory::person, "circulating_nurse", {},
                 Vec3{4.0, 5.0, 1.0}, {{"cam_1", BBox{600, 120, 40, 180}}}, false};
    Entity drill{"e3", "drill", EntityCategory::tool, std::nullopt, {{"color", "silver"}},
                 Vec3{1.0, 1.0, 1.2}, {{"cam_1", BBox{150, 200, 20, 20}}}, true};
    Entity patient{"e4", "patient", EntityCategory::patient, std::nullopt, {}, Vec3{2.0, 1.0, 0.8},
                   {{"cam_1", BBox{300, 300, 200, 100}}}, std::nullopt};
    r.entities = {surgeon, nurse, drill, patient};
    r.scene_graph = {{"head_surgeon", "holding", "drill"}, {"head_surgeon", "drilling", "patient"}};
    r.timeline = {{"drilling", EventKind::action, 5.0, 15.0}, {"suturing", EventKind::action, 25.0, 40.0}};
    return r;
}

} // namespace testing_support

#pragma once

#include "orbench/core.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace orbench::qagen {

/// Bumped whenever question wording or answer derivation changes.
inline constexpr std::string_view kTemplateVersion = "1";

struct GenConfig {
    std::uint64_t seed = 0;
    /// Fraction of non-interacting (person, entity) pairs asked about, answer "none".
    double negative_pair_rate = 0.2;
    int distance_round_dp = 2;
    /// Views for 2D detection questions; empty means the record's reference view.
    std::vector<std::string> views;
    std::vector<std::string> contact_predicates{"holding", "touching"};
    /// Attach rendered memory scene graphs with this short-term length; 0 disables.
    std::size_t memory_k = 0;

    /// Throws UsageError on out-of-range values.
    void validate() const;
};

/// Question templates, one phrasing per task.
std::string question_for(TaskKind task, const std::vector<std::string>& slots = {});

// Per-task generators. Each returns zero pairs when the record lacks the data the task needs.
std::vector<QAPair> gen_people_counting(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_role_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_interaction_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_attribute_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_action_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_estimate_time_until(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_estimate_status(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_is_completed(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_is_base_array_visible(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_is_robot_calibrated(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_sterility_breach(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_robot_step_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_next_robot_step(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_detection_2d(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_detection_3d(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_distance_3d(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_tool_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_scene_graph(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_entity_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_sorted_entity_detection(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_gaze_location(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_gaze_object(const TimepointRecord& r, const GenConfig& cfg);
std::vector<QAPair> gen_monitor_text(const TimepointRecord& r, const GenConfig& cfg);

std::vector<QAPair> generate_task(TaskKind task, const TimepointRecord& r, const GenConfig& cfg);

/// All tasks for one record, ordered by (task, question). No memory context.
std::vector<QAPair> generate_for_record(const TimepointRecord& r, const GenConfig& cfg);

/// Whole corpus, ordered by input record order then (task, question). Records
/// of a clip must be contiguous and time-ordered when cfg.memory_k > 0.
std::vector<QAPair> generate_all(const std::vector<TimepointRecord>& records, const GenConfig& cfg,
                                 unsigned threads = 1);

/// Streaming form: pulls records from `next` until it returns false, processes
/// them in batches of `batch_size` across `threads`, and emits pairs in order.
void generate_stream(const std::function<bool(TimepointRecord&)>& next, const GenConfig& cfg,
                     const std::function<void(const QAPair&)>& emit, unsigned threads = 1,
                     std::size_t batch_size = 1024);

} // namespace orbench::qagen

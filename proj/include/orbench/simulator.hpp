#pragma once

#include "orbench/core.hpp"
#include "orbench/ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace orbench::sim {

inline constexpr std::string_view kReferenceView = "cam_1";

/// Desk-scale stand-in for real OR annotation corpora. Each clip is one
/// procedure with a contiguous phase timeline, sequential actions and robot
/// steps, and per-timepoint scene graphs drawn from a phase-conditioned grammar.
struct SimulatorConfig {
    std::uint64_t seed = 1;
    std::string dataset = "sim_or";
    std::size_t n_clips = 8;
    std::size_t timepoints_per_clip = 60;
    double timepoint_interval_s = 2.0;
    std::vector<std::string> phase_vocab{"preparation", "incision", "bone_cutting", "implant_placement", "closure"};
    std::vector<std::string> action_vocab{"draping", "incising", "drilling", "sawing",
                                          "trial_fitting", "cementing", "suturing"};
    std::vector<std::string> robot_step_vocab{"registration", "calibration", "bone_resection", "implant_trial",
                                              "final_check"};
    std::vector<std::string> tool_vocab{"drill", "saw", "scalpel", "hammer", "retractor"};
    std::vector<std::string> role_vocab{"head_surgeon", "assistant_surgeon", "scrub_nurse", "circulating_nurse",
                                        "anesthetist"};
    double sterility_breach_rate = 0.1;
    Vec3 room_extent_m{6.0, 5.0, 3.0};
    ImageDims image{1280, 720};

    /// Throws UsageError when a count is zero, a vocabulary is empty or
    /// non-canonical, or a rate/extent is out of range.
    void validate() const;
};

/// Predicates that make physical contact; used for sterility and tool usage.
const std::vector<std::string>& default_contact_predicates();

/// Predicates the grammar allows between staff and patient during phase `phase_index`.
std::vector<std::string> phase_predicates(std::size_t phase_index);

std::vector<TimepointRecord> simulate_clip(const SimulatorConfig& cfg, std::size_t clip_index);

/// Deterministic in cfg.seed; clips use per-clip derived seeds, so `threads`
/// does not affect the output.
ingest::AnnotationFile simulate_procedures(const SimulatorConfig& cfg, unsigned threads = 1);

} // namespace orbench::sim

#pragma once

#include "orbench/qagen.hpp"
#include "orbench/sampler.hpp"
#include "orbench/scorer.hpp"
#include "orbench/simulator.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

// Stage orchestration shared by the command-line tool and the end-to-end tests.
namespace orbench::pipeline {

namespace fs = std::filesystem;

/// Sub-seed for one pipeline stage.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

struct RunConfig {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    fs::path out_dir = "orbench_out";
    sim::SimulatorConfig simulate;
    qagen::GenConfig generate;
    sampler::SampleSpec sample{.seed = 0, .train = 5000, .val = 1000, .test = 2000};
    scorer::ScoreOptions score;

    /// Copies the global seed into every stage as its derived sub-seed.
    void propagate_seed();
};

/// Reads a config object over `base`; unknown keys are a UsageError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::ordered_json config_to_json(const RunConfig& cfg);
RunConfig load_config(const fs::path& path);

/// Error raised by a stage, carrying what the CLI reports on stderr.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, std::string kind, const std::string& message, std::string locus)
        : std::runtime_error(message), stage_(std::move(stage)), kind_(std::move(kind)), locus_(std::move(locus)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& kind() const noexcept { return kind_; }
    const std::string& locus() const noexcept { return locus_; }
    nlohmann::ordered_json to_json() const;

private:
    std::string stage_;
    std::string kind_;
    std::string locus_;
};

/// Writes annotations; returns the record count.
std::size_t cmd_simulate(const sim::SimulatorConfig& cfg, const fs::path& out, unsigned threads);

/// Streams annotations into a QA pair file; returns the pair count.
std::size_t cmd_generate(const fs::path& annotations, const fs::path& out, const qagen::GenConfig& cfg,
                         unsigned threads);

struct SampleCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// Two passes over `pairs`; writes train.jsonl, val.jsonl and test.jsonl into out_dir.
SampleCounts cmd_sample(const fs::path& pairs, const fs::path& out_dir, const sampler::SampleSpec& spec,
                        unsigned threads);

/// Fits on `train`, writes one prediction per `test` pair; returns the count.
std::size_t cmd_baseline(const fs::path& train, const fs::path& test, const fs::path& out);

/// Scores predictions and writes the report document. `annotations`, when
/// given, supplies the gaze-view image size for GazeLocation.
nlohmann::ordered_json cmd_score(const fs::path& benchmark, const fs::path& predictions, const scorer::ScoreOptions& opts,
                                 const std::optional<fs::path>& annotations, const fs::path& out);

/// Renders a report document as a text table (returned, and written to
/// out_text when non-empty) and as CSV (written to out_csv when non-empty).
std::string cmd_report(const fs::path& report, const fs::path& out_text, const fs::path& out_csv);

struct RunArtifacts {
    fs::path annotations;
    fs::path pairs;
    fs::path train;
    fs::path val;
    fs::path test;
    fs::path predictions;
    fs::path report_json;
    fs::path report_text;
    fs::path report_csv;
};

/// simulate -> generate -> sample -> baseline -> score -> report under cfg.out_dir.
RunArtifacts run_pipeline(RunConfig cfg);

} // namespace orbench::pipeline

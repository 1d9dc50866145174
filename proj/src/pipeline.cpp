#include "orbench/pipeline.hpp"

#include "orbench/errors.hpp"
#include "orbench/hashing.hpp"
#include "orbench/ingest.hpp"
#include "orbench/qa_io.hpp"

#include <fstream>
#include <set>
#include <unordered_map>

namespace orbench::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
    return hashing::derive_seed(seed, stage);
}

void RunConfig::propagate_seed() {
    simulate.seed = stage_seed(seed, "simulate");
    generate.seed = stage_seed(seed, "generate");
    sample.seed = stage_seed(seed, "sample");
    score.seed = stage_seed(seed, "score");
    score.threads = threads;
}

namespace {

// Runs fn, converting toolkit errors into a StageError with a locus.
template <typename Fn>
auto in_stage(std::string_view stage, const fs::path& input, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const ValidationError& e) {
        throw StageError(std::string(stage), e.kind(), e.what(), input.string() + ": " + e.locus());
    } catch (const ParseError& e) {
        throw StageError(std::string(stage), e.kind(), e.what(), input.string() + ":" + std::to_string(e.line()));
    } catch (const Error& e) {
        throw StageError(std::string(stage), e.kind(), e.what(), input.string());
    } catch (const json::exception& e) {
        throw StageError(std::string(stage), "ParseError", e.what(), input.string());
    }
}

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw UsageError("config section '" + std::string(section) + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw UsageError("unknown config key '" + std::string(section) + "." + key + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("config key '") + key + "': " + e.what());
    }
}

ImageDims read_dims(const json& j) {
    const auto v = j.get<std::vector<int>>();
    if (v.size() != 2) throw UsageError("image size must be [width, height]");
    return ImageDims{v[0], v[1]};
}

ordered_json dims_json(const ImageDims& d) {
    return ordered_json::array({d.width, d.height});
}

} // namespace

RunConfig config_from_json(const json& j, RunConfig cfg) {
    check_keys(j, "config", {"seed", "threads", "out_dir", "simulate", "generate", "sample", "score"});
    read(j, "seed", cfg.seed);
    read(j, "threads", cfg.threads);
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

    if (j.contains("simulate")) {
        const auto& s = j.at("simulate");
        check_keys(s, "simulate",
                   {"dataset", "n_clips", "timepoints_per_clip", "timepoint_interval_s", "phase_vocab", "action_vocab",
                    "robot_step_vocab", "tool_vocab", "role_vocab", "sterility_breach_rate", "room_extent_m", "image"});
        auto& c = cfg.simulate;
        read(s, "dataset", c.dataset);
        read(s, "n_clips", c.n_clips);
        read(s, "timepoints_per_clip", c.timepoints_per_clip);
        read(s, "timepoint_interval_s", c.timepoint_interval_s);
        read(s, "phase_vocab", c.phase_vocab);
        read(s, "action_vocab", c.action_vocab);
        read(s, "robot_step_vocab", c.robot_step_vocab);
        read(s, "tool_vocab", c.tool_vocab);
        read(s, "role_vocab", c.role_vocab);
        read(s, "sterility_breach_rate", c.sterility_breach_rate);
        if (s.contains("room_extent_m")) {
            const auto v = s.at("room_extent_m").get<std::vector<double>>();
            if (v.size() != 3) throw UsageError("room_extent_m must be [x, y, z]");
            c.room_extent_m = Vec3{v[0], v[1], v[2]};
        }
        if (s.contains("image")) c.image = read_dims(s.at("image"));
    }
    if (j.contains("generate")) {
        const auto& g = j.at("generate");
        check_keys(g, "generate", {"negative_pair_rate", "distance_round_dp", "views", "contact_predicates", "memory_k"});
        auto& c = cfg.generate;
        read(g, "negative_pair_rate", c.negative_pair_rate);
        read(g, "distance_round_dp", c.distance_round_dp);
        read(g, "views", c.views);
        read(g, "contact_predicates", c.contact_predicates);
        read(g, "memory_k", c.memory_k);
    }
    if (j.contains("sample")) {
        const auto& s = j.at("sample");
        check_keys(s, "sample", {"train", "val", "test", "alpha", "beta", "allocation"});
        auto& c = cfg.sample;
        read(s, "train", c.train);
        read(s, "val", c.val);
        read(s, "test", c.test);
        read(s, "alpha", c.alpha);
        read(s, "beta", c.beta);
        if (s.contains("allocation")) c.allocation = sampler::parse_allocation(s.at("allocation").get<std::string>());
    }
    if (j.contains("score")) {
        const auto& s = j.at("score");
        check_keys(s, "score", {"hierarchy", "n_resamples", "level", "default_image"});
        auto& c = cfg.score;
        if (s.contains("hierarchy")) c.hierarchy = scorer::parse_hierarchy(s.at("hierarchy").get<std::string>());
        read(s, "n_resamples", c.n_resamples);
        read(s, "level", c.level);
        if (s.contains("default_image")) c.default_image = read_dims(s.at("default_image"));
    }
    cfg.propagate_seed();
    return cfg;
}

ordered_json config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["out_dir"] = cfg.out_dir.string();
    const auto& s = cfg.simulate;
    j["simulate"] = {{"dataset", s.dataset},
                     {"n_clips", s.n_clips},
                     {"timepoints_per_clip", s.timepoints_per_clip},
                     {"timepoint_interval_s", s.timepoint_interval_s},
                     {"phase_vocab", s.phase_vocab},
                     {"action_vocab", s.action_vocab},
                     {"robot_step_vocab", s.robot_step_vocab},
                     {"tool_vocab", s.tool_vocab},
                     {"role_vocab", s.role_vocab},
                     {"sterility_breach_rate", s.sterility_breach_rate},
                     {"room_extent_m", {s.room_extent_m.x, s.room_extent_m.y, s.room_extent_m.z}},
                     {"image", dims_json(s.image)}};
    const auto& g = cfg.generate;
    j["generate"] = {{"negative_pair_rate", g.negative_pair_rate},
                     {"distance_round_dp", g.distance_round_dp},
                     {"views", g.views},
                     {"contact_predicates", g.contact_predicates},
                     {"memory_k", g.memory_k}};
    auto sample = sampler::spec_to_json(cfg.sample);
    sample.erase("seed");
    j["sample"] = sample;
    j["score"] = {{"hierarchy", std::string(scorer::hierarchy_name(cfg.score.hierarchy))},
                  {"n_resamples", cfg.score.n_resamples},
                  {"level", cfg.score.level},
                  {"default_image", dims_json(cfg.score.default_image)}};
    return j;
}

RunConfig load_config(const fs::path& path) {
    return in_stage("config", path, [&] {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path.string() + "'");
        return config_from_json(json::parse(in));
    });
}

ordered_json StageError::to_json() const {
    ordered_json j;
    j["error"] = kind_;
    j["stage"] = stage_;
    j["message"] = what();
    j["locus"] = locus_;
    return j;
}

std::size_t cmd_simulate(const sim::SimulatorConfig& cfg, const fs::path& out, unsigned threads) {
    return in_stage("simulate", out, [&] {
        const auto file = sim::simulate_procedures(cfg, threads);
        for (const auto& r : file.records) ingest::validate_record(r);
        ingest::write_annotations(file, out);
        return file.records.size();
    });
}

std::size_t cmd_generate(const fs::path& annotations, const fs::path& out, const qagen::GenConfig& cfg,
                         unsigned threads) {
    return in_stage("generate", annotations, [&] {
        ingest::AnnotationReader reader(annotations);
        qa_io::QaWriter writer(out, qa_io::default_header());
        qagen::generate_stream([&](TimepointRecord& r) { return reader.next(r); }, cfg,
                               [&](const QAPair& p) { writer.write(p); }, threads);
        writer.close();
        return writer.count();
    });
}

SampleCounts cmd_sample(const fs::path& pairs, const fs::path& out_dir, const sampler::SampleSpec& spec,
                        unsigned threads) {
    (void)threads;  // both passes are I/O bound and read sequentially
    return in_stage("sample", pairs, [&] {
        spec.validate();
        sampler::FrequencyTable table;
        {
            qa_io::QaReader reader(pairs);
            table = sampler::count_frequencies([&](QAPair& p) { return reader.next(p); });
        }
        qa_io::QaReader reader(pairs);
        const auto splits = sampler::sample([&](QAPair& p) { return reader.next(p); }, table, spec);

        fs::create_directories(out_dir);
        auto header = qa_io::default_header();
        header["sample_spec"] = sampler::spec_to_json(spec);
        header["frequency_digest"] = table.digest();
        const std::pair<std::string_view, const std::vector<QAPair>*> outputs[] = {
            {"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}};
        for (const auto& [name, list] : outputs) {
            header["split"] = std::string(name);
            qa_io::write_pairs(out_dir / (std::string(name) + ".jsonl"), header, *list);
        }
        return SampleCounts{splits.train.size(), splits.val.size(), splits.test.size()};
    });
}

std::size_t cmd_baseline(const fs::path& train, const fs::path& test, const fs::path& out) {
    return in_stage("baseline", train, [&] {
        const auto train_pairs = qa_io::read_pairs(train);
        if (train_pairs.empty()) throw InsufficientData("training split '" + train.string() + "' is empty");
        const auto predictor = scorer::baseline_fit(train_pairs);
        const auto test_pairs = in_stage("baseline", test, [&] { return qa_io::read_pairs(test); });
        std::vector<qa_io::Prediction> preds;
        preds.reserve(test_pairs.size());
        for (const auto& p : test_pairs) preds.push_back({p.id, scorer::baseline_predict(predictor, p)});
        qa_io::write_predictions(out, preds);
        return preds.size();
    });
}

ordered_json cmd_score(const fs::path& benchmark, const fs::path& predictions, const scorer::ScoreOptions& opts,
                       const std::optional<fs::path>& annotations, const fs::path& out) {
    const auto bench = in_stage("score", benchmark, [&] { return qa_io::read_pairs(benchmark); });
    const auto preds = in_stage("score", predictions, [&] { return qa_io::read_predictions(predictions); });
    auto options = opts;
    if (annotations) {
        in_stage("score", *annotations, [&] {
            std::set<std::string> wanted;
            for (const auto& q : bench) {
                if (q.task == TaskKind::GazeLocation) wanted.insert(q.dataset + "/" + q.clip_id + "/" + q.timepoint_id);
            }
            ingest::AnnotationReader reader(*annotations);
            TimepointRecord r;
            while (reader.next(r)) {
                if (!r.gaze || !wanted.count(r.locus())) continue;
                auto it = r.image_dims.find(r.gaze->view);
                if (it != r.image_dims.end()) options.gaze_images[r.locus()] = it->second;
            }
            return 0;
        });
    }
    return in_stage("score", predictions, [&] {
        const auto report = scorer::score_benchmark(bench, preds, options);
        auto j = report_to_json(report);
        if (!out.empty()) {
            std::ofstream f(out, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError("cannot write report '" + out.string() + "'");
            f << j.dump(2) << '\n';
            f.close();
            if (f.fail()) throw IoError("write failed for '" + out.string() + "'");
        }
        return j;
    });
}

std::string cmd_report(const fs::path& report, const fs::path& out_text, const fs::path& out_csv) {
    return in_stage("report", report, [&] {
        std::ifstream in(report);
        if (!in) throw IoError("cannot open report '" + report.string() + "'");
        const auto j = json::parse(in);
        const auto text = scorer::render_text(j);
        auto write = [](const fs::path& path, const std::string& body) {
            if (path.empty()) return;
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError("cannot write '" + path.string() + "'");
            f << body;
            f.close();
            if (f.fail()) throw IoError("write failed for '" + path.string() + "'");
        };
        write(out_text, text);
        write(out_csv, scorer::render_csv(j));
        return text;
    });
}

RunArtifacts run_pipeline(RunConfig cfg) {
    cfg.propagate_seed();
    in_stage("config", cfg.out_dir, [&] {
        cfg.simulate.validate();
        cfg.generate.validate();
        cfg.sample.validate();
        fs::create_directories(cfg.out_dir);
        return 0;
    });
    RunArtifacts a;
    a.annotations = cfg.out_dir / "annotations.jsonl";
    a.pairs = cfg.out_dir / "pairs.jsonl";
    a.train = cfg.out_dir / "train.jsonl";
    a.val = cfg.out_dir / "val.jsonl";
    a.test = cfg.out_dir / "test.jsonl";
    a.predictions = cfg.out_dir / "baseline_predictions.jsonl";
    a.report_json = cfg.out_dir / "report.json";
    a.report_text = cfg.out_dir / "report.txt";
    a.report_csv = cfg.out_dir / "report.csv";

    cmd_simulate(cfg.simulate, a.annotations, cfg.threads);
    cmd_generate(a.annotations, a.pairs, cfg.generate, cfg.threads);
    cmd_sample(a.pairs, cfg.out_dir, cfg.sample, cfg.threads);
    cmd_baseline(a.train, a.test, a.predictions);
    cmd_score(a.test, a.predictions, cfg.score, a.annotations, a.report_json);
    cmd_report(a.report_json, a.report_text, a.report_csv);
    return a;
}

} // namespace orbench::pipeline

// orbench command-line tool: simulate -> generate -> sample -> baseline/score -> report.

#include "orbench/distillkit.hpp"
#include "orbench/errors.hpp"
#include "orbench/pipeline.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace orbench;
namespace pl = orbench::pipeline;

void print_error(const pl::StageError& e) {
    std::cerr << e.to_json().dump() << '\n';
}

template <typename T>
void override_if(const CLI::Option* opt, T& target, const T& value) {
    if (opt->count() > 0) target = value;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"orbench: operating-room QA benchmark toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string config_path;
    auto* seed_opt = app.add_option("--seed", seed, "Global seed; each stage derives its own sub-seed")->envname("ORBENCH_SEED");
    auto* threads_opt = app.add_option("--threads", threads, "Worker cap (0 = all cores)")->envname("ORBENCH_THREADS");
    app.add_option("--config", config_path, "JSON run configuration; flags override its fields")
        ->envname("ORBENCH_CONFIG")
        ->check(CLI::ExistingFile);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Write synthetic annotations");
    std::string sim_out;
    std::size_t n_clips = 0, n_tp = 0;
    double breach_rate = 0.0;
    std::string sim_dataset;
    sim_cmd->add_option("--out", sim_out, "Annotation file to write")->required();
    auto* clips_opt = sim_cmd->add_option("--clips", n_clips, "Number of clips");
    auto* tp_opt = sim_cmd->add_option("--timepoints", n_tp, "Timepoints per clip");
    auto* breach_opt = sim_cmd->add_option("--breach-rate", breach_rate, "Sterility breach rate per timepoint");
    auto* dataset_opt = sim_cmd->add_option("--dataset", sim_dataset, "Dataset name");

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate QA pairs from annotations");
    std::string gen_in, gen_out;
    std::size_t memory_k = 0;
    double neg_rate = 0.0;
    gen_cmd->add_option("--annotations", gen_in, "Annotation file")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen_out, "QA pair file to write")->required();
    auto* memk_opt = gen_cmd->add_option("--memory-k", memory_k, "Attach memory context with this short-term length");
    auto* neg_opt = gen_cmd->add_option("--negative-rate", neg_rate, "Rate of non-interacting pairs asked about");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "Diversity-sample train/val/test splits");
    std::string sample_in, sample_out;
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    double alpha = 1.0, beta = 1.0;
    std::string allocation;
    sample_cmd->add_option("--pairs", sample_in, "QA pair file")->required()->check(CLI::ExistingFile);
    sample_cmd->add_option("--out-dir", sample_out, "Directory for train/val/test files")->required();
    auto* train_opt = sample_cmd->add_option("--train", n_train, "Train split size");
    auto* val_opt = sample_cmd->add_option("--val", n_val, "Validation split size");
    auto* test_opt = sample_cmd->add_option("--test", n_test, "Test split size");
    auto* alpha_opt = sample_cmd->add_option("--alpha", alpha, "Question inverse-frequency exponent");
    auto* beta_opt = sample_cmd->add_option("--beta", beta, "Answer inverse-frequency exponent");
    auto* alloc_opt = sample_cmd->add_option("--allocation", allocation, "equal_per_group or proportional");

    // baseline
    auto* base_cmd = app.add_subcommand("baseline", "Most-frequent-answer predictions");
    std::string base_train, base_test, base_out;
    base_cmd->add_option("--train", base_train, "Training split")->required()->check(CLI::ExistingFile);
    base_cmd->add_option("--test", base_test, "Split to predict")->required()->check(CLI::ExistingFile);
    base_cmd->add_option("--out", base_out, "Predictions file to write")->required();

    // score
    auto* score_cmd = app.add_subcommand("score", "Score predictions against a benchmark split");
    std::string score_bench, score_preds, score_out, score_ann, hierarchy;
    std::size_t resamples = 0;
    score_cmd->add_option("--benchmark", score_bench, "Benchmark split")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--predictions", score_preds, "Predictions file")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--out", score_out, "Report file to write")->required();
    auto* ann_opt = score_cmd->add_option("--annotations", score_ann, "Annotations for gaze image sizes")
                        ->check(CLI::ExistingFile);
    auto* hier_opt = score_cmd->add_option("--hierarchy", hierarchy, "dataset_task or flat");
    auto* res_opt = score_cmd->add_option("--resamples", resamples, "Bootstrap resamples");

    // report
    auto* report_cmd = app.add_subcommand("report", "Render a score report as a table and CSV");
    std::string report_in, report_text, report_csv;
    report_cmd->add_option("--report", report_in, "Report file")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--text", report_text, "Also write the table here");
    report_cmd->add_option("--csv", report_csv, "Write CSV here");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run the whole pipeline");
    std::string run_out;
    auto* run_out_opt = run_cmd->add_option("--out-dir", run_out, "Output directory");

    // distillation kernel
    auto* loss_cmd = app.add_subcommand("distill-loss", "Distillation loss of two logit matrices");
    auto* grad_cmd = app.add_subcommand("distill-grad", "Gradient of the distillation loss w.r.t. student logits");
    std::string teacher_path, student_path, grad_out;
    double temperature = 1.0;
    for (auto* c : {loss_cmd, grad_cmd}) {
        c->add_option("--teacher", teacher_path, "Teacher logits")->required()->check(CLI::ExistingFile);
        c->add_option("--student", student_path, "Student logits")->required()->check(CLI::ExistingFile);
        c->add_option("-T,--temperature", temperature, "Softening temperature");
    }
    grad_cmd->add_option("--out", grad_out, "Gradient matrix file")->required();

    auto* crop_cmd = app.add_subcommand("crop", "Top-left crop of a weight matrix");
    std::string crop_in, crop_out;
    std::size_t crop_rows = 0, crop_cols = 0;
    crop_cmd->add_option("--in", crop_in, "Matrix file")->required()->check(CLI::ExistingFile);
    crop_cmd->add_option("--rows", crop_rows, "Rows to keep")->required();
    crop_cmd->add_option("--cols", crop_cols, "Columns to keep")->required();
    crop_cmd->add_option("--out", crop_out, "Cropped matrix file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error(pl::StageError("cli", "UsageError", e.what(), ""));
        return 2;
    }

    try {
        pl::RunConfig cfg;
        if (!config_path.empty()) cfg = pl::load_config(config_path);
        override_if(seed_opt, cfg.seed, seed);
        override_if(threads_opt, cfg.threads, threads);
        cfg.propagate_seed();

        auto guarded = [](std::string_view stage, auto&& fn) {
            try {
                return fn();
            } catch (const Error& e) {
                throw pl::StageError(std::string(stage), e.kind(), e.what(), "");
            }
        };

        if (sim_cmd->parsed()) {
            override_if(clips_opt, cfg.simulate.n_clips, n_clips);
            override_if(tp_opt, cfg.simulate.timepoints_per_clip, n_tp);
            override_if(breach_opt, cfg.simulate.sterility_breach_rate, breach_rate);
            override_if(dataset_opt, cfg.simulate.dataset, sim_dataset);
            guarded("simulate", [&] { cfg.simulate.validate(); return 0; });
            const auto n = pl::cmd_simulate(cfg.simulate, sim_out, cfg.threads);
            fmt::print("wrote {} records to {}\n", n, sim_out);
        } else if (gen_cmd->parsed()) {
            override_if(memk_opt, cfg.generate.memory_k, memory_k);
            override_if(neg_opt, cfg.generate.negative_pair_rate, neg_rate);
            guarded("generate", [&] { cfg.generate.validate(); return 0; });
            const auto n = pl::cmd_generate(gen_in, gen_out, cfg.generate, cfg.threads);
            fmt::print("wrote {} pairs to {}\n", n, gen_out);
        } else if (sample_cmd->parsed()) {
            override_if(train_opt, cfg.sample.train, n_train);
            override_if(val_opt, cfg.sample.val, n_val);
            override_if(test_opt, cfg.sample.test, n_test);
            override_if(alpha_opt, cfg.sample.alpha, alpha);
            override_if(beta_opt, cfg.sample.beta, beta);
            if (alloc_opt->count() > 0) {
                cfg.sample.allocation = guarded("sample", [&] { return sampler::parse_allocation(allocation); });
            }
            const auto c = pl::cmd_sample(sample_in, sample_out, cfg.sample, cfg.threads);
            fmt::print("train {}  val {}  test {}\n", c.train, c.val, c.test);
        } else if (base_cmd->parsed()) {
            const auto n = pl::cmd_baseline(base_train, base_test, base_out);
            fmt::print("wrote {} predictions to {}\n", n, base_out);
        } else if (score_cmd->parsed()) {
            if (hier_opt->count() > 0) {
                cfg.score.hierarchy = guarded("score", [&] { return scorer::parse_hierarchy(hierarchy); });
            }
            override_if(res_opt, cfg.score.n_resamples, resamples);
            std::optional<std::filesystem::path> ann;
            if (ann_opt->count() > 0) ann = score_ann;
            const auto j = pl::cmd_score(score_bench, score_preds, cfg.score, ann, score_out);
            fmt::print("overall {:.4f} over {} samples ({} missing, {} unparseable)\n", j["overall"]["mean"].get<double>(),
                       j["n_samples"].get<std::size_t>(), j["n_missing"].get<std::size_t>(),
                       j["n_unparseable"].get<std::size_t>());
        } else if (report_cmd->parsed()) {
            std::cout << pl::cmd_report(report_in, report_text, report_csv);
        } else if (run_cmd->parsed()) {
            if (run_out_opt->count() > 0) cfg.out_dir = run_out;
            const auto a = pl::run_pipeline(cfg);
            std::cout << pl::cmd_report(a.report_json, "", "");
            fmt::print("artifacts in {}\n", cfg.out_dir.string());
        } else if (loss_cmd->parsed() || grad_cmd->parsed()) {
            const auto zt = guarded("distill", [&] { return distill::load_matrix(teacher_path); });
            const auto zs = guarded("distill", [&] { return distill::load_matrix(student_path); });
            if (loss_cmd->parsed()) {
                fmt::print("{:.17g}\n", guarded("distill", [&] { return distill::distill_loss(zt, zs, temperature); }));
            } else {
                guarded("distill", [&] {
                    distill::save_matrix(grad_out, distill::distill_loss_grad(zt, zs, temperature));
                    return 0;
                });
            }
        } else if (crop_cmd->parsed()) {
            guarded("crop", [&] {
                distill::save_matrix(crop_out, distill::crop_weights(distill::load_matrix(crop_in), crop_rows, crop_cols));
                return 0;
            });
        }
    } catch (const pl::StageError& e) {
        print_error(e);
        return 1;
    } catch (const orbench::Error& e) {
        print_error(pl::StageError("cli", e.kind(), e.what(), ""));
        return 1;
    } catch (const std::exception& e) {
        print_error(pl::StageError("cli", "InternalError", e.what(), ""));
        return 1;
    }
    return 0;
}

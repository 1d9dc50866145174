// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include "oracle/oracle.hpp"
#include "rule_cases.hpp"
#include "support.hpp"

#include "orbench/answers.hpp"
#include "orbench/distillkit.hpp"
#include "orbench/hashing.hpp"
#include "orbench/ingest.hpp"
#include "orbench/pipeline.hpp"
#include "orbench/qa_io.hpp"
#include "orbench/qagen.hpp"
#include "orbench/sampler.hpp"
#include "orbench/scorer.hpp"
#include "orbench/simulator.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/hypergeometric.hpp>
#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace orbench;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<QAPair> simulated_pairs(std::uint64_t seed, std::size_t clips, std::size_t timepoints,
                                    double breach_rate = 0.1) {
    sim::SimulatorConfig cfg;
    cfg.seed = seed;
    cfg.n_clips = clips;
    cfg.timepoints_per_clip = timepoints;
    cfg.sterility_breach_rate = breach_rate;
    return qagen::generate_all(sim::simulate_procedures(cfg).records, qagen::GenConfig{});
}

Outcome ac1_rules() {
    std::map<std::string, int> per_rule;
    int failures = 0;
    for (const auto& c : rule_cases::all()) {
        const double got = scorer::score_answer(c.task, c.predicted, c.truth, scorer::ScoreContext{c.image}).score;
        if (std::abs(got - c.expected) > 1e-12) {
            ++failures;
            fmt::print("  rule {} '{}' vs '{}': got {} expected {}\n", c.rule, c.predicted, c.truth, got, c.expected);
        }
        ++per_rule[c.rule];
    }
    int thin = 0;
    for (const auto& [rule, n] : per_rule) thin += n < 3;
    return {failures == 0 && thin == 0,
            fmt::format("{} cases over {} rules, {} mismatches, {} rules with <3 cases", rule_cases::all().size(),
                        per_rule.size(), failures, thin)};
}

Outcome ac2_echo() {
    const auto pairs = simulated_pairs(21, 8, 60);
    const auto t0 = Clock::now();
    std::size_t bad = 0;
    std::set<TaskKind> tasks;
    for (const auto& p : pairs) {
        bad += scorer::score_answer(p.task, p.answer, p.answer).score != 1.0;
        tasks.insert(p.task);
    }
    const double secs = seconds_since(t0);
    return {pairs.size() >= 10000 && bad == 0 && tasks.size() == kTaskCount && secs < 10.0,
            fmt::format("{} pairs, {} tasks, {} below 1.0, {:.2f} s", pairs.size(), tasks.size(), bad, secs)};
}

Outcome ac3_baseline() {
    const auto pairs = simulated_pairs(31, 12, 60);
    const auto table = sampler::count_frequencies(pairs);
    sampler::SampleSpec spec;
    spec.seed = 31;
    spec.train = 5000;
    spec.test = 2000;
    const auto splits = sampler::sample(pairs, table, spec);
    const auto model = scorer::baseline_fit(splits.train);
    std::vector<qa_io::Prediction> preds;
    for (const auto& p : splits.test) preds.push_back({p.id, scorer::baseline_predict(model, p)});
    scorer::ScoreOptions opts;
    opts.n_resamples = 10;
    const double overall = scorer::score_benchmark(splits.test, preds, opts).point.overall;
    const double reference = oracle::baseline_overall(splits.train, splits.test);
    return {std::abs(overall - reference) <= 1e-9 && overall > 0.0 && overall < 1.0,
            fmt::format("library {:.12f}, independent {:.12f}", overall, reference)};
}

Outcome ac4_bootstrap() {
    const auto t0 = Clock::now();
    hashing::Rng rng(41);
    std::vector<scorer::SampleScore> bern, flat;
    for (int i = 0; i < 10000; ++i) {
        const auto id = std::to_string(i);
        bern.push_back({id, "sim", TaskKind::IsCompleted, rng.bernoulli(0.5) ? 1.0 : 0.0, false, false});
        flat.push_back({id, "sim", TaskKind::IsCompleted, 0.7, false, false});
    }
    scorer::BootstrapOptions opts;
    opts.n_resamples = 1000;
    opts.seed = 41;
    const auto b = scorer::bootstrap_ci(bern, opts);
    const auto f = scorer::bootstrap_ci(flat, opts);
    const double width = b.overall.high - b.overall.low;
    const double flat_width = f.overall.high - f.overall.low;
    const double secs = seconds_since(t0);
    return {std::abs(width - 0.0196) <= 0.2 * 0.0196 && std::abs(flat_width) <= 1e-12 && secs < 30.0,
            fmt::format("Bernoulli width {:.5f} (target 0.0196 +/- 20%), constant width {:.2g}, {:.2f} s", width,
                        flat_width, secs)};
}

Outcome ac5_diversity() {
    // Enrichment of the minority breach answer at default exponents.
    const auto pairs = simulated_pairs(51, 30, 60, 0.1);
    const auto table = sampler::count_frequencies(pairs);
    sampler::SampleSpec spec;
    spec.seed = 51;
    spec.train = 5000;
    const auto s = sampler::sample(pairs, table, spec);
    auto share = [](const std::vector<QAPair>& v) {
        double n = 0, m = 0;
        for (const auto& p : v) {
            if (p.task != TaskKind::SterilityBreachDetection) continue;
            ++n;
            m += p.answer == "true";
        }
        return n > 0 ? m / n : 0.0;
    };
    const double source = share(pairs);
    const double sampled = share(s.train);
    const double enrichment = source > 0 ? sampled / source : 0.0;

    // Uniform mode: minority count in k draws from a 36:4 group is hypergeometric.
    constexpr unsigned N = 40, K = 4, k = 10, trials = 10000;
    std::vector<QAPair> group;
    for (unsigned i = 0; i < N; ++i) {
        QAPair p;
        p.dataset = "sim";
        p.clip_id = "clip";
        p.timepoint_id = "tp_" + std::to_string(i);
        p.task = TaskKind::SterilityBreachDetection;
        p.question = qagen::question_for(p.task);
        p.answer = i < K ? "true" : "false";
        p.id = make_qa_id(p.dataset, p.clip_id, p.timepoint_id, p.task, p.question);
        group.push_back(p);
    }
    const auto gtable = sampler::count_frequencies(group);
    std::vector<double> observed(K + 1, 0.0);
    for (unsigned t = 0; t < trials; ++t) {
        sampler::SampleSpec u;
        u.seed = t;
        u.train = k;
        u.alpha = u.beta = 0.0;
        const auto picked = sampler::sample(group, gtable, u).train;
        std::size_t minority = 0;
        for (const auto& p : picked) minority += p.answer == "true";
        observed[minority] += 1.0;
    }
    const boost::math::hypergeometric_distribution<double> hyper(K, k, N);
    double chi2 = 0.0;
    for (unsigned x = 0; x <= K; ++x) {
        const double expected = trials * boost::math::pdf(hyper, x);
        chi2 += (observed[x] - expected) * (observed[x] - expected) / expected;
    }
    const double pvalue = boost::math::cdf(boost::math::complement(boost::math::chi_squared(K), chi2));
    return {enrichment >= 1.5 && pvalue > 0.01,
            fmt::format("minority share {:.3f} -> {:.3f} ({:.2f}x); uniform-mode hypergeometric chi2 {:.2f}, p {:.3f}",
                        source, sampled, enrichment, chi2, pvalue)};
}

Outcome ac6_splits() {
    const auto pairs = simulated_pairs(61, 12, 40);
    const auto table = sampler::count_frequencies(pairs);
    std::size_t id_overlap = 0, clip_overlap = 0, empty = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        sampler::SampleSpec spec;
        spec.seed = seed;
        spec.train = 1000;
        spec.val = 200;
        spec.test = 300;
        const auto s = sampler::sample(pairs, table, spec);
        empty += s.train.empty() || s.val.empty() || s.test.empty();
        std::set<std::string> ids, clips;
        for (const auto& p : s.train) {
            ids.insert(p.id);
            clips.insert(p.clip_id);
        }
        for (const auto* v : {&s.val, &s.test}) {
            for (const auto& p : *v) {
                id_overlap += ids.count(p.id);
                clip_overlap += clips.count(p.clip_id);
            }
        }
    }
    return {id_overlap == 0 && clip_overlap == 0 && empty == 0,
            fmt::format("100 seeds: {} shared ids, {} shared clips, {} runs with an empty split", id_overlap,
                        clip_overlap, empty)};
}

Outcome ac7_distill() {
    using namespace distill;
    const std::vector<double> p{0.1, 0.2, 0.7};
    const double self = kl_div(p, p);
    const double ln2_err =
        std::abs(kl_div(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) - std::log(2.0));

    std::mt19937_64 rng(71);
    std::normal_distribution<double> nd(0.0, 2.0);
    auto random = [&](std::size_t r, std::size_t c) {
        Matrix m(r, c);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) m(i, j) = nd(rng);
        }
        return m;
    };
    double worst = 0.0;
    int instances = 0;
    for (double T : {0.5, 1.0, 2.0, 10.0}) {
        for (int n = 0; n < 100; ++n, ++instances) {
            const auto zt = random(3, 5);
            auto zs = random(3, 5);
            const auto g = distill_loss_grad(zt, zs, T);
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t j = 0; j < 5; ++j) {
                    const double keep = zs(i, j);
                    zs(i, j) = keep + 1e-5;
                    const double up = distill_loss(zt, zs, T);
                    zs(i, j) = keep - 1e-5;
                    const double down = distill_loss(zt, zs, T);
                    zs(i, j) = keep;
                    const double fd = (up - down) / 2e-5;
                    worst = std::max(worst, std::abs(fd - g(i, j)) / std::max(std::abs(g(i, j)), 1e-3));
                }
            }
        }
    }

    const std::vector<Stage> targets{{28, 768}, {15, 768}, {8, 768}};
    const auto plan = shrink_plan(Stage{28, 1536}, targets);
    const auto teacher = random(1536, 1536);
    const auto chain = apply_schedule(teacher, plan);
    const bool crop_ok = chain.size() == 4 && chain.back() == crop_weights(teacher, 768, 768) &&
                         crop_weights(crop_weights(teacher, 1024, 900), 768, 768) == crop_weights(teacher, 768, 768);
    return {self == 0.0 && ln2_err <= 1e-12 && worst <= 1e-6 && crop_ok,
            fmt::format("KL(p||p)={}, |KL-ln2|={:.1e}, worst gradient rel. error {:.1e} over {} instances, chain {}",
                        self, ln2_err, worst, instances, crop_ok ? "ok" : "mismatch")};
}

Outcome ac8_coverage() {
    const auto records = sim::simulate_procedures(sim::SimulatorConfig{}).records;
    const auto pairs = qagen::generate_all(records, qagen::GenConfig{});
    std::set<TaskKind> tasks;
    std::size_t failures = 0;
    for (const auto& p : pairs) {
        tasks.insert(p.task);
        if (!answers::conforms(p.task, p.answer) || scorer::score_answer(p.task, p.answer, p.answer).unparseable) {
            ++failures;
        }
    }
    return {tasks.size() == kTaskCount && failures == 0,
            fmt::format("{} of 23 tasks over {} pairs, {} grammar failures", tasks.size(), pairs.size(), failures)};
}

Outcome ac9_scale(const fs::path& dir) {
    // About 150 pairs per timepoint at default settings.
    sim::SimulatorConfig sc;
    sc.seed = 91;
    sc.n_clips = 120;
    sc.timepoints_per_clip = 60;
    const auto annotations = dir / "scale_annotations.jsonl";
    const auto pairs = dir / "scale_pairs.jsonl";
    pipeline::cmd_simulate(sc, annotations, 1);

    const auto t0 = Clock::now();
    const auto n = pipeline::cmd_generate(annotations, pairs, qagen::GenConfig{}, 1);
    sampler::SampleSpec spec;
    spec.seed = 91;
    spec.train = 100000;
    spec.val = 10000;
    spec.test = 10000;
    const auto counts = pipeline::cmd_sample(pairs, dir, spec, 1);
    const double secs = seconds_since(t0);
    const double peak_mib = static_cast<double>(ts::peak_rss_kib()) / 1024.0;

    // Independent recount of the stream against the frequency table.
    qa_io::QaReader reader(pairs);
    std::size_t recount = 0;
    QAPair p;
    while (reader.next(p)) ++recount;
    fs::remove(pairs);
    fs::remove(annotations);
    return {n >= 1000000 && recount == n && secs < 300.0 && peak_mib < 2048.0,
            fmt::format("{} pairs (recount {}), sampled {}/{}/{}, {:.1f} s, peak RSS {:.0f} MiB", n, recount,
                        counts.train, counts.val, counts.test, secs, peak_mib)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome ac10_determinism(const fs::path& dir) {
    pipeline::RunConfig cfg;
    cfg.seed = 101;
    cfg.simulate.n_clips = 6;
    cfg.simulate.timepoints_per_clip = 40;
    cfg.sample.train = 2000;
    cfg.sample.val = 300;
    cfg.sample.test = 800;
    cfg.score.n_resamples = 200;
    cfg.propagate_seed();
    auto a = cfg;
    a.out_dir = dir / "run_a";
    auto b = cfg;
    b.out_dir = dir / "run_b";
    b.threads = 2;
    pipeline::run_pipeline(a);
    pipeline::run_pipeline(b);
    std::size_t differing = 0, compared = 0;
    for (const char* f : {"annotations.jsonl", "pairs.jsonl", "train.jsonl", "val.jsonl", "test.jsonl",
                          "baseline_predictions.jsonl", "report.json", "report.txt", "report.csv"}) {
        ++compared;
        differing += slurp(a.out_dir / f) != slurp(b.out_dir / f);
    }
    return {differing == 0, fmt::format("{} artifacts compared across two runs, {} differ", compared, differing)};
}

} // namespace

int main() {
    const auto dir = ts::temp_dir("acceptance");
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"scoring-rule conformance", ac1_rules},
        {"echo property", ac2_echo},
        {"baseline sanity", ac3_baseline},
        {"bootstrap correctness", ac4_bootstrap},
        {"sampler diversity", ac5_diversity},
        {"split hygiene", ac6_splits},
        {"distillation kernel", ac7_distill},
        {"task coverage and closed loop", ac8_coverage},
        {"scale and performance", [&] { return ac9_scale(dir); }},
        {"pipeline determinism", [&] { return ac10_determinism(dir); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        fmt::print("AC{} {} {}: {}\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail);
        std::fflush(stdout);
    }
    fs::remove_all(dir);
    return failed == 0 ? 0 : 1;
}

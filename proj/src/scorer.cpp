#include "orbench/scorer.hpp"

#include "orbench/answers.hpp"
#include "orbench/errors.hpp"
#include "orbench/hashing.hpp"
#include "orbench/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace orbench::scorer {

using answers::Shape;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool below(double value, double threshold) {
    return value < threshold - kBoundaryTolerance;
}

std::vector<std::string> lower_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Scored unparseable() {
    return Scored{0.0, true};
}

Scored scored(double s) {
    return Scored{s, false};
}

} // namespace

double set_iou(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (a.empty() && b.empty()) return 1.0;
    std::vector<std::string> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    const auto uni = a.size() + b.size() - inter.size();
    return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

double rect_iou(double ax, double ay, double aw, double ah, double bx, double by, double bw, double bh) {
    if (aw <= 0 || ah <= 0 || bw <= 0 || bh <= 0) return 0.0;
    const double ix = std::max(0.0, std::min(ax + aw, bx + bw) - std::max(ax, bx));
    const double iy = std::max(0.0, std::min(ay + ah, by + bh) - std::max(ay, by));
    const double inter = ix * iy;
    const double uni = aw * ah + bw * bh - inter;
    return uni > 0 ? inter / uni : 0.0;
}

double iou_band(double iou) {
    if (!below(iou, 0.75)) return 1.0;
    if (!below(iou, 0.5)) return 0.75;
    if (!below(iou, 0.25)) return 0.5;
    if (!below(iou, 0.125)) return 0.25;
    return 0.0;
}

double relative_band(double predicted, double truth) {
    if (!std::isfinite(predicted)) return 0.0;
    if (std::fabs(truth) < kRelativeEpsilon) return std::fabs(predicted - truth) < kRelativeEpsilon ? 1.0 : 0.0;
    const double rel = std::fabs(predicted - truth) / std::fabs(truth);
    if (below(rel, 0.10)) return 1.0;
    if (below(rel, 0.25)) return 0.5;
    return 0.0;
}

double absolute_band(double error, double full, double half) {
    if (!std::isfinite(error)) return 0.0;
    if (below(error, full)) return 1.0;
    if (below(error, half)) return 0.5;
    return 0.0;
}

std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double sequence_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const auto longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

double predicate_macro_f1(const std::vector<Triplet>& predicted, const std::vector<Triplet>& truth) {
    const std::set<Triplet> p(predicted.begin(), predicted.end());
    const std::set<Triplet> t(truth.begin(), truth.end());
    if (p.empty() && t.empty()) return 1.0;
    std::map<std::string, std::array<std::size_t, 3>> per;  // predicate -> {tp, |P|, |T|}
    for (const auto& x : p) {
        auto& c = per[x.predicate];
        ++c[1];
        if (t.count(x)) ++c[0];
    }
    for (const auto& x : t) ++per[x.predicate][2];
    double sum = 0.0;
    for (const auto& [pred, c] : per) sum += 2.0 * static_cast<double>(c[0]) / static_cast<double>(c[1] + c[2]);
    return sum / static_cast<double>(per.size());
}

double bleu1(std::string_view predicted, std::string_view truth) {
    const auto p = lower_tokens(predicted);
    const auto t = lower_tokens(truth);
    if (p.empty()) return t.empty() ? 1.0 : 0.0;
    std::unordered_map<std::string, std::size_t> ref;
    for (const auto& w : t) ++ref[w];
    std::size_t matched = 0;
    for (const auto& w : p) {
        auto it = ref.find(w);
        if (it != ref.end() && it->second > 0) {
            --it->second;
            ++matched;
        }
    }
    const double precision = static_cast<double>(matched) / static_cast<double>(p.size());
    const double bp = p.size() < t.size() ? std::exp(1.0 - static_cast<double>(t.size()) / static_cast<double>(p.size())) : 1.0;
    return precision * bp;
}

Scored score_answer(TaskKind task, std::string_view predicted, std::string_view truth, const ScoreContext& ctx) {
    const auto shape = answers::shape_of(task);
    // A blank prediction is no answer at all, even where the grammar reads it as an empty set.
    if (lower_tokens(predicted).empty()) {
        if (shape == Shape::Text && lower_tokens(truth).empty()) return scored(1.0);
        return unparseable();
    }
    switch (shape) {
        case Shape::Count: {
            const auto p = answers::parse_number(predicted);
            const auto t = answers::parse_number(truth);
            if (!p || !t) return unparseable();
            const double diff = std::fabs(*p - *t);
            if (diff < kBoundaryTolerance) return scored(1.0);
            if (std::fabs(diff - 1.0) < kBoundaryTolerance) return scored(0.5);
            return scored(0.0);
        }
        case Shape::Integer:
        case Shape::Decimal: {
            const auto p = answers::parse_number(predicted);
            const auto t = answers::parse_number(truth);
            if (!p || !t) return unparseable();
            return scored(relative_band(*p, *t));
        }
        case Shape::Boolean: {
            const auto p = answers::parse_bool(predicted);
            const auto t = answers::parse_bool(truth);
            if (!p || !t) return unparseable();
            return scored(*p == *t ? 1.0 : 0.0);
        }
        case Shape::Label: {
            const auto p = answers::parse_label(predicted);
            const auto t = answers::parse_label(truth);
            if (!p || !t) return unparseable();
            return scored(*p == *t ? 1.0 : 0.0);
        }
        case Shape::LabelSet:
            return scored(set_iou(answers::parse_label_list(predicted), answers::parse_label_list(truth)));
        case Shape::Sequence:
            return scored(sequence_similarity(answers::parse_label_list(predicted), answers::parse_label_list(truth)));
        case Shape::Triplets: {
            const auto p = answers::parse_triplets(predicted);
            const auto t = answers::parse_triplets(truth);
            if (!p || !t) return unparseable();
            return scored(predicate_macro_f1(*p, *t));
        }
        case Shape::BBox: {
            const auto p = answers::extract_numbers(predicted);
            const auto t = answers::extract_numbers(truth);
            if (p.size() < 4 || t.size() < 4) return unparseable();
            return scored(iou_band(rect_iou(p[0], p[1], p[2], p[3], t[0], t[1], t[2], t[3])));
        }
        case Shape::Point3: {
            const auto p = answers::extract_numbers(predicted);
            const auto t = answers::extract_numbers(truth);
            if (p.size() < 3 || t.size() < 3) return unparseable();
            const double err = euclidean_distance(Vec3{p[0], p[1], p[2]}, Vec3{t[0], t[1], t[2]});
            return scored(absolute_band(err, 0.10, 0.25));
        }
        case Shape::Point2: {
            const auto p = answers::extract_numbers(predicted);
            const auto t = answers::extract_numbers(truth);
            if (p.size() < 2 || t.size() < 2) return unparseable();
            const auto dims = ctx.image.value_or(kDefaultImage);
            const double diag = std::hypot(static_cast<double>(dims.width), static_cast<double>(dims.height));
            if (diag <= 0) throw UsageError("GazeLocation scoring needs a positive image size");
            const double err = std::hypot(p[0] - t[0], p[1] - t[1]) / diag;
            return scored(absolute_band(err, 0.10, 0.25));
        }
        case Shape::Text:
            return scored(bleu1(predicted, truth));
    }
    throw UsageError("unknown task");
}

// ---- aggregation --------------------------------------------------------------

std::string_view hierarchy_name(Hierarchy h) {
    return h == Hierarchy::flat ? "flat" : "dataset_task";
}

Hierarchy parse_hierarchy(std::string_view s) {
    if (s == "dataset_task") return Hierarchy::dataset_task;
    if (s == "flat") return Hierarchy::flat;
    throw UsageError("unknown hierarchy '" + std::string(s) + "' (expected dataset_task or flat)");
}

namespace {

// Dense indexing of groups so resamples aggregate over flat arrays.
struct Layout {
    std::vector<std::string> datasets;
    std::vector<TaskKind> tasks;
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // (dataset idx, task idx), sorted
    std::vector<std::size_t> group_of_sample;

    explicit Layout(std::span<const SampleScore> samples) {
        std::set<std::string> ds;
        std::set<TaskKind> ts;
        for (const auto& s : samples) {
            ds.insert(s.dataset);
            ts.insert(s.task);
        }
        datasets.assign(ds.begin(), ds.end());
        tasks.assign(ts.begin(), ts.end());
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
        std::vector<std::pair<std::size_t, std::size_t>> keyed(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto d = static_cast<std::size_t>(std::lower_bound(datasets.begin(), datasets.end(), samples[i].dataset) - datasets.begin());
            const auto t = static_cast<std::size_t>(std::lower_bound(tasks.begin(), tasks.end(), samples[i].task) - tasks.begin());
            keyed[i] = {d, t};
            index.emplace(keyed[i], 0);
        }
        for (auto& [key, idx] : index) {
            idx = groups.size();
            groups.push_back(key);
        }
        group_of_sample.resize(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) group_of_sample[i] = index.at(keyed[i]);
    }
};

// NaN marks "no value" (group absent from a resample).
struct Values {
    double overall = std::nan("");
    std::vector<double> dataset;
    std::vector<double> task;
    std::vector<double> group;
};

Values compute(const Layout& L, const std::vector<double>& sum, const std::vector<std::size_t>& count, Hierarchy h) {
    const double nan = std::nan("");
    Values v;
    v.group.assign(L.groups.size(), nan);
    v.dataset.assign(L.datasets.size(), nan);
    v.task.assign(L.tasks.size(), nan);
    for (std::size_t g = 0; g < L.groups.size(); ++g) {
        if (count[g] > 0) v.group[g] = sum[g] / static_cast<double>(count[g]);
    }
    std::vector<double> dsum(L.datasets.size(), 0.0), tsum(L.tasks.size(), 0.0);
    std::vector<double> dn(L.datasets.size(), 0.0), tn(L.tasks.size(), 0.0);
    double total = 0.0, n = 0.0;
    for (std::size_t g = 0; g < L.groups.size(); ++g) {
        if (count[g] == 0) continue;
        const auto [d, t] = L.groups[g];
        if (h == Hierarchy::flat) {
            dsum[d] += sum[g];
            dn[d] += static_cast<double>(count[g]);
            tsum[t] += sum[g];
            tn[t] += static_cast<double>(count[g]);
            total += sum[g];
            n += static_cast<double>(count[g]);
        } else {
            dsum[d] += v.group[g];
            dn[d] += 1.0;
            tsum[t] += v.group[g];
            tn[t] += 1.0;
        }
    }
    for (std::size_t d = 0; d < dn.size(); ++d) {
        if (dn[d] > 0) v.dataset[d] = dsum[d] / dn[d];
    }
    for (std::size_t t = 0; t < tn.size(); ++t) {
        if (tn[t] > 0) v.task[t] = tsum[t] / tn[t];
    }
    if (h == Hierarchy::flat) {
        if (n > 0) v.overall = total / n;
    } else {
        double s = 0.0, m = 0.0;
        for (double x : v.dataset) {
            if (!std::isnan(x)) {
                s += x;
                m += 1.0;
            }
        }
        if (m > 0) v.overall = s / m;
    }
    return v;
}

Values compute_indexed(const Layout& L, std::span<const SampleScore> samples, const std::vector<std::size_t>& idx,
                       Hierarchy h) {
    std::vector<double> sum(L.groups.size(), 0.0);
    std::vector<std::size_t> count(L.groups.size(), 0);
    for (auto i : idx) {
        const auto g = L.group_of_sample[i];
        sum[g] += samples[i].score;
        ++count[g];
    }
    return compute(L, sum, count, h);
}

} // namespace

Aggregate aggregate(std::span<const SampleScore> samples, Hierarchy hierarchy) {
    Aggregate out;
    if (samples.empty()) return out;
    const Layout L(samples);
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto v = compute_indexed(L, samples, all, hierarchy);
    out.overall = v.overall;
    for (std::size_t d = 0; d < L.datasets.size(); ++d) out.per_dataset[L.datasets[d]] = v.dataset[d];
    for (std::size_t t = 0; t < L.tasks.size(); ++t) out.per_task[L.tasks[t]] = v.task[t];
    for (std::size_t g = 0; g < L.groups.size(); ++g) {
        out.per_dataset_task[{L.datasets[L.groups[g].first], L.tasks[L.groups[g].second]}] = v.group[g];
    }
    return out;
}

Resampler uniform_resampler(std::uint64_t seed) {
    const auto base = hashing::derive_seed(seed, "bootstrap");
    return [base](std::size_t r, std::vector<std::size_t>& idx) {
        hashing::Rng rng(hashing::combine(base, r));
        const auto n = static_cast<std::int64_t>(idx.size());
        for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
    };
}

double percentile(std::vector<double>& values, double q) {
    if (values.empty()) throw InsufficientData("percentile of an empty set");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Intervals bootstrap_ci(std::span<const SampleScore> samples, const BootstrapOptions& opts) {
    if (samples.size() < 2) throw InsufficientData("bootstrap needs at least 2 samples, got " + std::to_string(samples.size()));
    if (opts.n_resamples == 0) throw UsageError("bootstrap needs at least one resample");
    if (!(opts.level > 0.0 && opts.level < 1.0)) throw UsageError("confidence level must lie in (0, 1)");

    const Layout L(samples);
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto point = compute_indexed(L, samples, all, opts.hierarchy);
    const auto resampler = opts.resampler ? opts.resampler : uniform_resampler(opts.seed);

    std::vector<Values> draws(opts.n_resamples);
    parallel_for(opts.n_resamples, opts.threads, [&](std::size_t r) {
        std::vector<std::size_t> idx(samples.size());
        resampler(r, idx);
        for (auto i : idx) {
            if (i >= samples.size()) throw UsageError("resampler produced an out-of-range index");
        }
        draws[r] = compute_indexed(L, samples, idx, opts.hierarchy);
    });

    const double lo_q = (1.0 - opts.level) / 2.0;
    const double hi_q = 1.0 - lo_q;
    auto interval = [&](auto&& pick, double estimate) {
        std::vector<double> vals;
        vals.reserve(draws.size());
        for (const auto& d : draws) {
            const double x = pick(d);
            if (!std::isnan(x)) vals.push_back(x);
        }
        if (vals.empty()) return Interval{estimate, estimate};
        Interval iv{percentile(vals, lo_q), percentile(vals, hi_q)};
        iv.low = std::min(iv.low, estimate);
        iv.high = std::max(iv.high, estimate);
        return iv;
    };

    Intervals out;
    out.overall = interval([](const Values& v) { return v.overall; }, point.overall);
    for (std::size_t d = 0; d < L.datasets.size(); ++d) {
        out.per_dataset[L.datasets[d]] = interval([d](const Values& v) { return v.dataset[d]; }, point.dataset[d]);
    }
    for (std::size_t t = 0; t < L.tasks.size(); ++t) {
        out.per_task[L.tasks[t]] = interval([t](const Values& v) { return v.task[t]; }, point.task[t]);
    }
    for (std::size_t g = 0; g < L.groups.size(); ++g) {
        out.per_dataset_task[{L.datasets[L.groups[g].first], L.tasks[L.groups[g].second]}] =
            interval([g](const Values& v) { return v.group[g]; }, point.group[g]);
    }
    return out;
}

// ---- benchmark scoring ----------------------------------------------------------

ScoreReport score_benchmark(std::span<const QAPair> benchmark, std::span<const qa_io::Prediction> predictions,
                            const ScoreOptions& opts) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(benchmark.size());
    for (std::size_t i = 0; i < benchmark.size(); ++i) {
        if (!index.emplace(benchmark[i].id, i).second) {
            throw ValidationError("benchmark", "id", "duplicate qa id " + benchmark[i].id);
        }
    }
    std::vector<const std::string*> answer(benchmark.size(), nullptr);
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        const auto locus = "predictions line " + std::to_string(k + 1);
        auto it = index.find(predictions[k].qa_id);
        if (it == index.end()) {
            throw ValidationError(locus, "qa_id", "'" + predictions[k].qa_id + "' is not in the benchmark");
        }
        if (answer[it->second]) throw ValidationError(locus, "qa_id", "second prediction for " + predictions[k].qa_id);
        answer[it->second] = &predictions[k].raw_answer;
    }

    ScoreReport report;
    report.hierarchy = opts.hierarchy;
    report.n_resamples = opts.n_resamples;
    report.level = opts.level;
    report.seed = opts.seed;
    report.per_sample.resize(benchmark.size());
    parallel_for(benchmark.size(), opts.threads, [&](std::size_t i) {
        const auto& q = benchmark[i];
        auto& s = report.per_sample[i];
        s.qa_id = q.id;
        s.dataset = q.dataset;
        s.task = q.task;
        if (!answer[i]) {
            s.missing = true;
            return;
        }
        ScoreContext ctx;
        ctx.image = opts.default_image;
        if (q.task == TaskKind::GazeLocation) {
            auto it = opts.gaze_images.find(q.dataset + "/" + q.clip_id + "/" + q.timepoint_id);
            if (it != opts.gaze_images.end()) ctx.image = it->second;
        }
        const auto r = score_answer(q.task, *answer[i], q.answer, ctx);
        s.score = r.score;
        s.unparseable = r.unparseable;
    });
    for (const auto& s : report.per_sample) {
        report.n_missing += s.missing ? 1 : 0;
        report.n_unparseable += s.unparseable ? 1 : 0;
    }
    report.point = aggregate(report.per_sample, opts.hierarchy);
    if (report.per_sample.size() >= 2) {
        BootstrapOptions b;
        b.n_resamples = opts.n_resamples;
        b.level = opts.level;
        b.seed = opts.seed;
        b.hierarchy = opts.hierarchy;
        b.threads = opts.threads;
        report.ci = bootstrap_ci(report.per_sample, b);
    }
    return report;
}

namespace {

ordered_json stat(double mean, const std::optional<Interval>& ci) {
    ordered_json j;
    j["mean"] = mean;
    if (ci) {
        j["ci95"] = ordered_json::array({ci->low, ci->high});
    } else {
        j["ci95"] = nullptr;
    }
    return j;
}

template <typename Map, typename Key>
std::optional<Interval> find_ci(const std::optional<Intervals>& ci, Map Intervals::*member, const Key& key) {
    if (!ci) return std::nullopt;
    const auto& m = (*ci).*member;
    auto it = m.find(key);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

} // namespace

ordered_json report_to_json(const ScoreReport& r) {
    ordered_json j;
    j["tool_version"] = std::string(kToolVersion);
    j["scoring_rules_version"] = std::string(kScoringRulesVersion);
    j["hierarchy"] = std::string(hierarchy_name(r.hierarchy));
    j["n_samples"] = r.per_sample.size();
    j["n_missing"] = r.n_missing;
    j["n_unparseable"] = r.n_unparseable;
    j["n_resamples"] = r.n_resamples;
    j["level"] = r.level;
    j["seed"] = r.seed;
    j["overall"] = stat(r.point.overall, r.ci ? std::optional<Interval>(r.ci->overall) : std::nullopt);

    ordered_json datasets = ordered_json::object();
    for (const auto& [d, mean] : r.point.per_dataset) datasets[d] = stat(mean, find_ci(r.ci, &Intervals::per_dataset, d));
    j["per_dataset"] = datasets;

    ordered_json tasks = ordered_json::object();
    for (const auto& [t, mean] : r.point.per_task) {
        tasks[std::string(task_name(t))] = stat(mean, find_ci(r.ci, &Intervals::per_task, t));
    }
    j["per_task"] = tasks;

    ordered_json groups = ordered_json::array();
    for (const auto& [key, mean] : r.point.per_dataset_task) {
        auto g = stat(mean, find_ci(r.ci, &Intervals::per_dataset_task, key));
        ordered_json row;
        row["dataset"] = key.first;
        row["task"] = std::string(task_name(key.second));
        row["mean"] = g["mean"];
        row["ci95"] = g["ci95"];
        groups.push_back(row);
    }
    j["per_dataset_task"] = groups;

    ordered_json samples = ordered_json::array();
    for (const auto& s : r.per_sample) {
        ordered_json row;
        row["qa_id"] = s.qa_id;
        row["score"] = s.score;
        if (s.missing) row["missing"] = true;
        if (s.unparseable) row["unparseable"] = true;
        samples.push_back(row);
    }
    j["per_sample"] = samples;
    return j;
}

namespace {

std::string ci_cell(const json& stat_obj, std::size_t which) {
    const auto& ci = stat_obj.at("ci95");
    if (ci.is_null()) return "";
    return fmt::format("{:.4f}", ci.at(which).get<double>());
}

} // namespace

std::string render_text(const json& report) {
    std::string out;
    out += fmt::format("{:<26} {:>8} {:>8} {:>8}\n", "task", "score", "ci_low", "ci_high");
    out += std::string(53, '-') + "\n";
    const auto& tasks = report.at("per_task");
    for (auto task : all_tasks()) {
        const auto name = std::string(task_name(task));
        if (!tasks.contains(name)) continue;
        const auto& s = tasks.at(name);
        out += fmt::format("{:<26} {:>8.4f} {:>8} {:>8}\n", name, s.at("mean").get<double>(), ci_cell(s, 0), ci_cell(s, 1));
    }
    out += std::string(53, '-') + "\n";
    for (const auto& [name, s] : report.at("per_dataset").items()) {
        out += fmt::format("{:<26} {:>8.4f} {:>8} {:>8}\n", "dataset:" + name, s.at("mean").get<double>(), ci_cell(s, 0),
                           ci_cell(s, 1));
    }
    const auto& o = report.at("overall");
    out += fmt::format("{:<26} {:>8.4f} {:>8} {:>8}\n", "overall", o.at("mean").get<double>(), ci_cell(o, 0), ci_cell(o, 1));
    out += fmt::format("samples {}  missing {}  unparseable {}  hierarchy {}\n", report.at("n_samples").get<std::size_t>(),
                       report.at("n_missing").get<std::size_t>(), report.at("n_unparseable").get<std::size_t>(),
                       report.at("hierarchy").get<std::string>());
    return out;
}

std::string render_csv(const json& report) {
    std::string out = "scope,dataset,task,mean,ci_low,ci_high\n";
    auto row = [&](std::string_view scope, std::string_view dataset, std::string_view task, const json& s) {
        out += fmt::format("{},{},{},{:.6f},{},{}\n", scope, dataset, task, s.at("mean").get<double>(), ci_cell(s, 0),
                           ci_cell(s, 1));
    };
    const auto& tasks = report.at("per_task");
    for (auto task : all_tasks()) {
        const auto name = std::string(task_name(task));
        if (tasks.contains(name)) row("task", "", name, tasks.at(name));
    }
    for (const auto& g : report.at("per_dataset_task")) {
        row("dataset_task", g.at("dataset").get<std::string>(), g.at("task").get<std::string>(), g);
    }
    for (const auto& [name, s] : report.at("per_dataset").items()) row("dataset", name, "", s);
    row("overall", "", "", report.at("overall"));
    return out;
}

// ---- baseline ----------------------------------------------------------------------

namespace {

int decimals_of(std::string_view number) {
    const auto dot = number.find('.');
    if (dot == std::string_view::npos) return 0;
    std::size_t n = 0;
    for (auto i = dot + 1; i < number.size() && std::isdigit(static_cast<unsigned char>(number[i])); ++i) ++n;
    return static_cast<int>(n);
}

int max_decimals(const std::vector<const QAPair*>& pairs) {
    int dp = 0;
    for (const auto* p : pairs) {
        std::size_t start = 0;
        const std::string& a = p->answer;
        while (start <= a.size()) {
            auto end = a.find(',', start);
            if (end == std::string::npos) end = a.size();
            dp = std::max(dp, decimals_of(std::string_view(a).substr(start, end - start)));
            start = end + 1;
        }
    }
    return dp;
}

std::vector<double> component_means(const std::vector<const QAPair*>& pairs, std::size_t dims) {
    std::vector<double> sum(dims, 0.0);
    for (const auto* p : pairs) {
        const auto nums = answers::extract_numbers(p->answer);
        if (nums.size() < dims) throw ConsistencyError("training answer '" + p->answer + "' has too few components");
        for (std::size_t k = 0; k < dims; ++k) sum[k] += nums[k];
    }
    for (auto& s : sum) s /= static_cast<double>(pairs.size());
    return sum;
}

std::string modal(const std::vector<const QAPair*>& pairs, bool by_key) {
    std::map<std::string, std::size_t> counts;
    for (const auto* p : pairs) ++counts[by_key ? answer_key(p->answer) : p->answer];
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [a, n] : counts) {
        if (n > best_n) {
            best = a;
            best_n = n;
        }
    }
    return best;
}

long long rounded(double x) {
    return std::llround(x);
}

} // namespace

BaselinePredictor baseline_fit(std::span<const QAPair> train) {
    std::map<DatasetTask, std::vector<const QAPair*>> groups;
    for (const auto& p : train) groups[{p.dataset, p.task}].push_back(&p);

    BaselinePredictor out;
    for (const auto& [key, pairs] : groups) {
        std::string answer;
        switch (answers::shape_of(key.second)) {
            case Shape::Count:
            case Shape::Integer:
                answer = std::to_string(std::max(0LL, rounded(component_means(pairs, 1)[0])));
                break;
            case Shape::Decimal:
                answer = answers::format_fixed(component_means(pairs, 1)[0], max_decimals(pairs));
                break;
            case Shape::BBox: {
                const auto m = component_means(pairs, 4);
                answer = answers::format_bbox(BBox{static_cast<int>(rounded(m[0])), static_cast<int>(rounded(m[1])),
                                                   static_cast<int>(std::max(1LL, rounded(m[2]))),
                                                   static_cast<int>(std::max(1LL, rounded(m[3])))});
                break;
            }
            case Shape::Point3: {
                const auto m = component_means(pairs, 3);
                answer = answers::format_point3(Vec3{m[0], m[1], m[2]}, max_decimals(pairs));
                break;
            }
            case Shape::Point2: {
                const auto m = component_means(pairs, 2);
                answer = fmt::format("{},{}", std::max(0LL, rounded(m[0])), std::max(0LL, rounded(m[1])));
                break;
            }
            case Shape::LabelSet:
            case Shape::Sequence:
            case Shape::Triplets:
                answer = modal(pairs, false);
                break;
            case Shape::Boolean:
            case Shape::Label:
            case Shape::Text:
                answer = modal(pairs, true);
                break;
        }
        out.answers.emplace(key, std::move(answer));
    }
    return out;
}

std::string baseline_predict(const BaselinePredictor& predictor, const QAPair& pair) {
    auto it = predictor.answers.find({pair.dataset, pair.task});
    return it == predictor.answers.end() ? std::string() : it->second;
}

} // namespace orbench::scorer

#include "doctest.h"

#include "orbench/errors.hpp"
#include "orbench/qagen.hpp"
#include "orbench/sampler.hpp"
#include "orbench/simulator.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <set>

using namespace orbench;
using namespace orbench::sampler;

namespace {

QAPair qa(const std::string& id, const std::string& question, const std::string& answer, const std::string& clip = "c0",
          TaskKind task = TaskKind::ActionDetection) {
    QAPair p;
    p.id = id;
    p.task = task;
    p.question = question;
    p.answer = answer;
    p.dataset = "unit";
    p.clip_id = clip;
    p.timepoint_id = "t";
    return p;
}

std::vector<QAPair> simulated_pairs(std::uint64_t seed, std::size_t clips, double breach_rate = 0.1) {
    sim::SimulatorConfig cfg;
    cfg.seed = seed;
    cfg.n_clips = clips;
    cfg.timepoints_per_clip = 40;
    cfg.sterility_breach_rate = breach_rate;
    return qagen::generate_all(sim::simulate_procedures(cfg).records, qagen::GenConfig{});
}

} // namespace

TEST_CASE("counting per group") {
    const std::vector<QAPair> pairs{qa("1", "q", "a"), qa("2", "q", "A "), qa("3", "r", "b")};
    const auto t = count_frequencies(pairs);
    REQUIRE(t.groups().size() == 1);
    const auto& g = t.groups().begin()->second;
    CHECK(g.answer_counts.at("a") == 2);
    CHECK(g.answer_counts.at("b") == 1);
    CHECK(g.question_counts.at("q") == 2);
    CHECK(g.total == 3);
    CHECK(t.total() == 3);
    CHECK(count_frequencies(std::vector<QAPair>{}).empty());
}

TEST_CASE("weights") {
    std::vector<QAPair> pairs;
    for (int i = 0; i < 4; ++i) pairs.push_back(qa("q" + std::to_string(i), "q", i < 2 ? "a" : "b" + std::to_string(i)));
    pairs.push_back(qa("solo", "r", "z"));
    const auto t = count_frequencies(pairs);
    SampleSpec spec;
    CHECK(weight(pairs[4], t, spec) == doctest::Approx(1.0));
    CHECK(weight(pairs[0], t, spec) == doctest::Approx(0.125));  // f_q 4, f_a 2
    spec.alpha = spec.beta = 0.0;
    for (const auto& p : pairs) CHECK(weight(p, t, spec) == 1.0);
    CHECK_THROWS_AS(weight(qa("x", "unseen", "a"), t, spec), ConsistencyError);
    CHECK_THROWS_AS(weight(qa("x", "q", "a", "c0", TaskKind::PeopleCounting), t, spec), ConsistencyError);
}

TEST_CASE("table merge is commutative and thread count does not change the digest") {
    const auto pairs = simulated_pairs(1, 3);
    const auto one = count_frequencies(pairs, 1);
    const auto four = count_frequencies(pairs, 4);
    CHECK(one.digest() == four.digest());
    CHECK(one.total() == pairs.size());

    const auto half = pairs.size() / 2;
    auto a = count_frequencies(std::span(pairs).first(half));
    auto b = count_frequencies(std::span(pairs).subspan(half));
    auto ab = a;
    ab.merge(b);
    auto ba = b;
    ba.merge(a);
    CHECK(ab.digest() == ba.digest());
    CHECK(ab.digest() == one.digest());
}

TEST_CASE("weights 9:1 with quota 1 select the heavy item about 90% of the time") {
    const std::vector<std::string> ids{"A", "B"};
    const std::vector<double> w{9.0, 1.0};
    int heavy = 0;
    constexpr int kTrials = 10000;
    for (int s = 0; s < kTrials; ++s) heavy += weighted_sample(ids, w, 1, static_cast<std::uint64_t>(s)).front() == 0;
    const double share = heavy / static_cast<double>(kTrials);
    MESSAGE("heavy share " << share);
    CHECK(std::abs(share - 0.9) <= 0.02);
}

TEST_CASE("uniform weights include every item with probability k/n") {
    constexpr std::size_t n = 20, k = 5, trials = 10000;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("item" + std::to_string(i));
    const std::vector<double> w(n, 1.0);
    std::vector<double> hits(n, 0.0);
    for (std::size_t s = 0; s < trials; ++s) {
        const auto picked = weighted_sample(ids, w, k, s);
        CHECK(picked.size() == k);
        for (auto i : picked) hits[i] += 1.0;
    }
    // Inclusion indicators of a fixed-size draw have covariance -p(1-p)/(n-1),
    // so the scaled statistic is chi-square with n-1 degrees of freedom.
    const double p = static_cast<double>(k) / n;
    const double expected = trials * p;
    double stat = 0.0;
    for (double h : hits) stat += (h - expected) * (h - expected);
    stat /= expected * (1.0 - p) * n / (n - 1.0);
    const boost::math::chi_squared dist(static_cast<double>(n - 1));
    const double pvalue = boost::math::cdf(boost::math::complement(dist, stat));
    MESSAGE("chi2 " << stat << " p " << pvalue);
    CHECK(pvalue > 0.01);
}

TEST_CASE("quota at least the group size takes the whole group once") {
    std::vector<QAPair> pairs;
    for (int i = 0; i < 7; ++i) pairs.push_back(qa("id" + std::to_string(i), "q", std::to_string(i % 2)));
    const auto t = count_frequencies(pairs);
    SampleSpec spec;
    spec.train = 50;
    const auto s = sample(pairs, t, spec);
    CHECK(s.train.size() == 7);
    std::set<std::string> ids;
    for (const auto& p : s.train) ids.insert(p.id);
    CHECK(ids.size() == 7);
}

TEST_CASE("allocation") {
    using V = std::vector<std::uint64_t>;
    using R = std::vector<std::size_t>;
    CHECK(allocate(V{10, 10, 10}, 9, Allocation::equal_per_group) == R{3, 3, 3});
    CHECK(allocate(V{10, 10, 10}, 10, Allocation::equal_per_group) == R{4, 3, 3});
    CHECK(allocate(V{1, 10, 10}, 9, Allocation::equal_per_group) == R{1, 4, 4});
    CHECK(allocate(V{0, 10}, 4, Allocation::equal_per_group) == R{0, 4});
    CHECK(allocate(V{10, 30}, 8, Allocation::proportional) == R{2, 6});
    CHECK(allocate(V{2, 3}, 10, Allocation::proportional) == R{2, 3});
    for (auto mode : {Allocation::equal_per_group, Allocation::proportional}) {
        const V avail{5, 17, 1, 40, 9};
        for (std::size_t total = 0; total < 80; ++total) {
            const auto q = allocate(avail, total, mode);
            std::size_t sum = 0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                CHECK(q[i] <= avail[i]);
                sum += q[i];
            }
            CHECK(sum == std::min<std::size_t>(total, 72));
        }
    }
    CHECK(parse_allocation("proportional") == Allocation::proportional);
    CHECK_THROWS_AS(parse_allocation("bogus"), UsageError);
}

TEST_CASE("inverse-frequency sampling enriches the minority breach answer") {
    const auto pairs = simulated_pairs(5, 20, 0.1);
    const auto t = count_frequencies(pairs);
    SampleSpec spec;
    spec.seed = 5;
    spec.train = 2000;
    const auto s = sample(pairs, t, spec);
    auto minority_share = [](const std::vector<QAPair>& v) {
        double n = 0, m = 0;
        for (const auto& p : v) {
            if (p.task != TaskKind::SterilityBreachDetection) continue;
            ++n;
            m += p.answer == "true";
        }
        return n > 0 ? m / n : 0.0;
    };
    const double source = minority_share(pairs);
    const double sampled = minority_share(s.train);
    MESSAGE("source " << source << " sampled " << sampled);
    REQUIRE(source > 0.0);
    CHECK(sampled >= 1.5 * source);
}

TEST_CASE("splits share no id and no clip across 100 seeds") {
    const auto pairs = simulated_pairs(2, 10);
    const auto t = count_frequencies(pairs);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SampleSpec spec;
        spec.seed = seed;
        spec.train = 600;
        spec.val = 150;
        spec.test = 200;
        const auto s = sample(pairs, t, spec);
        REQUIRE_FALSE(s.train.empty());
        REQUIRE_FALSE(s.test.empty());
        std::set<std::string> train_ids, train_clips;
        for (const auto& p : s.train) {
            train_ids.insert(p.id);
            train_clips.insert(p.clip_id);
        }
        std::set<std::string> held_ids;
        for (const auto* split : {&s.val, &s.test}) {
            for (const auto& p : *split) {
                CHECK_FALSE(train_ids.count(p.id));
                CHECK_FALSE(train_clips.count(p.clip_id));
                CHECK(held_ids.insert(p.id).second);
            }
        }
        std::set<std::string> val_clips;
        for (const auto& p : s.val) val_clips.insert(p.clip_id);
        for (const auto& p : s.test) CHECK_FALSE(val_clips.count(p.clip_id));
    }
}

TEST_CASE("sampling is deterministic and streaming matches the span form") {
    const auto pairs = simulated_pairs(3, 4);
    const auto t = count_frequencies(pairs, 3);
    SampleSpec spec;
    spec.seed = 9;
    spec.train = 300;
    spec.test = 100;
    const auto a = sample(pairs, t, spec);
    const auto b = sample(pairs, count_frequencies(pairs, 1), spec);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    std::size_t i = 0;
    const auto c = sample(
        [&](QAPair& p) {
            if (i == pairs.size()) return false;
            p = pairs[i++];
            return true;
        },
        t, spec);
    CHECK(c.train == a.train);
    CHECK(std::is_sorted(a.train.begin(), a.train.end(), [](auto& x, auto& y) { return x.id < y.id; }));
    spec.seed = 10;
    CHECK(sample(pairs, t, spec).train != a.train);
}

TEST_CASE("stream out of sync with its table") {
    const std::vector<QAPair> pairs{qa("1", "q", "a")};
    const auto t = count_frequencies(pairs);
    SampleSpec spec;
    spec.train = 1;
    const std::vector<QAPair> other{qa("2", "q", "a", "c0", TaskKind::PeopleCounting)};
    CHECK_THROWS_AS(sample(other, t, spec), ConsistencyError);
    const std::vector<QAPair> new_answer{qa("3", "q", "zzz")};
    CHECK_THROWS_AS(sample(new_answer, t, spec), ConsistencyError);
}

TEST_CASE("SampleSpec validation") {
    SampleSpec spec;
    spec.alpha = -1;
    CHECK_THROWS_AS(spec.validate(), UsageError);
    spec.alpha = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(spec.validate(), UsageError);
}

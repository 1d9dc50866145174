#include "orbench/sampler.hpp"

#include "orbench/errors.hpp"
#include "orbench/hashing.hpp"
#include "orbench/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace orbench::sampler {

namespace {

constexpr std::string_view kKeyStream = "sample-key";
constexpr std::string_view kClipStream = "clip-split";

template <typename Map>
std::vector<std::pair<std::string, std::uint64_t>> sorted_items(const Map& m) {
    std::vector<std::pair<std::string, std::uint64_t>> items(m.begin(), m.end());
    std::sort(items.begin(), items.end());
    return items;
}

struct Candidate {
    double key;
    QAPair pair;
};

// Max-heap on (key, id): the top is the worst of the kept candidates.
struct WorseFirst {
    bool operator()(const Candidate& a, const Candidate& b) const {
        if (a.key != b.key) return a.key < b.key;
        return a.pair.id < b.pair.id;
    }
};

class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) {}

    void offer(double key, const QAPair& pair) {
        if (k_ == 0) return;
        if (heap_.size() < k_) {
            heap_.push(Candidate{key, pair});
            return;
        }
        const auto& worst = heap_.top();
        if (key < worst.key || (key == worst.key && pair.id < worst.pair.id)) {
            heap_.pop();
            heap_.push(Candidate{key, pair});
        }
    }

    void drain_into(std::vector<QAPair>& out) {
        while (!heap_.empty()) {
            out.push_back(heap_.top().pair);
            heap_.pop();
        }
    }

private:
    std::size_t k_;
    std::priority_queue<Candidate, std::vector<Candidate>, WorseFirst> heap_;
};

// Largest-remainder apportionment of `amount` proportional to `capacity`.
// Assumes amount < sum(capacity); never exceeds any capacity.
std::vector<std::size_t> apportion(std::span<const std::uint64_t> capacity, std::uint64_t amount) {
    const std::uint64_t total = std::accumulate(capacity.begin(), capacity.end(), std::uint64_t{0});
    std::vector<std::size_t> out(capacity.size(), 0);
    if (total == 0 || amount == 0) return out;
    std::vector<std::pair<std::uint64_t, std::size_t>> remainders;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < capacity.size(); ++i) {
        const auto product = static_cast<unsigned __int128>(capacity[i]) * amount;
        out[i] = static_cast<std::size_t>(product / total);
        assigned += out[i];
        remainders.emplace_back(static_cast<std::uint64_t>(product % total), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < amount && r < remainders.size(); ++r) {
        const auto i = remainders[r].second;
        if (out[i] < capacity[i]) {
            ++out[i];
            ++assigned;
        }
    }
    return out;
}

} // namespace

void FrequencyTable::add(const QAPair& pair) {
    auto& g = groups_[GroupKey{pair.dataset, pair.task}];
    ++g.question_counts[pair.question];
    ++g.answer_counts[answer_key(pair.answer)];
    ++g.clip_counts[pair.clip_id];
    ++g.total;
}

void FrequencyTable::merge(const FrequencyTable& other) {
    for (const auto& [key, src] : other.groups_) {
        auto& dst = groups_[key];
        for (const auto& [q, n] : src.question_counts) dst.question_counts[q] += n;
        for (const auto& [a, n] : src.answer_counts) dst.answer_counts[a] += n;
        for (const auto& [c, n] : src.clip_counts) dst.clip_counts[c] += n;
        dst.total += src.total;
    }
}

std::uint64_t FrequencyTable::total() const {
    std::uint64_t n = 0;
    for (const auto& [key, g] : groups_) n += g.total;
    return n;
}

const GroupCounts& FrequencyTable::group_of(const QAPair& pair) const {
    auto it = groups_.find(GroupKey{pair.dataset, pair.task});
    if (it == groups_.end()) {
        throw ConsistencyError("pair " + pair.id + ": group (" + pair.dataset + ", " + std::string(task_name(pair.task)) +
                               ") missing from frequency table");
    }
    return it->second;
}

std::uint64_t FrequencyTable::question_count(const QAPair& pair) const {
    const auto& g = group_of(pair);
    auto it = g.question_counts.find(pair.question);
    if (it == g.question_counts.end()) throw ConsistencyError("pair " + pair.id + ": question missing from frequency table");
    return it->second;
}

std::uint64_t FrequencyTable::answer_count(const QAPair& pair) const {
    const auto& g = group_of(pair);
    auto it = g.answer_counts.find(answer_key(pair.answer));
    if (it == g.answer_counts.end()) throw ConsistencyError("pair " + pair.id + ": answer missing from frequency table");
    return it->second;
}

std::string FrequencyTable::digest() const {
    std::uint64_t h = hashing::kFnvOffset;
    auto feed = [&h](std::string_view s) { h = hashing::fnv1a64(s, h); h = hashing::fnv1a64("\x1f", h); };
    for (const auto& [key, g] : groups_) {
        feed(key.dataset);
        feed(task_name(key.task));
        feed(std::to_string(g.total));
        for (const auto& [q, n] : sorted_items(g.question_counts)) {
            feed(q);
            feed(std::to_string(n));
        }
        feed("|");
        for (const auto& [a, n] : sorted_items(g.answer_counts)) {
            feed(a);
            feed(std::to_string(n));
        }
        feed("|");
        for (const auto& [c, n] : g.clip_counts) {
            feed(c);
            feed(std::to_string(n));
        }
    }
    return hashing::hex16(hashing::mix64(h));
}

FrequencyTable count_frequencies(std::span<const QAPair> pairs, unsigned threads) {
    const unsigned workers = resolve_threads(threads);
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, pairs.size()));
    std::vector<FrequencyTable> partial(chunks);
    const std::size_t per = (pairs.size() + chunks - 1) / chunks;
    parallel_for(chunks, workers, [&](std::size_t c) {
        const auto begin = std::min(pairs.size(), c * per);
        const auto end = std::min(pairs.size(), begin + per);
        for (auto i = begin; i < end; ++i) partial[c].add(pairs[i]);
    });
    FrequencyTable table;
    for (const auto& p : partial) table.merge(p);
    return table;
}

FrequencyTable count_frequencies(const std::function<bool(QAPair&)>& next) {
    FrequencyTable table;
    QAPair p;
    while (next(p)) table.add(p);
    return table;
}

std::string_view allocation_name(Allocation a) {
    return a == Allocation::equal_per_group ? "equal_per_group" : "proportional";
}

Allocation parse_allocation(std::string_view s) {
    if (s == "equal_per_group") return Allocation::equal_per_group;
    if (s == "proportional") return Allocation::proportional;
    throw UsageError("unknown allocation '" + std::string(s) + "'");
}

void SampleSpec::validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || beta < 0.0) {
        throw UsageError("sampler: alpha and beta must be finite and non-negative");
    }
}

nlohmann::ordered_json spec_to_json(const SampleSpec& spec) {
    nlohmann::ordered_json j;
    j["seed"] = spec.seed;
    j["train"] = spec.train;
    j["val"] = spec.val;
    j["test"] = spec.test;
    j["alpha"] = spec.alpha;
    j["beta"] = spec.beta;
    j["allocation"] = std::string(allocation_name(spec.allocation));
    return j;
}

double weight(const QAPair& pair, const FrequencyTable& table, const SampleSpec& spec) {
    const auto fq = static_cast<double>(table.question_count(pair));
    const auto fa = static_cast<double>(table.answer_count(pair));
    return std::pow(fq, -spec.alpha) * std::pow(fa, -spec.beta);
}

double sampling_key(std::uint64_t seed, std::string_view id, double w) {
    const auto bits = hashing::combine(hashing::derive_seed(seed, kKeyStream), hashing::fnv1a64(id));
    const double exp1 = -std::log(hashing::unit_open(bits));
    return exp1 / w;
}

std::vector<std::size_t> weighted_sample(std::span<const std::string> ids, std::span<const double> weights,
                                         std::size_t k, std::uint64_t seed) {
    if (ids.size() != weights.size()) throw UsageError("weighted_sample: ids and weights differ in length");
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) keyed.emplace_back(sampling_key(seed, ids[i], weights[i]), i);
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return ids[a.second] < ids[b.second];
    });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, keyed.size()); ++i) out.push_back(keyed[i].second);
    return out;
}

std::vector<std::size_t> allocate(std::span<const std::uint64_t> availability, std::size_t total, Allocation mode) {
    const std::uint64_t supply = std::accumulate(availability.begin(), availability.end(), std::uint64_t{0});
    std::vector<std::size_t> quota(availability.size(), 0);
    if (total >= supply) {
        for (std::size_t i = 0; i < availability.size(); ++i) quota[i] = availability[i];
        return quota;
    }
    if (mode == Allocation::proportional) return apportion(availability, total);

    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < availability.size(); ++i) {
        if (availability[i] > 0) open.push_back(i);
    }
    const std::size_t base = total / open.size();
    std::size_t extra = total % open.size();
    std::uint64_t spill = 0;
    for (auto i : open) {
        std::uint64_t want = base + (extra > 0 ? 1 : 0);
        if (extra > 0) --extra;
        quota[i] = static_cast<std::size_t>(std::min<std::uint64_t>(want, availability[i]));
        spill += want - quota[i];
    }
    if (spill > 0) {
        std::vector<std::uint64_t> remaining(availability.size());
        for (std::size_t i = 0; i < availability.size(); ++i) remaining[i] = availability[i] - quota[i];
        const auto more = apportion(remaining, spill);
        for (std::size_t i = 0; i < quota.size(); ++i) quota[i] += more[i];
    }
    return quota;
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

SplitPlan plan_splits(const FrequencyTable& table, const SampleSpec& spec) {
    spec.validate();
    SplitPlan plan;

    std::vector<std::string> clips;
    for (const auto& [key, g] : table.groups()) {
        for (const auto& [clip, n] : g.clip_counts) clips.push_back(clip);
    }
    std::sort(clips.begin(), clips.end());
    clips.erase(std::unique(clips.begin(), clips.end()), clips.end());
    const auto clip_seed = hashing::derive_seed(spec.seed, kClipStream);
    std::sort(clips.begin(), clips.end(), [&](const std::string& a, const std::string& b) {
        const auto ha = hashing::combine(clip_seed, hashing::fnv1a64(a));
        const auto hb = hashing::combine(clip_seed, hashing::fnv1a64(b));
        return ha != hb ? ha < hb : a < b;
    });

    // Clip counts per split in proportion to requested sizes; every requested
    // split gets at least one clip while clips last, train last.
    const std::size_t n = clips.size();
    const double requested = static_cast<double>(spec.train + spec.val + spec.test);
    auto share = [&](std::size_t size) -> std::size_t {
        if (size == 0 || requested == 0.0) return 0;
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * (size / requested))));
    };
    std::size_t n_test = share(spec.test);
    std::size_t n_val = share(spec.val);
    const std::size_t keep_train = spec.train > 0 ? 1 : 0;
    while (n_test + n_val + keep_train > n && (n_test + n_val) > 0) {
        if (n_val >= n_test && n_val > 0) {
            --n_val;
        } else {
            --n_test;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        Split s = Split::train;
        if (i < n_test) {
            s = Split::test;
        } else if (i < n_test + n_val) {
            s = Split::val;
        }
        if (s == Split::train && spec.train == 0) continue;
        plan.clip_split.emplace(clips[i], s);
    }

    const std::pair<Split, std::size_t> sizes[] = {{Split::train, spec.train}, {Split::val, spec.val}, {Split::test, spec.test}};
    for (const auto& [split, size] : sizes) {
        std::vector<GroupKey> keys;
        std::vector<std::uint64_t> available;
        for (const auto& [key, g] : table.groups()) {
            std::uint64_t a = 0;
            for (const auto& [clip, count] : g.clip_counts) {
                auto it = plan.clip_split.find(clip);
                if (it != plan.clip_split.end() && it->second == split) a += count;
            }
            keys.push_back(key);
            available.push_back(a);
        }
        const auto quota = allocate(available, size, spec.allocation);
        auto& out = plan.quotas[split];
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (quota[i] > 0) out[keys[i]] = quota[i];
        }
    }
    return plan;
}

Splits sample(const std::function<bool(QAPair&)>& next, const FrequencyTable& table, const SampleSpec& spec) {
    const auto plan = plan_splits(table, spec);
    std::map<std::pair<Split, GroupKey>, TopK> selectors;
    for (const auto& [split, quotas] : plan.quotas) {
        for (const auto& [key, q] : quotas) selectors.emplace(std::make_pair(split, key), TopK(q));
    }

    QAPair p;
    while (next(p)) {
        auto clip = plan.clip_split.find(p.clip_id);
        if (clip == plan.clip_split.end()) {
            if (!table.groups().count(GroupKey{p.dataset, p.task})) {
                throw ConsistencyError("pair " + p.id + " belongs to a group the frequency table never saw");
            }
            continue;  // clip not assigned to any requested split
        }
        const double w = weight(p, table, spec);
        auto sel = selectors.find({clip->second, GroupKey{p.dataset, p.task}});
        if (sel == selectors.end()) continue;
        sel->second.offer(sampling_key(spec.seed, p.id, w), p);
    }

    Splits out;
    for (auto& [key, selector] : selectors) {
        auto& dst = key.first == Split::train ? out.train : key.first == Split::val ? out.val : out.test;
        selector.drain_into(dst);
    }
    for (auto* v : {&out.train, &out.val, &out.test}) {
        std::sort(v->begin(), v->end(), [](const QAPair& a, const QAPair& b) { return a.id < b.id; });
    }
    return out;
}

Splits sample(std::span<const QAPair> pairs, const FrequencyTable& table, const SampleSpec& spec) {
    std::size_t cursor = 0;
    return sample(
        [&](QAPair& p) {
            if (cursor >= pairs.size()) return false;
            p = pairs[cursor++];
            return true;
        },
        table, spec);
}

} // namespace orbench::sampler

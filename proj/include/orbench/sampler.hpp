#pragma once

#include "orbench/core.hpp"

#include "json.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace orbench::sampler {

/// QA pairs are grouped per (dataset, task); frequencies and quotas are per group.
struct GroupKey {
    std::string dataset;
    TaskKind task = TaskKind::PeopleCounting;
    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
    friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

struct GroupCounts {
    /// Keyed by the instantiated question text (template plus slot values).
    std::unordered_map<std::string, std::uint64_t> question_counts;
    std::unordered_map<std::string, std::uint64_t> answer_counts;
    std::map<std::string, std::uint64_t> clip_counts;
    std::uint64_t total = 0;
};

class FrequencyTable {
public:
    void add(const QAPair& pair);
    /// Commutative: merging partial tables in any order gives the same table.
    void merge(const FrequencyTable& other);

    const std::map<GroupKey, GroupCounts>& groups() const { return groups_; }
    bool empty() const { return groups_.empty(); }
    std::uint64_t total() const;

    /// Throw ConsistencyError when the pair's group or key was never counted.
    std::uint64_t question_count(const QAPair& pair) const;
    std::uint64_t answer_count(const QAPair& pair) const;

    /// Order-independent fingerprint of every count in the table.
    std::string digest() const;

private:
    const GroupCounts& group_of(const QAPair& pair) const;
    std::map<GroupKey, GroupCounts> groups_;
};

FrequencyTable count_frequencies(std::span<const QAPair> pairs, unsigned threads = 1);
FrequencyTable count_frequencies(const std::function<bool(QAPair&)>& next);

enum class Allocation { equal_per_group, proportional };
std::string_view allocation_name(Allocation a);
Allocation parse_allocation(std::string_view s);

struct SampleSpec {
    std::uint64_t seed = 0;
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    double alpha = 1.0;  // question inverse-frequency exponent
    double beta = 1.0;   // answer inverse-frequency exponent
    Allocation allocation = Allocation::equal_per_group;

    void validate() const;
};

nlohmann::ordered_json spec_to_json(const SampleSpec& spec);

/// f_question^-alpha * f_answer^-beta within the pair's group.
double weight(const QAPair& pair, const FrequencyTable& table, const SampleSpec& spec);

/// Exponential race key Exp(1)/w; keeping the k smallest keys is weighted
/// sampling without replacement. The Exp(1) draw is a pure function of (seed, id).
double sampling_key(std::uint64_t seed, std::string_view id, double weight);

/// Selects k of n weighted items (ids must be distinct). Returns indices in
/// ascending key order.
std::vector<std::size_t> weighted_sample(std::span<const std::string> ids, std::span<const double> weights,
                                         std::size_t k, std::uint64_t seed);

/// Splits `total` across groups with the given availability. equal_per_group
/// gives each group an equal share (largest remainder in group order) and
/// spills what exhausted groups cannot take proportionally to remaining capacity.
std::vector<std::size_t> allocate(std::span<const std::uint64_t> availability, std::size_t total, Allocation mode);

enum class Split { train, val, test };
std::string_view split_name(Split s);

struct SplitPlan {
    std::map<std::string, Split> clip_split;
    std::map<Split, std::map<GroupKey, std::size_t>> quotas;
};

/// Assigns whole clips to splits (no clip shared between splits) and fixes
/// per-group quotas from the clips' availability.
SplitPlan plan_splits(const FrequencyTable& table, const SampleSpec& spec);

struct Splits {
    std::vector<QAPair> train;
    std::vector<QAPair> val;
    std::vector<QAPair> test;
};

/// Second pass over the same stream that produced `table`. Each split is
/// returned sorted by id.
Splits sample(const std::function<bool(QAPair&)>& next, const FrequencyTable& table, const SampleSpec& spec);
Splits sample(std::span<const QAPair> pairs, const FrequencyTable& table, const SampleSpec& spec);

} // namespace orbench::sampler

#pragma once

#include "orbench/core.hpp"

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace orbench::memory {

inline constexpr std::size_t kDefaultShortTermLength = 5;

struct TimepointGraph {
    std::string timepoint_id;
    std::vector<Triplet> triplets;
    friend bool operator==(const TimepointGraph&, const TimepointGraph&) = default;
};

/// Two-tier temporal context: the last k per-timepoint scene graphs, and every
/// distinct triplet seen so far in the clip, in first-occurrence order.
struct MemoryGraphs {
    std::vector<TimepointGraph> short_term;
    std::vector<Triplet> long_term;
    friend bool operator==(const MemoryGraphs&, const MemoryGraphs&) = default;
};

/// `clip` must be one clip's records in time order. Throws UsageError when
/// `at` is out of range or k == 0.
MemoryGraphs build_memory(std::span<const TimepointRecord> clip, std::size_t at, std::size_t k);

// Rendered form (memory-v1):
//
//   [short_term]
//   tp_0003: (a,b,p);(c,d,q)
//   tp_0004:
//   [long_term]
//   (a,b,p)
//   (c,d,q)
std::string render_memory(const MemoryGraphs& m);
/// Inverse of render_memory. Throws ParseError on malformed text.
MemoryGraphs parse_memory(std::string_view text);

/// Incremental builder for streamed records. Resets when the clip changes.
class MemoryTracker {
public:
    explicit MemoryTracker(std::size_t k);

    void push(const TimepointRecord& record);
    const MemoryGraphs& current() const { return graphs_; }

private:
    std::size_t k_;
    std::string dataset_;
    std::string clip_id_;
    MemoryGraphs graphs_;
    std::unordered_set<std::string> seen_;
};

} // namespace orbench::memory

#include "orbench/memory.hpp"

#include "orbench/answers.hpp"
#include "orbench/errors.hpp"

#include <sstream>

namespace orbench::memory {

namespace {

constexpr std::string_view kShortHeader = "[short_term]";
constexpr std::string_view kLongHeader = "[long_term]";

std::string join_triplets(const std::vector<Triplet>& triplets) {
    std::string out;
    for (const auto& t : triplets) {
        if (!out.empty()) out += ';';
        out += canonical_triplet_string(t);
    }
    return out;
}

std::vector<Triplet> parse_list(std::string_view text, std::size_t line_no) {
    if (text.empty()) return {};
    auto parsed = answers::parse_triplets(text);
    if (!parsed) throw ParseError(line_no, "malformed triplet list");
    return std::move(*parsed);
}

} // namespace

MemoryGraphs build_memory(std::span<const TimepointRecord> clip, std::size_t at, std::size_t k) {
    if (k == 0) throw UsageError("memory: short-term length k must be >= 1");
    if (at >= clip.size()) {
        throw UsageError("memory: index " + std::to_string(at) + " outside clip of length " + std::to_string(clip.size()));
    }
    MemoryGraphs m;
    const std::size_t first = at + 1 >= k ? at + 1 - k : 0;
    for (std::size_t i = first; i <= at; ++i) m.short_term.push_back({clip[i].timepoint_id, clip[i].scene_graph});
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i <= at; ++i) {
        for (const auto& t : clip[i].scene_graph) {
            if (seen.insert(canonical_triplet_string(t)).second) m.long_term.push_back(t);
        }
    }
    return m;
}

std::string render_memory(const MemoryGraphs& m) {
    std::string out;
    out += kShortHeader;
    out += '\n';
    for (const auto& g : m.short_term) {
        out += g.timepoint_id;
        out += ':';
        if (!g.triplets.empty()) {
            out += ' ';
            out += join_triplets(g.triplets);
        }
        out += '\n';
    }
    out += kLongHeader;
    out += '\n';
    for (const auto& t : m.long_term) {
        out += canonical_triplet_string(t);
        out += '\n';
    }
    return out;
}

MemoryGraphs parse_memory(std::string_view text) {
    MemoryGraphs m;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    enum class Block { None, Short, Long } block = Block::None;
    while (std::getline(in, line)) {
        ++line_no;
        if (line == kShortHeader) {
            if (block != Block::None) throw ParseError(line_no, "unexpected [short_term] header");
            block = Block::Short;
            continue;
        }
        if (line == kLongHeader) {
            if (block != Block::Short) throw ParseError(line_no, "[long_term] must follow [short_term]");
            block = Block::Long;
            continue;
        }
        switch (block) {
            case Block::None: throw ParseError(line_no, "content before [short_term] header");
            case Block::Short: {
                const auto colon = line.find(':');
                if (colon == std::string::npos || colon == 0) throw ParseError(line_no, "expected '<timepoint_id>:'");
                std::string_view rest(line);
                rest.remove_prefix(colon + 1);
                if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
                m.short_term.push_back({line.substr(0, colon), parse_list(rest, line_no)});
                break;
            }
            case Block::Long: {
                auto items = parse_list(line, line_no);
                if (items.size() != 1) throw ParseError(line_no, "expected exactly one triplet per long-term line");
                m.long_term.push_back(std::move(items.front()));
                break;
            }
        }
    }
    if (block != Block::Long) throw ParseError(line_no, "missing [long_term] block");
    return m;
}

MemoryTracker::MemoryTracker(std::size_t k) : k_(k) {
    if (k == 0) throw UsageError("memory: short-term length k must be >= 1");
}

void MemoryTracker::push(const TimepointRecord& record) {
    if (record.dataset != dataset_ || record.clip_id != clip_id_) {
        dataset_ = record.dataset;
        clip_id_ = record.clip_id;
        graphs_ = {};
        seen_.clear();
    }
    graphs_.short_term.push_back({record.timepoint_id, record.scene_graph});
    if (graphs_.short_term.size() > k_) graphs_.short_term.erase(graphs_.short_term.begin());
    for (const auto& t : record.scene_graph) {
        if (seen_.insert(canonical_triplet_string(t)).second) graphs_.long_term.push_back(t);
    }
}

} // namespace orbench::memory

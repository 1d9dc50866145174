#include "orbench/answers.hpp"

#include "orbench/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>

namespace orbench::answers {

namespace {

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

bool strict_uint(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

bool strict_decimal(std::string_view s) {
    if (!s.empty() && s.front() == '-') s.remove_prefix(1);
    const auto dot = s.find('.');
    if (dot == std::string_view::npos) return strict_uint(s);
    return strict_uint(s.substr(0, dot)) && strict_uint(s.substr(dot + 1));
}

bool canonical_label(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c == ',' || c == ';' || c == '(' || c == ')') return false;
        if (std::isspace(static_cast<unsigned char>(c)) || std::isupper(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

bool strict_label_list(std::string_view s, bool require_sorted) {
    if (s == kNone) return true;
    const auto parts = split(s, ',');
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!canonical_label(parts[i]) || parts[i] == kNone) return false;
        if (require_sorted && i > 0 && !(parts[i - 1] < parts[i])) return false;
    }
    return true;
}

bool strict_triplets(std::string_view s) {
    if (s == kNone) return true;
    const auto items = split(s, ';');
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto item = items[i];
        if (item.size() < 2 || item.front() != '(' || item.back() != ')') return false;
        const auto parts = split(item.substr(1, item.size() - 2), ',');
        if (parts.size() != 3) return false;
        for (auto p : parts) {
            if (!canonical_label(p)) return false;
        }
        if (i > 0 && !(items[i - 1] < item)) return false;
    }
    return true;
}

bool strict_tuple(std::string_view s, std::size_t arity, bool (*element)(std::string_view)) {
    const auto parts = split(s, ',');
    if (parts.size() != arity) return false;
    return std::all_of(parts.begin(), parts.end(), element);
}

bool strict_bbox(std::string_view s) {
    if (!strict_tuple(s, 4, strict_uint)) return false;
    const auto parts = split(s, ',');
    return std::strtol(std::string(parts[2]).c_str(), nullptr, 10) > 0 &&
           std::strtol(std::string(parts[3]).c_str(), nullptr, 10) > 0;
}

std::string_view strip_decoration(std::string_view s) {
    s = trim(s);
    while (!s.empty() && (s.front() == '"' || s.front() == '\'' || s.front() == '[' || s.front() == '{')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '.' || s.back() == ']' || s.back() == '}')) {
        s.remove_suffix(1);
    }
    return trim(s);
}

} // namespace

Shape shape_of(TaskKind task) {
    switch (task) {
        case TaskKind::PeopleCounting: return Shape::Count;
        case TaskKind::EstimateTimeUntil:
        case TaskKind::EstimateStatus: return Shape::Integer;
        case TaskKind::Distance3D: return Shape::Decimal;
        case TaskKind::IsCompleted:
        case TaskKind::IsBaseArrayVisible:
        case TaskKind::IsRobotCalibrated:
        case TaskKind::SterilityBreachDetection: return Shape::Boolean;
        case TaskKind::InteractionDetection:
        case TaskKind::AttributeDetection:
        case TaskKind::ActionDetection:
        case TaskKind::RobotStepDetection:
        case TaskKind::NextRobotStepEstimation:
        case TaskKind::GazeObjectDetection: return Shape::Label;
        case TaskKind::RoleDetection:
        case TaskKind::ToolDetection:
        case TaskKind::EntityDetection: return Shape::LabelSet;
        case TaskKind::SortedEntityDetection: return Shape::Sequence;
        case TaskKind::SceneGraphGeneration: return Shape::Triplets;
        case TaskKind::Detection2D: return Shape::BBox;
        case TaskKind::Detection3D: return Shape::Point3;
        case TaskKind::GazeLocation: return Shape::Point2;
        case TaskKind::MonitorTextOCR: return Shape::Text;
    }
    throw UsageError("unknown task");
}

bool conforms(TaskKind task, std::string_view a) {
    switch (shape_of(task)) {
        case Shape::Count:
        case Shape::Integer: return strict_uint(a);
        case Shape::Decimal: return strict_decimal(a);
        case Shape::Boolean: return a == "true" || a == "false";
        case Shape::Label: return canonical_label(a);
        case Shape::LabelSet: return strict_label_list(a, true);
        case Shape::Sequence: return strict_label_list(a, false);
        case Shape::Triplets: return strict_triplets(a);
        case Shape::BBox: return strict_bbox(a);
        case Shape::Point3: return strict_tuple(a, 3, strict_decimal);
        case Shape::Point2: return strict_tuple(a, 2, strict_uint);
        case Shape::Text: return true;
    }
    return false;
}

std::string format_fixed(double value, int decimals) {
    auto out = fmt::format("{:.{}f}", value, decimals);
    if (out.front() == '-' && std::all_of(out.begin() + 1, out.end(), [](char c) { return c == '0' || c == '.'; })) {
        out.erase(out.begin());
    }
    return out;
}

std::string format_bool(bool value) {
    return value ? "true" : "false";
}

std::string format_set(std::vector<std::string> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return format_sequence(labels);
}

std::string format_sequence(const std::vector<std::string>& labels) {
    if (labels.empty()) return std::string(kNone);
    std::string out;
    for (const auto& l : labels) {
        if (!out.empty()) out += ',';
        out += l;
    }
    return out;
}

std::string format_triplets(const std::vector<Triplet>& triplets) {
    if (triplets.empty()) return std::string(kNone);
    std::vector<std::string> items;
    items.reserve(triplets.size());
    for (const auto& t : triplets) items.push_back(canonical_triplet_string(t));
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ';';
        out += s;
    }
    return out;
}

std::string format_bbox(const BBox& b) {
    return fmt::format("{},{},{},{}", b.x, b.y, b.w, b.h);
}

std::string format_point3(const Vec3& p, int decimals) {
    return format_fixed(p.x, decimals) + "," + format_fixed(p.y, decimals) + "," + format_fixed(p.z, decimals);
}

std::vector<double> extract_numbers(std::string_view text) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const bool sign = (text[i] == '-' || text[i] == '+') && i + 1 < text.size() &&
                          (is_digit(text[i + 1]) || (text[i + 1] == '.' && i + 2 < text.size() && is_digit(text[i + 2])));
        const bool starts = is_digit(text[i]) || (text[i] == '.' && i + 1 < text.size() && is_digit(text[i + 1]));
        if (!sign && !starts) {
            ++i;
            continue;
        }
        std::size_t j = i + (sign ? 1 : 0);
        while (j < text.size() && is_digit(text[j])) ++j;
        if (j < text.size() && text[j] == '.') {
            ++j;
            while (j < text.size() && is_digit(text[j])) ++j;
        }
        out.push_back(std::strtod(std::string(text.substr(i, j - i)).c_str(), nullptr));
        i = j;
    }
    return out;
}

std::optional<double> parse_number(std::string_view text) {
    const auto nums = extract_numbers(text);
    if (nums.empty()) return std::nullopt;
    return nums.front();
}

std::optional<bool> parse_bool(std::string_view text) {
    const auto label = parse_label(text);
    if (!label) return std::nullopt;
    if (*label == "true" || *label == "yes" || *label == "1") return true;
    if (*label == "false" || *label == "no" || *label == "0") return false;
    return std::nullopt;
}

std::optional<std::string> parse_label(std::string_view text) {
    const auto body = strip_decoration(text);
    if (body.empty()) return std::nullopt;
    return normalize_label(body);
}

std::vector<std::string> parse_label_list(std::string_view text) {
    std::vector<std::string> out;
    std::string unified(strip_decoration(text));
    std::replace(unified.begin(), unified.end(), ';', ',');
    for (auto piece : split(unified, ',')) {
        if (auto label = parse_label(piece)) out.push_back(std::move(*label));
    }
    if (out.size() == 1 && out.front() == kNone) out.clear();
    return out;
}

std::optional<std::vector<Triplet>> parse_triplets(std::string_view text) {
    const auto body = trim(text);
    std::vector<Triplet> out;
    if (body.empty() || parse_label(body) == std::string(kNone)) return out;

    std::vector<std::string_view> items;
    if (body.find('(') != std::string_view::npos) {
        std::size_t pos = 0;
        while ((pos = body.find('(', pos)) != std::string_view::npos) {
            const auto close = body.find(')', pos);
            if (close == std::string_view::npos) return std::nullopt;
            items.push_back(body.substr(pos + 1, close - pos - 1));
            pos = close + 1;
        }
    } else {
        for (auto item : split(body, ';')) {
            if (!trim(item).empty()) items.push_back(item);
        }
    }
    for (auto item : items) {
        const auto parts = split(item, ',');
        if (parts.size() != 3) return std::nullopt;
        auto s = parse_label(parts[0]);
        auto o = parse_label(parts[1]);
        auto p = parse_label(parts[2]);
        if (!s || !o || !p) return std::nullopt;
        out.push_back(Triplet{std::move(*s), std::move(*p), std::move(*o)});
    }
    return out;
}

} // namespace orbench::answers

#pragma once

#include "orbench/core.hpp"

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

// Line-delimited QA files: a header object on line 1, then one pair per line
// with fields in the order id, dataset, clip_id, timepoint_id, task, question,
// answer[, context]. Prediction files carry {qa_id, answer} per line, no header.
namespace orbench::qa_io {

inline constexpr std::string_view kQaFormatVersion = "1.0.0";

nlohmann::ordered_json default_header();

std::string pair_to_line(const QAPair& pair);
/// Throws ParseError on malformed input and ValidationError when the task is
/// unknown, the answer violates the task grammar, or the id does not match.
QAPair pair_from_line(std::string_view line, std::size_t line_no);

class QaWriter {
public:
    QaWriter(const std::filesystem::path& path, const nlohmann::ordered_json& header);
    void write(const QAPair& pair);
    void close();
    std::size_t count() const { return count_; }

private:
    std::ofstream out_;
    std::string path_;
    std::size_t count_ = 0;
};

class QaReader {
public:
    explicit QaReader(const std::filesystem::path& path);
    const nlohmann::json& header() const { return header_; }
    bool next(QAPair& out);
    std::size_t line_number() const { return line_no_; }

private:
    std::ifstream in_;
    std::string path_;
    nlohmann::json header_;
    std::size_t line_no_ = 0;
    std::string buffer_;
};

std::vector<QAPair> read_pairs(const std::filesystem::path& path, nlohmann::json* header = nullptr);
void write_pairs(const std::filesystem::path& path, const nlohmann::ordered_json& header,
                 const std::vector<QAPair>& pairs);

struct Prediction {
    std::string qa_id;
    std::string raw_answer;
    friend bool operator==(const Prediction&, const Prediction&) = default;
};

std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);

} // namespace orbench::qa_io

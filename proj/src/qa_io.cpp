#include "orbench/qa_io.hpp"

#include "orbench/answers.hpp"
#include "orbench/errors.hpp"
#include "orbench/qagen.hpp"

namespace orbench::qa_io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json parse_line(std::string_view line, std::size_t line_no) {
    try {
        return json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
}

std::string string_field(const json& j, const char* key, std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(line_no, std::string("missing field '") + key + "'");
    if (!it->is_string()) throw ParseError(line_no, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

} // namespace

ordered_json default_header() {
    ordered_json h;
    h["kind"] = "qa_pairs";
    h["format_version"] = std::string(kQaFormatVersion);
    h["template_version"] = std::string(qagen::kTemplateVersion);
    h["tool_version"] = std::string(kToolVersion);
    return h;
}

std::string pair_to_line(const QAPair& p) {
    ordered_json j;
    j["id"] = p.id;
    j["dataset"] = p.dataset;
    j["clip_id"] = p.clip_id;
    j["timepoint_id"] = p.timepoint_id;
    j["task"] = std::string(task_name(p.task));
    j["question"] = p.question;
    j["answer"] = p.answer;
    if (p.context) j["context"] = *p.context;
    return j.dump();
}

QAPair pair_from_line(std::string_view line, std::size_t line_no) {
    const auto j = parse_line(line, line_no);
    if (!j.is_object()) throw ParseError(line_no, "expected an object");
    QAPair p;
    p.id = string_field(j, "id", line_no);
    p.dataset = string_field(j, "dataset", line_no);
    p.clip_id = string_field(j, "clip_id", line_no);
    p.timepoint_id = string_field(j, "timepoint_id", line_no);
    const auto task = string_field(j, "task", line_no);
    p.question = string_field(j, "question", line_no);
    p.answer = string_field(j, "answer", line_no);
    if (j.contains("context")) p.context = string_field(j, "context", line_no);

    const auto locus = "line " + std::to_string(line_no) + " (" + p.id + ")";
    auto parsed = try_parse_task(task);
    if (!parsed) throw ValidationError(locus, "task", "unknown task '" + task + "'");
    p.task = *parsed;
    if (!answers::conforms(p.task, p.answer)) {
        throw ValidationError(locus, "answer", "'" + p.answer + "' violates the " + task + " answer grammar");
    }
    if (make_qa_id(p.dataset, p.clip_id, p.timepoint_id, p.task, p.question) != p.id) {
        throw ValidationError(locus, "id", "id does not match the pair's provenance and question");
    }
    return p;
}

QaWriter::QaWriter(const std::filesystem::path& path, const ordered_json& header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
    if (!out_) throw IoError("cannot write QA file '" + path_ + "'");
    out_ << header.dump() << '\n';
}

void QaWriter::write(const QAPair& pair) {
    out_ << pair_to_line(pair) << '\n';
    if (!out_) throw IoError("write failed for '" + path_ + "'");
    ++count_;
}

void QaWriter::close() {
    out_.close();
    if (out_.fail()) throw IoError("closing '" + path_ + "' failed");
}

QaReader::QaReader(const std::filesystem::path& path) : in_(path), path_(path.string()) {
    if (!in_) throw IoError("cannot open QA file '" + path_ + "'");
    if (!std::getline(in_, buffer_)) throw ParseError(1, "missing header line in '" + path_ + "'");
    line_no_ = 1;
    header_ = parse_line(buffer_, 1);
    if (!header_.is_object() || header_.value("kind", "") != "qa_pairs") {
        throw ParseError(1, "'" + path_ + "' is not a QA pair file (header kind != qa_pairs)");
    }
}

bool QaReader::next(QAPair& out) {
    while (std::getline(in_, buffer_)) {
        ++line_no_;
        if (buffer_.empty()) continue;
        out = pair_from_line(buffer_, line_no_);
        return true;
    }
    return false;
}

std::vector<QAPair> read_pairs(const std::filesystem::path& path, json* header) {
    QaReader reader(path);
    if (header) *header = reader.header();
    std::vector<QAPair> out;
    QAPair p;
    while (reader.next(p)) out.push_back(std::move(p));
    return out;
}

void write_pairs(const std::filesystem::path& path, const ordered_json& header, const std::vector<QAPair>& pairs) {
    QaWriter writer(path, header);
    for (const auto& p : pairs) writer.write(p);
    writer.close();
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions file '" + path.string() + "'");
    std::vector<Prediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = parse_line(line, line_no);
        if (!j.is_object()) throw ParseError(line_no, "expected an object");
        out.push_back(Prediction{string_field(j, "qa_id", line_no), string_field(j, "answer", line_no)});
    }
    return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write predictions file '" + path.string() + "'");
    for (const auto& p : predictions) {
        ordered_json j;
        j["qa_id"] = p.qa_id;
        j["answer"] = p.raw_answer;
        out << j.dump() << '\n';
    }
    out.close();
    if (out.fail()) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace orbench::qa_io

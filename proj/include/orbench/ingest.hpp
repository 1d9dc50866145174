#pragma once

#include "orbench/core.hpp"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace orbench::ingest {

inline constexpr int kSupportedMajor = 1;
inline constexpr std::string_view kFormatVersion = "1.0.0";

struct AnnotationHeader {
    std::string format_version{kFormatVersion};
    std::string dataset;
    friend bool operator==(const AnnotationHeader&, const AnnotationHeader&) = default;
};

struct AnnotationFile {
    AnnotationHeader header;
    std::vector<TimepointRecord> records;
    friend bool operator==(const AnnotationFile&, const AnnotationFile&) = default;
};

/// Checks every per-record invariant. Throws ValidationError naming the record and field.
void validate_record(const TimepointRecord& record);

/// One canonical JSON line (no trailing newline). Optional fields are omitted when absent.
std::string record_to_line(const TimepointRecord& record);
/// Throws ParseError (tagged with `line_no`) on malformed JSON or ill-typed fields.
/// Does not run validate_record.
TimepointRecord record_from_line(std::string_view line, std::size_t line_no);

std::string header_to_line(const AnnotationHeader& header);

/// Streaming reader: holds one record at a time plus the last timestamp per clip.
class AnnotationReader {
public:
    explicit AnnotationReader(const std::filesystem::path& path);

    const AnnotationHeader& header() const { return header_; }
    /// Reads, parses and validates the next record. Returns false at end of file.
    bool next(TimepointRecord& out);
    std::size_t line_number() const { return line_no_; }

private:
    std::ifstream in_;
    std::string path_;
    AnnotationHeader header_;
    std::size_t line_no_ = 0;
    std::string buffer_;
    std::unordered_map<std::string, double> last_time_by_clip_;
};

AnnotationFile parse_annotations(const std::filesystem::path& path);
void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const AnnotationHeader&, TimepointRecord&&)>& fn);

class AnnotationWriter {
public:
    AnnotationWriter(const std::filesystem::path& path, const AnnotationHeader& header);
    void write(const TimepointRecord& record);
    void close();

private:
    std::ofstream out_;
    std::string path_;
};

void write_annotations(const AnnotationFile& file, const std::filesystem::path& path);

} // namespace orbench::ingest

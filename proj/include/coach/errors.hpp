#pragma once

#include <stdexcept>
#include <string>

namespace coach {

struct CoachError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingHeader : CoachError {
    MissingHeader() : CoachError("annotation CSV is missing the required header row") {}
};

struct MalformedRow : CoachError {
    int line_no;
    MalformedRow(int line, const std::string& reason)
        : CoachError("line " + std::to_string(line) + ": " + reason), line_no(line) {}
};

struct InvariantViolation : CoachError {
    using CoachError::CoachError;
};

struct EmptyQuery : CoachError {
    EmptyQuery() : CoachError("query text is empty") {}
};

struct SchemaViolation : CoachError {
    std::string raw_text;
    explicit SchemaViolation(const std::string& raw, const std::string& why)
        : CoachError("response failed role schema: " + why), raw_text(raw) {}
};

struct BackendUnavailable : CoachError {
    using CoachError::CoachError;
};

struct Timeout : CoachError {
    double budget_s;
    explicit Timeout(double budget)
        : CoachError("backend call exceeded " + std::to_string(budget) + " s"), budget_s(budget) {}
};

struct UnparseableReport : CoachError {
    explicit UnparseableReport(const std::string& text)
        : CoachError("no bracketed grounder report in: " + text) {}
};

struct UnknownStrokeRef : CoachError {
    using CoachError::CoachError;
};

struct RallyTooLarge : CoachError {
    std::string rally_id;
    explicit RallyTooLarge(const std::string& id)
        : CoachError("rally " + id + " exceeds max_chunk_strokes"), rally_id(id) {}
};

struct FullBatchFailure : CoachError {
    FullBatchFailure() : CoachError("every cell of the dispatch batch failed") {}
};

struct NoSubQueries : CoachError {
    NoSubQueries() : CoachError("summarization plan contains no sub-queries") {}
};

struct EmptyEdl : CoachError {
    EmptyEdl() : CoachError("edit decision list is empty") {}
};

struct EmptyCohort : CoachError {
    EmptyCohort() : CoachError("no negative queries in cohort") {}
};

struct NoAnswerFound : CoachError {
    NoAnswerFound() : CoachError("no core answer found in prediction text") {}
};

struct ConfigError : CoachError {
    using CoachError::CoachError;
};

}  // namespace coach

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace maxshapley {

// Error categories double as CLI exit codes:
// usage=1, data=2, oracle/transport=3, numeric=4.
enum class ErrorCategory : int {
    Usage = 1,
    Data = 2,
    Oracle = 3,
    Numeric = 4,
};

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Usage: return "usage";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Oracle: return "oracle";
        case ErrorCategory::Numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string message)
        : std::runtime_error(std::move(message)), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

struct UsageError : Error {
    explicit UsageError(std::string m) : Error(ErrorCategory::Usage, std::move(m)) {}
};

struct DataError : Error {
    explicit DataError(std::string m) : Error(ErrorCategory::Data, std::move(m)) {}
};

struct OracleError : Error {
    explicit OracleError(std::string m) : Error(ErrorCategory::Oracle, std::move(m)) {}
};

struct NumericError : Error {
    explicit NumericError(std::string m) : Error(ErrorCategory::Numeric, std::move(m)) {}
};

// Raised when a metric is not defined for the given input (constant ranking,
// no relevant source). Callers typically skip the sample and count it.
struct UndefinedMetricError : DataError {
    explicit UndefinedMetricError(std::string m) : DataError(std::move(m)) {}
};

// Raised when keypoint distillation removes every keypoint; the pipeline
// catches this and falls back to the undistilled set.
struct DistillationError : OracleError {
    explicit DistillationError(std::string m) : OracleError(std::move(m)) {}
};

}  // namespace maxshapley

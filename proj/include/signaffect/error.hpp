#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace signaffect {

/// Malformed or inconsistent input data. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration. The CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parse failure tied to a 1-based record number in the input.
class ParseError : public DataError {
public:
    ParseError(std::size_t record, const std::string& reason)
        : DataError(reason + " at record " + std::to_string(record)), record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

/// Non-fatal warnings collected along the pipeline.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
    bool empty() const noexcept { return warnings.empty(); }
};

inline void warn(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->warn(std::move(message));
}

} // namespace signaffect

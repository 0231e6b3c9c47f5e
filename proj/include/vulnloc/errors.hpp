#pragma once

#include <stdexcept>
#include <string>

namespace vulnloc {

// Data/format problems in user-supplied inputs. The CLI maps these to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LexError : DataError {
    using DataError::DataError;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct LinkError : DataError {
    using DataError::DataError;
};

struct FormatError : DataError {
    using DataError::DataError;
};

inline std::string at_location(const std::string& file, int line) {
    return file + ":" + std::to_string(line);
}

} // namespace vulnloc

#pragma once

#include <stdexcept>
#include <string>

namespace ald {

// Error taxonomy mirrors the CLI exit codes:
//   0 success, 2 config error, 3 data-format error, 4 runtime/numeric error.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitDataFormat = 3,
    kExitNumeric = 4,
};

} // namespace ald

#pragma once

#include <stdexcept>
#include <string>

namespace tmf {

// Error categories map 1:1 onto the CLI exit codes (see tools/telemafuse_main.cpp):
// config -> 2, data/schema/io -> 3, numeric -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace tmf

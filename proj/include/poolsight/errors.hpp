#pragma once

#include <stdexcept>
#include <string>

namespace poolsight {

/// Error taxonomy shared by the library and the CLI.
/// The CLI maps kinds to process exit codes: config=2, data=3, numeric=4.
enum class ErrorKind {
    Config,
    Data,
    Numeric,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        case ErrorKind::Numeric: return 4;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Invalid geometry in user-supplied layers (degenerate rings, bad orientation).
struct InvalidGeometryError : DataError {
    explicit InvalidGeometryError(const std::string& what) : DataError(what) {}
};

}  // namespace poolsight

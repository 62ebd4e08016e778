#pragma once

#include <stdexcept>
#include <string>

namespace nsa {

// A constrained placement loop ran out of retries.
class PlacementError : public std::runtime_error {
public:
    explicit PlacementError(const std::string& what) : std::runtime_error(what) {}
};

// A metric is undefined for the given inputs (e.g. a single-class pool).
class MetricError : public std::runtime_error {
public:
    explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or malformed external data (files, directories, encodings).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Config file diagnostic anchored to a line (0 = whole file).
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

}  // namespace nsa

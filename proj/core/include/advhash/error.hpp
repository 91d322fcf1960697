#pragma once

#include <stdexcept>
#include <string>

namespace advhash {

// Root of every error raised by the toolkit. The CLI maps the subclasses
// onto its exit codes, so new error kinds should derive from one of these.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between a layer and its operand.
class DimensionError : public Error {
public:
    DimensionError(const std::string& layer, const std::string& expected, const std::string& actual)
        : Error(layer + ": expected shape " + expected + ", got " + actual),
          layer_(layer), expected_(expected), actual_(actual) {}

    const std::string& layer() const noexcept { return layer_; }
    const std::string& expected() const noexcept { return expected_; }
    const std::string& actual() const noexcept { return actual_; }

private:
    std::string layer_;
    std::string expected_;
    std::string actual_;
};

// Invalid arguments or configuration (bad flags, malformed architecture text,
// out-of-range layer indices, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Operation invoked in the wrong state, e.g. backward without a forward cache.
class StateError : public Error {
public:
    using Error::Error;
};

// Malformed or unreadable input file. `section` names the part of the file
// that failed to parse (IDX header, CIFAR record, checkpoint section, ...).
class FormatError : public Error {
public:
    FormatError(const std::string& section, const std::string& what)
        : Error(section + ": " + what), section_(section) {}

    const std::string& section() const noexcept { return section_; }

private:
    std::string section_;
};

// A value became NaN/Inf (training divergence, broken oracle function, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace advhash

#pragma once

#include <stdexcept>
#include <string>

namespace freqseg {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or extent mismatch. `axis` is -1 when no single axis is at fault.
class ShapeError : public Error {
public:
    ShapeError(const std::string& what, int axis = -1)
        : Error(what), axis_(axis) {}
    int axis() const noexcept { return axis_; }

private:
    int axis_;
};

class ValueError : public Error {
public:
    using Error::Error;
};

}  // namespace freqseg

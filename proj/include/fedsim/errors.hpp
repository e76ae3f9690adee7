#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Tensor/layer dimension mismatches and inconsistent architecture descriptors.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument values: labels out of range, non-finite data, bad fractions.
class ValueError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed frames, unexpected message types, connection loss.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unparseable config files, unknown architecture names, invalid run setups.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem-level failures (missing dataset, unwritable output directory).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fedsim

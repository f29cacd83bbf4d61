#pragma once

#include <stdexcept>
#include <string>

namespace scef {

// Shape disagreement between tensors, banks or gradients.
class dimension_error : public std::invalid_argument {
public:
    explicit dimension_error(const std::string& what) : std::invalid_argument(what) {}
};

// Out-of-range or non-positive scalar argument (rank, channel count, ...).
class parameter_error : public std::invalid_argument {
public:
    explicit parameter_error(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values or failed numerical iteration.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or malformed on-disk data (NPY, zip, CIFAR batches, JSON).
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid network or training configuration.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Inputs that must agree with each other do not (e.g. checkpoint topologies).
class consistency_error : public std::runtime_error {
public:
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

// A mathematical hypothesis required by an operation does not hold.
class precondition_error : public std::runtime_error {
public:
    explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace scef

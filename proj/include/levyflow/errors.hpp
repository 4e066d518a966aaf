#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace levyflow {

// Bad parameters, malformed configs, violated preconditions.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// SDE integration blew up (non-finite state).
struct IntegrationError : std::runtime_error {
    IntegrationError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_index(step) {}
    std::size_t step_index;
};

// Non-finite loss or other training failure.
struct TrainError : std::runtime_error {
    TrainError(const std::string& what, int epoch, int batch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch) + ")"),
          epoch(epoch),
          batch(batch) {}
    int epoch;
    int batch;
};

// Jump-parameter fit could not proceed (zero or non-monotone counts).
struct EstimationError : std::runtime_error {
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

// Missing or unreadable input artifacts.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace levyflow

#pragma once

#include <stdexcept>
#include <string>

// Error types thrown across the library. Each maps to one failure mode so
// callers (and tests) can catch the specific condition.

namespace evtrack {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveDepth : Error {
    explicit NonPositiveDepth(const std::string& m = "point depth must be positive") : Error(m) {}
};
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& m = "iteration did not converge") : Error(m) {}
};
struct DegenerateConfiguration : Error {
    explicit DegenerateConfiguration(const std::string& m = "degenerate point configuration") : Error(m) {}
};
struct IllConditioned : Error {
    explicit IllConditioned(const std::string& m = "linear system is ill-conditioned") : Error(m) {}
};
struct RankDeficient : Error {
    explicit RankDeficient(const std::string& m = "not enough independent samples") : Error(m) {}
};
struct InsufficientPulses : Error {
    explicit InsufficientPulses(const std::string& m = "not enough sync pulses for frame pairing") : Error(m) {}
};
struct ObjectOutOfFrustum : Error {
    explicit ObjectOutOfFrustum(const std::string& m = "object bounding box left the image") : Error(m) {}
};
struct ZeroNormalizer : Error {
    explicit ZeroNormalizer(const std::string& m = "normalizer must be positive") : Error(m) {}
};
struct EmptyDataset : Error {
    explicit EmptyDataset(const std::string& m = "dataset is empty") : Error(m) {}
};
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& m = "tensor shape mismatch") : Error(m) {}
};
struct NonFiniteLoss : Error {
    explicit NonFiniteLoss(const std::string& m = "loss became non-finite") : Error(m) {}
};
struct LengthMismatch : Error {
    explicit LengthMismatch(const std::string& m = "sequence lengths differ") : Error(m) {}
};
struct UnsupportedRate : Error {
    explicit UnsupportedRate(const std::string& m = "unsupported target frame rate") : Error(m) {}
};
struct EmptyCrop : Error {
    explicit EmptyCrop(const std::string& m = "no depth points inside crop box") : Error(m) {}
};
struct ZeroStd : Error {
    explicit ZeroStd(const std::string& m = "channel standard deviation is zero") : Error(m) {}
};
struct IoError : Error {
    using Error::Error;
};
struct ParseError : Error {
    ParseError(const std::string& file, int line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), line_number(line) {}
    int line_number;
};

}  // namespace evtrack

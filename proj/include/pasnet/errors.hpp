#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace pasnet {

/// Base of every domain error raised by the pipeline. The CLI maps these to
/// exit code 1; anything else is treated as a usage or internal failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IngestError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class OrientationError : public Error { using Error::Error; };
class PreprocessError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class TrainingDiverged : public Error { using Error::Error; };
class MetricUndefined : public Error { using Error::Error; };

/// Raised when a test statistic has a zero error term. `p` carries the
/// conventional value when one exists (e.g. 0 for a pure treatment effect).
class StatDegenerate : public Error {
public:
    explicit StatDegenerate(const std::string& what, std::optional<double> p = std::nullopt)
        : Error(what), p_(p) {}
    [[nodiscard]] std::optional<double> p() const noexcept { return p_; }

private:
    std::optional<double> p_;
};

}  // namespace pasnet

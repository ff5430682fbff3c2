#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtumpc {

enum class ErrorCode {
    InvalidArgument,
    InvalidLadder,
    ShapeMismatch,
    NumericOverflow,
    Diverged,
    SingularDesign,
    DegenerateFeature,
    NoEvaluations,
    InsufficientHistory,
    MissingBaseline,
    NoHistory,
    OutOfOrder,
    Io,
    Parse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure the public API reports carries a
/// machine-checkable code in addition to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) throw Error(code, what);
}

} // namespace rtumpc

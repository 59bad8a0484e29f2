#pragma once

#include <stdexcept>
#include <string>

namespace mcargraph {

// Failure categories raised by the library. The CLI maps any Error to
// exit code 1; command-line usage problems exit with 2 before any of
// these can be thrown.
enum class Errc {
    NonFinite,
    EigenFailure,
    Unstable,
    NotSymmetric,
    NegativeHorizon,
    BadShape,
    NotStrict,
    WrongOrder,
    VertexMismatch,
    OutOfRange,
    QueryInvalid,
    TooLarge,
    CholeskyFailure,
    BadDriver,
    ShapeMismatch,
    DegenerateVariance,
    RankDeficient,
    SingularBlock,
    SingularResolvent,
    ParseFailure,
};

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace mcargraph

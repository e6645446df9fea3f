#pragma once

#include <stdexcept>
#include <string>

namespace dlyap {

/// Failure raised by any module. `code()` is a short stable identifier such as
/// "schur-no-convergence" or "tsylv-near-singular"; the CLI prints it verbatim.
class Error : public std::runtime_error
{
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code))
    {
    }

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace dlyap

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmenet {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    constant_column,
    index_out_of_range,
    invalid_params,
    non_convergence,
    missing_predecessor,
    screening_disabled,
    degenerate_response,
    all_fits_failed,
    invalid_rho,
    model_not_realizable,
    singular_block,
    parse_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. All library failures use it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace cmenet

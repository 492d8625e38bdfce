#pragma once

#include <stdexcept>
#include <string>

namespace xmf {

// Stable error identifiers; CLI maps these to exit code 2 (input/validation)
// or 3 (numerical failure).
enum class ErrorCode {
    malformed_header,
    dimension_mismatch,
    duplicate_id,
    non_finite_value,
    zero_norm_row,
    parse_error,
    missing_id,
    dim_mismatch,
    zero_norm,
    empty_image_set,
    size_limit_exceeded,
    io_error,
    out_of_range_operand,
    empty_candidate,
    empty_references,
    empty_input,
    insufficient_samples,
    non_psd_covariance,
    length_mismatch,
    degenerate_range,
    invalid_range,
    timestep_out_of_range,
    invalid_step_sequence,
    non_finite_loss,
    out_of_range_value,
};

const char* error_code_name(ErrorCode code);

class XmfError : public std::runtime_error {
public:
    XmfError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace xmf

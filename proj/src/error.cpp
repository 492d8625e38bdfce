#include "xmf/error.hpp"

namespace xmf {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::malformed_header: return "malformed-header";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::duplicate_id: return "duplicate-id";
        case ErrorCode::non_finite_value: return "non-finite-value";
        case ErrorCode::zero_norm_row: return "zero-norm-row";
        case ErrorCode::parse_error: return "parse-error";
        case ErrorCode::missing_id: return "missing-id";
        case ErrorCode::dim_mismatch: return "dim-mismatch";
        case ErrorCode::zero_norm: return "zero-norm";
        case ErrorCode::empty_image_set: return "empty-image-set";
        case ErrorCode::size_limit_exceeded: return "size-limit-exceeded";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::out_of_range_operand: return "out-of-range-operand";
        case ErrorCode::empty_candidate: return "empty-candidate";
        case ErrorCode::empty_references: return "empty-references";
        case ErrorCode::empty_input: return "empty-input";
        case ErrorCode::insufficient_samples: return "insufficient-samples";
        case ErrorCode::non_psd_covariance: return "non-psd-covariance";
        case ErrorCode::length_mismatch: return "length-mismatch";
        case ErrorCode::degenerate_range: return "degenerate-range";
        case ErrorCode::invalid_range: return "invalid-range";
        case ErrorCode::timestep_out_of_range: return "timestep-out-of-range";
        case ErrorCode::invalid_step_sequence: return "invalid-step-sequence";
        case ErrorCode::non_finite_loss: return "non-finite-loss";
        case ErrorCode::out_of_range_value: return "out-of-range-value";
    }
    return "unknown-error";
}

}  // namespace xmf

#include <cmenet/error.hpp>

namespace cmenet {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::constant_column: return "ConstantColumn";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::invalid_params: return "InvalidParams";
    case ErrorCode::non_convergence: return "NonConvergence";
    case ErrorCode::missing_predecessor: return "MissingPredecessor";
    case ErrorCode::screening_disabled: return "ScreeningDisabled";
    case ErrorCode::degenerate_response: return "DegenerateResponse";
    case ErrorCode::all_fits_failed: return "AllFitsFailed";
    case ErrorCode::invalid_rho: return "InvalidRho";
    case ErrorCode::model_not_realizable: return "ModelNotRealizable";
    case ErrorCode::singular_block: return "SingularBlock";
    case ErrorCode::parse_error: return "ParseError";
    }
    return "Unknown";
}

} // namespace cmenet

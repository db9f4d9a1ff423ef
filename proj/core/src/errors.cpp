#include "pelm/errors.hpp"

namespace pelm {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
  case Errc::file_not_found: return "file_not_found";
  case Errc::bad_magic: return "bad_magic";
  case Errc::truncated_file: return "truncated_file";
  case Errc::count_mismatch: return "count_mismatch";
  case Errc::unparseable_row: return "unparseable_row";
  case Errc::schema_mismatch: return "schema_mismatch";
  case Errc::invalid_dataset: return "invalid_dataset";
  case Errc::split_too_large: return "split_too_large";
  case Errc::length_mismatch: return "length_mismatch";
  case Errc::grid_mismatch: return "grid_mismatch";
  case Errc::layout_out_of_bounds: return "layout_out_of_bounds";
  case Errc::degenerate_target_range: return "degenerate_target_range";
  case Errc::unwritable_path: return "unwritable_path";
  case Errc::invalid_parameter: return "invalid_parameter";
  case Errc::missing_seed: return "missing_seed";
  case Errc::missing_field: return "missing_field";
  case Errc::singular_system: return "singular_system";
  case Errc::non_finite_input: return "non_finite_input";
  case Errc::dimension_mismatch: return "dimension_mismatch";
  }
  return "unknown";
}

ErrorCategory errc_category(Errc code) noexcept {
  switch (code) {
  case Errc::invalid_parameter:
  case Errc::missing_seed:
  case Errc::missing_field:
    return ErrorCategory::config;
  case Errc::singular_system:
  case Errc::non_finite_input:
  case Errc::dimension_mismatch:
    return ErrorCategory::numeric;
  default:
    return ErrorCategory::data;
  }
}

void fail(Errc code, const std::string& what) {
  throw Error(code, std::string(errc_name(code)) + ": " + what);
}

} // namespace pelm

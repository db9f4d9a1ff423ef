#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pelm {

/// Broad failure class. The CLI maps each category to its own exit code.
enum class ErrorCategory { config, data, numeric };

/// Specific failure reasons, so callers and tests can tell failures apart
/// without parsing messages.
enum class Errc {
  // data
  file_not_found,
  bad_magic,
  truncated_file,
  count_mismatch,
  unparseable_row,
  schema_mismatch,
  invalid_dataset,
  split_too_large,
  length_mismatch,
  grid_mismatch,
  layout_out_of_bounds,
  degenerate_target_range,
  unwritable_path,
  // config
  invalid_parameter,
  missing_seed,
  missing_field,
  // numeric
  singular_system,
  non_finite_input,
  dimension_mismatch,
};

std::string_view errc_name(Errc code) noexcept;
ErrorCategory errc_category(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return errc_category(code_); }

private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

} // namespace pelm

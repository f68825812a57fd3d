#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chronogaze {

enum class ErrorCode {
  missing_file,
  schema_mismatch,
  row_parse,
  cross_reference,
  empty_dataset,
  single_class,
  missing_baseline,
  non_positive_actual,
  out_of_range_likert,
  missing_questionnaire,
  all_columns_dropped,
  k_too_large,
  k_exceeds_n,
  stratification_impossible,
  all_combos_invalid,
  no_eval_slices,
  leakage,
  invalid_argument,
  unknown_feature,
  serialization,
  io,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure carries a machine-readable code;
/// row-level parse failures additionally carry the offending file line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  /// 1-based line number for row_parse errors, 0 otherwise.
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace chronogaze

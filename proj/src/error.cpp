#include "chronogaze/error.hpp"

namespace chronogaze {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_file: return "MissingFile";
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::row_parse: return "RowParseError";
    case ErrorCode::cross_reference: return "CrossReferenceError";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::single_class: return "SingleClass";
    case ErrorCode::missing_baseline: return "MissingBaseline";
    case ErrorCode::non_positive_actual: return "NonPositiveActual";
    case ErrorCode::out_of_range_likert: return "OutOfRangeLikert";
    case ErrorCode::missing_questionnaire: return "MissingQuestionnaire";
    case ErrorCode::all_columns_dropped: return "AllColumnsDropped";
    case ErrorCode::k_too_large: return "KTooLarge";
    case ErrorCode::k_exceeds_n: return "KExceedsN";
    case ErrorCode::stratification_impossible: return "StratificationImpossible";
    case ErrorCode::all_combos_invalid: return "AllCombosInvalid";
    case ErrorCode::no_eval_slices: return "NoEvalSlices";
    case ErrorCode::leakage: return "Leakage";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::unknown_feature: return "UnknownFeature";
    case ErrorCode::serialization: return "SerializationError";
    case ErrorCode::io: return "IoError";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message, std::size_t line) {
  std::string out(to_string(code));
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace chronogaze

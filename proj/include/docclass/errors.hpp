#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace docclass {

enum class Errc {
  // dataset
  missing_file,
  malformed_manifest,
  unknown_label,
  duplicate_doc_id,
  unsupported_format,
  corrupt_document,
  rasterizer_unavailable,
  // vectorspace
  dimension_mismatch,
  zero_vector,
  empty_input,
  // clustermetrics
  too_few_classes,
  degenerate_centroid,
  // providers
  provider_error,
  content_filtered,
  invalid_request,
  // classify
  empty_class_set,
  missing_placeholder,
  unparseable,
  // evalreport
  unknown_doc,
  duplicate_prediction,
  duplicate_key,
  // cli / pipeline
  stage_error,
  usage_error,
  config_error,
  io_error,
};

constexpr std::string_view to_string(Errc c) {
  switch (c) {
    case Errc::missing_file: return "MissingFile";
    case Errc::malformed_manifest: return "MalformedManifest";
    case Errc::unknown_label: return "UnknownLabel";
    case Errc::duplicate_doc_id: return "DuplicateDocId";
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::corrupt_document: return "CorruptDocument";
    case Errc::rasterizer_unavailable: return "RasterizerUnavailable";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::empty_input: return "EmptyInput";
    case Errc::too_few_classes: return "TooFewClasses";
    case Errc::degenerate_centroid: return "DegenerateCentroid";
    case Errc::provider_error: return "ProviderError";
    case Errc::content_filtered: return "ContentFiltered";
    case Errc::invalid_request: return "InvalidRequest";
    case Errc::empty_class_set: return "EmptyClassSet";
    case Errc::missing_placeholder: return "MissingPlaceholder";
    case Errc::unparseable: return "Unparseable";
    case Errc::unknown_doc: return "UnknownDoc";
    case Errc::duplicate_prediction: return "DuplicatePrediction";
    case Errc::duplicate_key: return "DuplicateKey";
    case Errc::stage_error: return "StageError";
    case Errc::usage_error: return "UsageError";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

// Single exception type for the whole library. `context` carries the
// offending identifier (doc_id, label, field) when one exists.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::string context = {})
      : std::runtime_error(std::string(to_string(code)) +
                           (context.empty() ? "" : "(" + context + ")") + ": " +
                           message),
        code_(code),
        message_(std::move(message)),
        context_(std::move(context)) {}

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& context() const noexcept { return context_; }

 private:
  Errc code_;
  std::string message_;
  std::string context_;
};

}  // namespace docclass

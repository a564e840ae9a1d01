#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "wander/corpus.hpp"

namespace wander {

using LabelMap = std::map<std::string, int>;

struct MetricsReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::vector<long>> confusion;  // [gold][pred]
};

/// Micro/macro F1 over `num_classes` classes. A class absent from both
/// prediction and gold scores F1 = 0 and still counts in the macro average.
/// Throws IdSetMismatch when the id sets differ and InvalidArgument for a
/// class id outside [0, num_classes).
MetricsReport f1_report(const LabelMap& pred, const LabelMap& gold, std::size_t num_classes);

struct PilotReport {
  double precision = 0.0;
  double coverage = 0.0;
  std::vector<double> per_class_coverage;
  bool precision_defined = true;  // false when no document matched exactly one class
  std::size_t matched = 0;
  std::size_t single_matched = 0;
};

/// Hard label-name matching diagnostics. A document matches class c when the
/// tokenized label name occurs as a contiguous run in the tokenized text.
/// Documents matching several classes count toward coverage only; precision
/// is measured over single-match documents. A name that tokenizes to nothing
/// matches no document.
PilotReport hard_match_pilot(const TokenizedCorpus& corpus, const std::vector<LabelSpec>& specs,
                             const LabelMap& gold);

/// Gold labels of every document; throws InvalidArgument if one is missing.
LabelMap gold_labels(const std::vector<Document>& docs);

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const PilotReport& report);

/// Aligned plain-text tables.
std::string format_report(const MetricsReport& report, const std::vector<LabelSpec>& specs);
std::string format_report(const PilotReport& report, const std::vector<LabelSpec>& specs);

}  // namespace wander

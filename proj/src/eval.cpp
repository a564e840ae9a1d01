#include "wander/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "wander/errors.hpp"
#include "wander/text.hpp"

namespace wander {

namespace {

std::size_t checked_class(int c, std::size_t num_classes) {
  if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
    throw InvalidArgument("class id " + std::to_string(c) + " outside [0, " + std::to_string(num_classes) + ")");
  }
  return static_cast<std::size_t>(c);
}

double f1_from_counts(long tp, long fp, long fn) {
  const long denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

bool contains_run(const std::vector<std::string>& text, const std::vector<std::string>& run) {
  if (run.empty() || run.size() > text.size()) return false;
  return std::search(text.begin(), text.end(), run.begin(), run.end()) != text.end();
}

std::string class_label(const std::vector<LabelSpec>& specs, std::size_t c) {
  return c < specs.size() ? specs[c].name : std::to_string(c);
}

}  // namespace

MetricsReport f1_report(const LabelMap& pred, const LabelMap& gold, std::size_t num_classes) {
  if (pred.size() != gold.size()) {
    throw IdSetMismatch("prediction covers " + std::to_string(pred.size()) + " ids, gold " +
                        std::to_string(gold.size()));
  }
  MetricsReport report;
  report.confusion.assign(num_classes, std::vector<long>(num_classes, 0));
  // Both maps are ordered by id, so a lockstep walk checks the id sets.
  for (auto p = pred.begin(), g = gold.begin(); p != pred.end(); ++p, ++g) {
    if (p->first != g->first) throw IdSetMismatch("id \"" + p->first + "\" has no gold label");
    ++report.confusion[checked_class(g->second, num_classes)][checked_class(p->second, num_classes)];
  }

  long tp_sum = 0;
  long fp_sum = 0;
  long fn_sum = 0;
  report.per_class_f1.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const long tp = report.confusion[c][c];
    long row = 0;
    long col = 0;
    for (std::size_t o = 0; o < num_classes; ++o) {
      row += report.confusion[c][o];
      col += report.confusion[o][c];
    }
    report.per_class_f1[c] = f1_from_counts(tp, col - tp, row - tp);
    tp_sum += tp;
    fp_sum += col - tp;
    fn_sum += row - tp;
  }
  report.micro_f1 = f1_from_counts(tp_sum, fp_sum, fn_sum);
  double macro = 0.0;
  for (double f : report.per_class_f1) macro += f;
  report.macro_f1 = num_classes ? macro / static_cast<double>(num_classes) : 0.0;
  return report;
}

PilotReport hard_match_pilot(const TokenizedCorpus& corpus, const std::vector<LabelSpec>& specs,
                             const LabelMap& gold) {
  const std::size_t C = specs.size();
  std::vector<std::vector<std::string>> names;
  names.reserve(C);
  for (const auto& spec : specs) names.push_back(tokenize(spec.name));

  PilotReport report;
  std::vector<std::size_t> class_docs(C, 0);
  std::vector<std::size_t> class_hits(C, 0);
  std::size_t correct = 0;
  for (const auto& doc : corpus.documents()) {
    const auto g = gold.find(doc.id);
    if (g == gold.end()) throw InvalidArgument("document \"" + doc.id + "\" has no gold label");
    const std::size_t gold_class = checked_class(g->second, C);
    ++class_docs[gold_class];

    std::vector<std::size_t> matches;
    for (std::size_t c = 0; c < C; ++c) {
      if (contains_run(doc.tokens, names[c])) matches.push_back(c);
    }
    if (matches.empty()) continue;
    ++report.matched;
    if (std::find(matches.begin(), matches.end(), gold_class) != matches.end()) ++class_hits[gold_class];
    if (matches.size() == 1) {
      ++report.single_matched;
      correct += matches.front() == gold_class;
    }
  }

  const auto frac = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  report.coverage = frac(report.matched, corpus.size());
  report.precision_defined = report.single_matched > 0;
  report.precision = frac(correct, report.single_matched);
  report.per_class_coverage.resize(C);
  for (std::size_t c = 0; c < C; ++c) report.per_class_coverage[c] = frac(class_hits[c], class_docs[c]);
  return report;
}

LabelMap gold_labels(const std::vector<Document>& docs) {
  LabelMap gold;
  for (const auto& doc : docs) {
    if (!doc.gold_label) throw InvalidArgument("document \"" + doc.id + "\" has no gold label");
    gold.emplace(doc.id, *doc.gold_label);
  }
  return gold;
}

nlohmann::json to_json(const MetricsReport& report) {
  return {{"micro_f1", report.micro_f1},
          {"macro_f1", report.macro_f1},
          {"per_class_f1", report.per_class_f1},
          {"confusion", report.confusion}};
}

nlohmann::json to_json(const PilotReport& report) {
  return {{"precision", report.precision},
          {"precision_defined", report.precision_defined},
          {"coverage", report.coverage},
          {"per_class_coverage", report.per_class_coverage},
          {"matched", report.matched},
          {"single_matched", report.single_matched}};
}

std::string format_report(const MetricsReport& report, const std::vector<LabelSpec>& specs) {
  std::size_t width = 5;
  for (std::size_t c = 0; c < report.per_class_f1.size(); ++c) {
    width = std::max(width, class_label(specs, c).size());
  }
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(static_cast<int>(width)) << "class" << "  " << std::right << std::setw(8) << "F1"
      << "  " << std::setw(8) << "gold" << '\n';
  for (std::size_t c = 0; c < report.per_class_f1.size(); ++c) {
    long gold = 0;
    for (long v : report.confusion[c]) gold += v;
    out << std::left << std::setw(static_cast<int>(width)) << class_label(specs, c) << "  " << std::right
        << std::setw(8) << report.per_class_f1[c] << "  " << std::setw(8) << gold << '\n';
  }
  out << std::left << std::setw(static_cast<int>(width)) << "micro" << "  " << std::right << std::setw(8)
      << report.micro_f1 << '\n';
  out << std::left << std::setw(static_cast<int>(width)) << "macro" << "  " << std::right << std::setw(8)
      << report.macro_f1 << '\n';
  return out.str();
}

std::string format_report(const PilotReport& report, const std::vector<LabelSpec>& specs) {
  std::size_t width = 9;
  for (std::size_t c = 0; c < report.per_class_coverage.size(); ++c) {
    width = std::max(width, class_label(specs, c).size());
  }
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(static_cast<int>(width)) << "precision" << "  " << std::right << std::setw(8)
      << report.precision << (report.precision_defined ? "" : "  (undefined: no single-match document)") << '\n';
  out << std::left << std::setw(static_cast<int>(width)) << "coverage" << "  " << std::right << std::setw(8)
      << report.coverage << '\n';
  out << '\n' << std::left << std::setw(static_cast<int>(width)) << "class" << "  " << std::right << std::setw(8)
      << "coverage" << '\n';
  for (std::size_t c = 0; c < report.per_class_coverage.size(); ++c) {
    out << std::left << std::setw(static_cast<int>(width)) << class_label(specs, c) << "  " << std::right
        << std::setw(8) << report.per_class_coverage[c] << '\n';
  }
  return out.str();
}

}  // namespace wander

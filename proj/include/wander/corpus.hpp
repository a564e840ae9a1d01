#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace wander {

/// One corpus record. `gold_label` is held out and only read by evaluation.
struct Document {
  std::string id;
  std::string text;
  std::optional<int> gold_label;

  bool operator==(const Document&) const = default;
};

struct TokenizedDocument {
  std::string id;
  std::vector<std::string> tokens;
};

/// A class's label name and the words appended to it by expansion. The query
/// sent to the retriever is the name followed by the expansions.
struct LabelSpec {
  int class_id = 0;
  std::string name;
  std::vector<std::string> expansions;

  bool operator==(const LabelSpec&) const = default;
};

/// Reads a JSON Lines corpus: {"id": str, "text": str, "label": int?}.
/// Throws MalformedRecord, DuplicateId, EmptyText or IoError.
std::vector<Document> load_corpus(const std::filesystem::path& path);

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Reads a JSON Lines label-spec file: {"class_id": int, "name": str,
/// "expansions": [str]?}. The class ids must be exactly 0..C-1; the result is
/// ordered by class id.
std::vector<LabelSpec> load_label_specs(const std::filesystem::path& path);

void save_label_specs(const std::filesystem::path& path, const std::vector<LabelSpec>& specs);

/// Checks the LabelSpec invariants over a whole label set; throws InvalidLabelSpec.
void validate_label_specs(const std::vector<LabelSpec>& specs);

/// Name followed by expansions, single-space separated.
std::string query_text(const LabelSpec& spec);

/// tokenize(name) followed by the expansions.
std::vector<std::string> query_tokens(const LabelSpec& spec);

/// Appends `token` unless it already occurs in the query; returns whether it
/// was added.
bool add_expansion(LabelSpec& spec, const std::string& token);

/// The corpus with every document tokenized once, plus an id lookup.
class TokenizedCorpus {
 public:
  explicit TokenizedCorpus(const std::vector<Document>& docs);

  std::size_t size() const noexcept { return docs_.size(); }
  const std::vector<TokenizedDocument>& documents() const noexcept { return docs_; }

  /// Throws std::out_of_range for an unknown id.
  const std::vector<std::string>& tokens(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }

 private:
  std::vector<TokenizedDocument> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace wander

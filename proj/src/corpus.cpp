#include "wander/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "wander/errors.hpp"
#include "wander/text.hpp"

namespace wander {

using nlohmann::json;

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    json record = json::parse(line);
    if (!record.is_object()) throw MalformedRecord(line_no, "not a JSON object");
    return record;
  } catch (const json::exception& e) {
    throw MalformedRecord(line_no, e.what());
  }
}

}  // namespace

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const json record = parse_line(line, line_no);

    const auto id = record.find("id");
    const auto text = record.find("text");
    if (id == record.end() || !id->is_string()) throw MalformedRecord(line_no, "missing string \"id\"");
    if (text == record.end() || !text->is_string()) {
      throw MalformedRecord(line_no, "missing string \"text\"");
    }

    Document doc;
    doc.id = id->get<std::string>();
    doc.text = text->get<std::string>();
    if (const auto label = record.find("label"); label != record.end() && !label->is_null()) {
      if (!label->is_number_integer()) throw MalformedRecord(line_no, "\"label\" must be an integer");
      doc.gold_label = label->get<int>();
    }
    if (!seen.insert(doc.id).second) throw DuplicateId(doc.id);
    if (is_blank(doc.text)) throw EmptyText(doc.id);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  auto out = open_output(path);
  for (const auto& doc : docs) {
    json record = {{"id", doc.id}, {"text", doc.text}};
    if (doc.gold_label) record["label"] = *doc.gold_label;
    out << record.dump() << '\n';
  }
}

std::vector<LabelSpec> load_label_specs(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<LabelSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const json record = parse_line(line, line_no);
    const auto class_id = record.find("class_id");
    const auto name = record.find("name");
    if (class_id == record.end() || !class_id->is_number_integer()) {
      throw MalformedRecord(line_no, "missing integer \"class_id\"");
    }
    if (name == record.end() || !name->is_string()) throw MalformedRecord(line_no, "missing string \"name\"");

    LabelSpec spec;
    spec.class_id = class_id->get<int>();
    spec.name = name->get<std::string>();
    if (const auto exp = record.find("expansions"); exp != record.end()) {
      if (!exp->is_array()) throw MalformedRecord(line_no, "\"expansions\" must be an array");
      for (const auto& word : *exp) {
        if (!word.is_string()) throw MalformedRecord(line_no, "expansion words must be strings");
        spec.expansions.push_back(word.get<std::string>());
      }
    }
    specs.push_back(std::move(spec));
  }
  std::sort(specs.begin(), specs.end(),
            [](const LabelSpec& a, const LabelSpec& b) { return a.class_id < b.class_id; });
  validate_label_specs(specs);
  return specs;
}

void save_label_specs(const std::filesystem::path& path, const std::vector<LabelSpec>& specs) {
  auto out = open_output(path);
  for (const auto& spec : specs) {
    json record = {{"class_id", spec.class_id}, {"name", spec.name}};
    if (!spec.expansions.empty()) record["expansions"] = spec.expansions;
    out << record.dump() << '\n';
  }
}

void validate_label_specs(const std::vector<LabelSpec>& specs) {
  if (specs.empty()) throw InvalidLabelSpec("label set is empty");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    if (spec.class_id != static_cast<int>(i)) {
      throw InvalidLabelSpec("class ids must be exactly 0..C-1; found " +
                             std::to_string(spec.class_id) + " at position " + std::to_string(i));
    }
    if (is_blank(spec.name)) throw InvalidLabelSpec("class " + std::to_string(i) + " has an empty name");
    const auto name_tokens = tokenize(spec.name);
    std::set<std::string> seen(name_tokens.begin(), name_tokens.end());
    for (const auto& word : spec.expansions) {
      if (!seen.insert(word).second) {
        throw InvalidLabelSpec("class " + std::to_string(i) + ": expansion \"" + word +
                               "\" repeats a query token");
      }
    }
  }
}

std::string query_text(const LabelSpec& spec) {
  std::string out = spec.name;
  for (const auto& word : spec.expansions) {
    out.push_back(' ');
    out += word;
  }
  return out;
}

std::vector<std::string> query_tokens(const LabelSpec& spec) {
  auto tokens = tokenize(spec.name);
  tokens.insert(tokens.end(), spec.expansions.begin(), spec.expansions.end());
  return tokens;
}

bool add_expansion(LabelSpec& spec, const std::string& token) {
  const auto current = query_tokens(spec);
  if (std::find(current.begin(), current.end(), token) != current.end()) return false;
  spec.expansions.push_back(token);
  return true;
}

TokenizedCorpus::TokenizedCorpus(const std::vector<Document>& docs) {
  docs_.reserve(docs.size());
  for (const auto& doc : docs) {
    index_.emplace(doc.id, docs_.size());
    docs_.push_back({doc.id, tokenize(doc.text)});
  }
}

const std::vector<std::string>& TokenizedCorpus::tokens(const std::string& id) const {
  return docs_.at(index_.at(id)).tokens;
}

}  // namespace wander

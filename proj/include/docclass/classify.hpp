#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "docclass/dataset.hpp"
#include "docclass/providers.hpp"
#include "docclass/vectorspace.hpp"

namespace docclass {

// Reserved prediction value for generative outputs that name no class.
inline constexpr const char* kUnparsedLabel = "__unparsed__";

enum class Method { embed_vote, vlm_base, vlm_plus };
std::string to_string(Method m);
Method parse_method(const std::string& s);

struct ClassDefinition {
  std::string label;
  std::string definition_text;
  std::optional<EmbeddingVector> embedding;
};

struct PromptTemplate {
  std::string name;  // base | plus
  std::string system_text;
  std::string user_template;  // carries {class_list}; plus also {class_definitions}
  std::string answer_marker;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

struct Prediction {
  std::string doc_id;
  Method method = Method::embed_vote;
  std::string predicted;
  std::map<std::string, double> scores;  // label -> cosine similarity (embed_vote)
  std::string raw_output;                // verbatim generative text
  bool tie_broken = false;
  bool excluded = false;  // unparseable generative output
};

// Thread-safe embedding cache keyed by (provider id, text digest).
class EmbeddingCache {
 public:
  std::optional<EmbeddingVector> get(const std::string& key) const;
  void put(const std::string& key, EmbeddingVector value);
  static std::string key_for(const std::string& provider_id, const std::string& text);
  std::size_t size() const;

  void load(const std::string& path);  // no-op when absent
  void save(const std::string& path) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, EmbeddingVector> entries_;
};

// Populates each definition with a normalized embedding, via the cache when
// the definition text is unchanged. All embeddings must agree on dim.
std::vector<ClassDefinition> embed_class_definitions(std::vector<ClassDefinition> defs,
                                                     EmbeddingProvider& provider,
                                                     EmbeddingCache& cache);

// Scores every class by cosine similarity and predicts the argmax; exact
// score ties go to the lexicographically smallest label id with tie_broken
// set. doc_id/method are filled by the caller.
Prediction similarity_vote(const EmbeddingVector& doc_embedding,
                           const std::vector<ClassDefinition>& defs);

// Template file format: front-matter lines "name:" and "answer_marker:",
// then system text and user template separated by a literal "---" line.
PromptTemplate load_prompt_template(const std::string& path);
void validate_template(const PromptTemplate& tmpl);

// Substitutes {class_list} (and {class_definitions} for plus) with the
// manifest's classes ordered by label id.
RenderedPrompt render_prompt(const PromptTemplate& tmpl, const DatasetManifest& manifest);

// Extracts the predicted class id from generative output. With the marker
// present the text after its last occurrence must name a class; without it
// the last class mention anywhere in the text wins. Matching is
// case-insensitive on punctuation-stripped tokens, and an id match outranks
// a display-name match at the same position. Throws Unparseable when no
// class is named.
std::string parse_vlm_output(const std::string& raw, const std::vector<ClassLabel>& classes,
                             const std::string& marker);

// One generative prediction; raw output is retained verbatim and unparseable
// outputs are recorded under kUnparsedLabel with the excluded flag instead of
// being dropped.
Prediction classify_generative(const DocumentRecord& record, const PromptTemplate& tmpl,
                               const RenderedPrompt& prompt,
                               const std::vector<ClassLabel>& classes,
                               ChatProvider& provider);

}  // namespace docclass

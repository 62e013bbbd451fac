#include "docclass/classify.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docclass/digest.hpp"
#include "docclass/errors.hpp"

namespace docclass {

std::string to_string(Method m) {
  switch (m) {
    case Method::embed_vote: return "embed_vote";
    case Method::vlm_base: return "vlm_base";
    case Method::vlm_plus: return "vlm_plus";
  }
  return "embed_vote";
}

Method parse_method(const std::string& s) {
  if (s == "embed_vote") return Method::embed_vote;
  if (s == "vlm_base") return Method::vlm_base;
  if (s == "vlm_plus") return Method::vlm_plus;
  throw Error(Errc::config_error, "unknown method \"" + s + "\"");
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& key, EmbeddingVector value) {
  std::lock_guard lock(mutex_);
  entries_[key] = std::move(value);
}

std::string EmbeddingCache::key_for(const std::string& provider_id, const std::string& text) {
  return provider_id + ":" + sha256_hex(text);
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void EmbeddingCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  nlohmann::json j;
  in >> j;
  std::lock_guard lock(mutex_);
  for (auto& [key, value] : j.items())
    entries_[key] = value.get<EmbeddingVector>();
}

void EmbeddingCache::save(const std::string& path) const {
  nlohmann::json j = nlohmann::json::object();
  {
    std::lock_guard lock(mutex_);
    for (const auto& [key, value] : entries_) j[key] = value;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write cache " + path);
  out << j.dump(2) << "\n";
}

std::vector<ClassDefinition> embed_class_definitions(std::vector<ClassDefinition> defs,
                                                     EmbeddingProvider& provider,
                                                     EmbeddingCache& cache) {
  if (defs.empty())
    throw Error(Errc::empty_class_set, "no class definitions to embed");
  std::size_t dim = 0;
  for (auto& def : defs) {
    if (def.definition_text.empty())
      throw Error(Errc::invalid_request, "empty definition text", def.label);
    std::string key = EmbeddingCache::key_for(provider.config().provider_id,
                                              def.definition_text);
    auto cached = cache.get(key);
    if (cached) {
      def.embedding = std::move(*cached);
    } else {
      try {
        def.embedding = provider.embed_text(def.definition_text);
      } catch (const Error& e) {
        if (e.code() == Errc::provider_error)
          throw Error(Errc::provider_error, e.message(), def.label);
        throw;
      }
      cache.put(key, *def.embedding);
    }
    if (dim == 0)
      dim = def.embedding->size();
    else if (def.embedding->size() != dim)
      throw Error(Errc::dimension_mismatch,
                  "definition embedding dim " + std::to_string(def.embedding->size()) +
                      " != " + std::to_string(dim),
                  def.label);
  }
  return defs;
}

Prediction similarity_vote(const EmbeddingVector& doc_embedding,
                           const std::vector<ClassDefinition>& defs) {
  if (defs.empty()) throw Error(Errc::empty_class_set, "no class definitions");

  std::vector<const ClassDefinition*> ordered;
  ordered.reserve(defs.size());
  for (const auto& d : defs) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const ClassDefinition* a, const ClassDefinition* b) {
              return a->label < b->label;
            });

  Prediction p;
  bool first = true;
  double best = 0.0;
  for (const ClassDefinition* def : ordered) {
    if (!def->embedding)
      throw Error(Errc::invalid_request, "definition embedding not populated", def->label);
    double sim = cosine_similarity(doc_embedding, *def->embedding);
    p.scores[def->label] = sim;
    if (first || sim > best) {
      best = sim;
      p.predicted = def->label;
      p.tie_broken = false;
      first = false;
    } else if (sim == best) {
      // keep the earlier (lexicographically smaller) label
      p.tie_broken = true;
    }
  }
  p.method = Method::embed_vote;
  return p;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

PromptTemplate load_prompt_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "template not found: " + path);

  PromptTemplate tmpl;
  std::string line;
  int section = 0;  // 0 = front matter, 1 = system, 2 = user
  std::string system_text, user_text;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "---") {
      ++section;
      if (section > 2)
        throw Error(Errc::malformed_manifest, "too many --- separators in " + path);
      continue;
    }
    if (section == 0) {
      if (trim(line).empty()) continue;
      auto colon = line.find(':');
      if (colon == std::string::npos)
        throw Error(Errc::malformed_manifest, "bad front-matter line \"" + line + "\"");
      std::string key = trim(line.substr(0, colon));
      std::string value = trim(line.substr(colon + 1));
      if (key == "name")
        tmpl.name = value;
      else if (key == "answer_marker")
        tmpl.answer_marker = value;
      else
        throw Error(Errc::malformed_manifest, "unknown front-matter key \"" + key + "\"");
    } else if (section == 1) {
      system_text += line + "\n";
    } else {
      user_text += line + "\n";
    }
  }
  tmpl.system_text = trim(system_text);
  tmpl.user_template = trim(user_text);
  validate_template(tmpl);
  return tmpl;
}

void validate_template(const PromptTemplate& tmpl) {
  if (tmpl.name != "base" && tmpl.name != "plus")
    throw Error(Errc::config_error, "template name must be base or plus, got \"" +
                                        tmpl.name + "\"");
  if (tmpl.user_template.find("{class_list}") == std::string::npos)
    throw Error(Errc::missing_placeholder, "user template lacks {class_list}",
                tmpl.name);
  if (tmpl.name == "plus" &&
      tmpl.user_template.find("{class_definitions}") == std::string::npos)
    throw Error(Errc::missing_placeholder, "plus template lacks {class_definitions}",
                tmpl.name);
}

namespace {

std::string replace_all(std::string text, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const DatasetManifest& manifest) {
  validate_template(tmpl);

  std::vector<const ClassLabel*> ordered;
  for (const auto& c : manifest.classes) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const ClassLabel* a, const ClassLabel* b) { return a->id < b->id; });

  std::string class_list;
  std::string class_definitions;
  for (const ClassLabel* c : ordered) {
    class_list += "- " + c->id + ": " + c->display_name + "\n";
    auto it = manifest.definitions.find(c->id);
    std::string definition = it != manifest.definitions.end() ? it->second : c->display_name;
    class_definitions += c->id + " (" + c->display_name + "): " + definition + "\n\n";
  }
  class_list = trim(class_list);
  class_definitions = trim(class_definitions);

  RenderedPrompt out;
  out.system_text = tmpl.system_text;
  out.user_text = replace_all(tmpl.user_template, "{class_list}", class_list);
  out.user_text = replace_all(out.user_text, "{class_definitions}", class_definitions);
  return out;
}

namespace {

// lowercase tokens with punctuation treated as separators
std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct Mention {
  std::size_t end = 0;   // index of the mention's last token
  bool is_id = false;
  std::size_t length = 0;
  std::string label;
};

// Scans for the last occurrence of candidate token sequences in `tokens`.
std::optional<Mention> best_mention(const std::vector<std::string>& tokens,
                                    const std::vector<ClassLabel>& classes) {
  std::optional<Mention> best;
  auto consider = [&](const std::vector<std::string>& seq, bool is_id,
                      const std::string& label) {
    if (seq.empty() || seq.size() > tokens.size()) return;
    for (std::size_t start = 0; start + seq.size() <= tokens.size(); ++start) {
      bool match = true;
      for (std::size_t k = 0; k < seq.size(); ++k) {
        if (tokens[start + k] != seq[k]) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      Mention m{start + seq.size() - 1, is_id, seq.size(), label};
      if (!best || m.end > best->end ||
          (m.end == best->end && m.is_id && !best->is_id) ||
          (m.end == best->end && m.is_id == best->is_id && m.length > best->length) ||
          (m.end == best->end && m.is_id == best->is_id && m.length == best->length &&
           m.label < best->label)) {
        best = m;
      }
    }
  };

  for (const auto& c : classes) {
    consider(tokenize(c.id), true, c.id);
    consider(tokenize(c.display_name), false, c.id);
  }
  return best;
}

std::size_t find_last_case_insensitive(const std::string& haystack,
                                       const std::string& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::string::npos;
  auto lower = [](const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  std::string h = lower(haystack);
  std::string n = lower(needle);
  return h.rfind(n);
}

}  // namespace

std::string parse_vlm_output(const std::string& raw, const std::vector<ClassLabel>& classes,
                             const std::string& marker) {
  if (classes.empty()) throw Error(Errc::empty_class_set, "no classes to match against");

  std::string scope = raw;
  bool marked = false;
  if (!marker.empty()) {
    std::size_t pos = find_last_case_insensitive(raw, marker);
    if (pos != std::string::npos) {
      scope = raw.substr(pos + marker.size());
      marked = true;
    }
  }

  auto mention = best_mention(tokenize(scope), classes);
  if (!mention)
    throw Error(Errc::unparseable,
                marked ? "no class named after the answer marker"
                       : "output names no class");
  return mention->label;
}

Prediction classify_generative(const DocumentRecord& record, const PromptTemplate& tmpl,
                               const RenderedPrompt& prompt,
                               const std::vector<ClassLabel>& classes,
                               ChatProvider& provider) {
  if (!record.page)
    throw Error(Errc::invalid_request, "document page not rasterized", record.doc_id);

  Prediction p;
  p.doc_id = record.doc_id;
  p.method = tmpl.name == "plus" ? Method::vlm_plus : Method::vlm_base;

  try {
    p.raw_output = provider.complete_vision_prompt(prompt.system_text, prompt.user_text,
                                                   *record.page);
  } catch (const Error& e) {
    if (e.code() == Errc::provider_error || e.code() == Errc::content_filtered)
      throw Error(e.code(), e.message(), record.doc_id);
    throw;
  }

  try {
    p.predicted = parse_vlm_output(p.raw_output, classes, tmpl.answer_marker);
  } catch (const Error& e) {
    if (e.code() != Errc::unparseable) throw;
    p.predicted = kUnparsedLabel;
    p.excluded = true;
  }
  return p;
}

}  // namespace docclass

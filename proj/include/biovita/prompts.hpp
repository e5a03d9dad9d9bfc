#pragma once

// Taxonomy-aware text prompts: five templates rendered from a TaxonRecord,
// seeded template sampling for training, and a lexicon tokenizer built over
// the registry's names.

#include <array>
#include <cctype>
#include <string>
#include <unordered_map>
#include <vector>

#include "biovita/common.hpp"
#include "biovita/taxonomy.hpp"

namespace biovita {

enum class PromptTemplate { Com = 0, Sci = 1, Tax = 2, SciCom = 3, TaxCom = 4 };

inline constexpr int kNumPromptTemplates = 5;

inline constexpr std::array<std::string_view, kNumPromptTemplates> kPromptTemplateNames = {
    "com", "sci", "tax", "sci_com", "tax_com"};

struct Prompt {
  std::string text;
  std::string source_species;
  PromptTemplate tmpl;
};

inline Prompt render(const TaxonRecord& rec, PromptTemplate tmpl) {
  std::string sci = rec.genus_name + " " + rec.species_epithet;
  std::string tax = rec.class_name + " " + rec.order_name + ", " + rec.family_name + " " +
                    rec.genus_name + ", " + sci;
  std::string text;
  switch (tmpl) {
    case PromptTemplate::Com: text = rec.common_name; break;
    case PromptTemplate::Sci: text = sci; break;
    case PromptTemplate::Tax: text = tax; break;
    case PromptTemplate::SciCom: text = sci + " with a common name " + rec.common_name; break;
    case PromptTemplate::TaxCom: text = tax + ", with a common name " + rec.common_name; break;
  }
  return Prompt{std::move(text), rec.species_id, tmpl};
}

// Uniform over the five templates by default; weights are configurable so a
// degenerate single-template stream is expressible.
class TemplateSampler {
 public:
  TemplateSampler() { weights_.fill(1.0); }

  explicit TemplateSampler(const std::array<double, kNumPromptTemplates>& weights)
      : weights_(weights) {
    double total = 0.0;
    for (double w : weights_) {
      if (w < 0.0) throw ValidationError("template weight must be >= 0");
      total += w;
    }
    if (total <= 0.0) throw ValidationError("template weights sum to zero");
  }

  PromptTemplate sample(Rng& rng) const {
    double total = 0.0;
    for (double w : weights_) total += w;
    double u = rng.uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < kNumPromptTemplates; ++i) {
      acc += weights_[size_t(i)];
      if (u < acc) return PromptTemplate(i);
    }
    return PromptTemplate(kNumPromptTemplates - 1);
  }

 private:
  std::array<double, kNumPromptTemplates> weights_;
};

inline PromptTemplate sample_template(Rng& rng) { return TemplateSampler{}.sample(rng); }

// ---------------------------------------------------------------------------
// Vocabulary: every word that any of the five templates can produce for any
// record in the registry, lowercase, split on whitespace and commas. Id 0 is
// the reserved unknown token.
// ---------------------------------------------------------------------------
class Vocabulary {
 public:
  static constexpr int kUnkId = 0;

  Vocabulary() = default;

  static std::vector<std::string> split_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
      if (c == ' ' || c == '\t' || c == '\n' || c == ',') {
        if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      } else {
        cur += char(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  static Vocabulary build(const Registry& reg) {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> seen;
    for (size_t i = 0; i < reg.size(); ++i) {
      for (int t = 0; t < kNumPromptTemplates; ++t) {
        Prompt p = render(reg.record(i), PromptTemplate(t));
        for (auto& tok : split_tokens(p.text)) {
          if (seen.emplace(tok, 1).second) tokens.push_back(tok);
        }
      }
    }
    std::sort(tokens.begin(), tokens.end());
    return Vocabulary(std::move(tokens));
  }

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = int(i) + 1;
  }

  // Token ids including the unknown slot; embedding tables size off this.
  size_t size_with_unk() const { return tokens_.size() + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnkId : it->second;
  }

  std::vector<int> tokenize_text(std::string_view text) const {
    std::vector<int> ids;
    for (auto& tok : split_tokens(text)) ids.push_back(id_of(tok));
    if (ids.empty()) ids.push_back(kUnkId);  // never empty for non-empty prompts
    return ids;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

inline std::vector<int> tokenize(const Prompt& p, const Vocabulary& vocab) {
  return vocab.tokenize_text(p.text);
}

}  // namespace biovita

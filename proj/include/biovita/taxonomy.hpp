#pragma once

// Taxonomic hierarchy, ecological trait schema, species registry, and the
// seen/unseen partition. The registry is immutable after construction;
// split_seen_unseen returns a new one.

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "biovita/common.hpp"

namespace biovita {

enum class Rank { Class = 0, Order = 1, Family = 2, Genus = 3, Species = 4 };

inline constexpr std::array<std::string_view, 5> kRankNames = {
    "class", "order", "family", "genus", "species"};

inline std::string_view rank_name(Rank r) { return kRankNames[size_t(r)]; }

// ---------------------------------------------------------------------------
// Trait schema: 34 booleans in 9 categories. Exclusive categories hold
// exactly one active trait per species.
// ---------------------------------------------------------------------------
inline constexpr int kNumTraits = 34;
inline constexpr int kNumTraitCategories = 9;

struct TraitCategory {
  std::string_view name;
  int offset;
  int count;
  bool exclusive;
};

inline constexpr std::array<TraitCategory, kNumTraitCategories> kTraitCategories = {{
    {"diet_type", 0, 4, true},
    {"activity_pattern", 4, 4, true},
    {"locomotion_posture", 8, 3, true},
    {"lifestyle", 11, 5, false},
    {"trophic_role", 16, 1, false},
    {"habitat", 17, 6, false},
    {"climatic_distribution", 23, 5, false},
    {"social_behavior", 28, 4, true},
    {"migration_status", 32, 2, false},
}};

inline constexpr std::array<std::string_view, kNumTraits> kTraitNames = {
    // diet_type
    "herbivorous", "carnivorous", "omnivorous", "specialized",
    // activity_pattern
    "diurnal", "nocturnal", "crepuscular", "cathemeral",
    // locomotion_posture
    "quadrupedal", "bipedal", "other",
    // lifestyle
    "arboreal", "aquatic", "terrestrial", "fossorial", "aerial",
    // trophic_role
    "predator",
    // habitat
    "forest", "grassland", "desert", "wetland", "mountain", "urban",
    // climatic_distribution
    "tropical", "subtropical", "temperate", "boreal", "polar",
    // social_behavior
    "solitary", "pairing", "grouping", "herding",
    // migration_status
    "migratory", "resident"};

struct TraitVector {
  std::array<bool, kNumTraits> bits{};

  bool get(int i) const { return bits[size_t(i)]; }
  void set(int i, bool v) { bits[size_t(i)] = v; }

  // Throws ValidationError naming the category if an exclusive category does
  // not have exactly one active trait.
  void validate() const {
    for (const auto& cat : kTraitCategories) {
      if (!cat.exclusive) continue;
      int active = 0;
      for (int i = 0; i < cat.count; ++i)
        if (bits[size_t(cat.offset + i)]) ++active;
      if (active != 1) {
        throw ValidationError("trait category '" + std::string(cat.name) +
                              "' must have exactly one active trait, found " +
                              std::to_string(active));
      }
    }
  }
};

struct TaxonRecord {
  std::string species_id;
  std::string class_name;
  std::string order_name;
  std::string family_name;
  std::string genus_name;
  std::string species_epithet;
  std::string common_name;
  TraitVector traits;
};

inline std::string name_at(const TaxonRecord& rec, Rank rank) {
  switch (rank) {
    case Rank::Class: return rec.class_name;
    case Rank::Order: return rec.order_name;
    case Rank::Family: return rec.family_name;
    case Rank::Genus: return rec.genus_name;
    case Rank::Species: return rec.genus_name + " " + rec.species_epithet;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------
class Registry {
 public:
  Registry() = default;

  explicit Registry(std::vector<TaxonRecord> records) : records_(std::move(records)) {
    unseen_.assign(records_.size(), 0);
    validate_and_index();
  }

  size_t size() const { return records_.size(); }
  const TaxonRecord& record(size_t i) const { return records_[i]; }
  const std::vector<TaxonRecord>& records() const { return records_; }

  std::optional<uint32_t> find(std::string_view species_id) const {
    auto it = id_index_.find(std::string(species_id));
    if (it == id_index_.end()) return std::nullopt;
    return it->second;
  }

  uint32_t require(std::string_view species_id) const {
    auto ix = find(species_id);
    if (!ix) throw ValidationError("unknown species_id '" + std::string(species_id) + "'");
    return *ix;
  }

  bool is_unseen(uint32_t i) const { return unseen_[i] != 0; }

  std::vector<uint32_t> seen_indices() const {
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < records_.size(); ++i)
      if (!unseen_[i]) out.push_back(i);
    return out;
  }

  std::vector<uint32_t> unseen_indices() const {
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < records_.size(); ++i)
      if (unseen_[i]) out.push_back(i);
    return out;
  }

  size_t unseen_count() const {
    size_t n = 0;
    for (auto f : unseen_) n += f;
    return n;
  }

  // Species indices grouped under one genus / family name.
  const std::vector<uint32_t>& genus_members(const std::string& genus) const {
    static const std::vector<uint32_t> empty;
    auto it = genus_index_.find(genus);
    return it == genus_index_.end() ? empty : it->second;
  }

  const std::vector<uint32_t>& family_members(const std::string& family) const {
    static const std::vector<uint32_t> empty;
    auto it = family_index_.find(family);
    return it == family_index_.end() ? empty : it->second;
  }

  const std::map<std::string, std::vector<uint32_t>>& genus_index() const { return genus_index_; }
  const std::map<std::string, std::vector<uint32_t>>& family_index() const { return family_index_; }

  friend Registry split_seen_unseen(const Registry& reg, double unseen_fraction,
                                    uint64_t seed, const std::vector<double>& weights);

 private:
  void validate_and_index() {
    std::unordered_map<std::string, std::string> genus_to_family;
    std::unordered_map<std::string, std::string> family_to_order;
    std::unordered_map<std::string, std::string> order_to_class;
    std::unordered_map<std::string, uint32_t> binomial_seen;

    for (uint32_t i = 0; i < records_.size(); ++i) {
      const TaxonRecord& r = records_[i];
      if (r.species_id.empty()) throw ValidationError("empty species_id at record " + std::to_string(i));
      if (r.class_name.empty() || r.order_name.empty() || r.family_name.empty() ||
          r.genus_name.empty() || r.species_epithet.empty()) {
        throw ValidationError("record '" + r.species_id + "' has an empty rank name");
      }
      if (!id_index_.emplace(r.species_id, i).second)
        throw ValidationError("duplicate species_id '" + r.species_id + "'");

      std::string binomial = r.genus_name + " " + r.species_epithet;
      if (!binomial_seen.emplace(binomial, i).second)
        throw ValidationError("duplicate (genus, species) pair '" + binomial + "'");

      r.traits.validate();

      // Taxonomic consistency: each name resolves to exactly one parent.
      auto check = [&](std::unordered_map<std::string, std::string>& map,
                       const std::string& child, const std::string& parent,
                       const char* child_rank) {
        auto [it, inserted] = map.emplace(child, parent);
        if (!inserted && it->second != parent) {
          throw ValidationError(std::string(child_rank) + " '" + child +
                                "' maps to both '" + it->second + "' and '" + parent + "'");
        }
      };
      check(genus_to_family, r.genus_name, r.family_name, "genus");
      check(family_to_order, r.family_name, r.order_name, "family");
      check(order_to_class, r.order_name, r.class_name, "order");

      genus_index_[r.genus_name].push_back(i);
      family_index_[r.family_name].push_back(i);
    }
  }

  std::vector<TaxonRecord> records_;
  std::vector<uint8_t> unseen_;
  std::unordered_map<std::string, uint32_t> id_index_;
  std::map<std::string, std::vector<uint32_t>> genus_index_;
  std::map<std::string, std::vector<uint32_t>> family_index_;
};

// ---------------------------------------------------------------------------
// Manifest I/O: UTF-8 JSON lines, one TaxonRecord per line.
// ---------------------------------------------------------------------------
inline TaxonRecord record_from_json(const nlohmann::json& j) {
  TaxonRecord r;
  r.species_id = j.at("species_id").get<std::string>();
  r.class_name = j.at("class").get<std::string>();
  r.order_name = j.at("order").get<std::string>();
  r.family_name = j.at("family").get<std::string>();
  r.genus_name = j.at("genus").get<std::string>();
  r.species_epithet = j.at("species").get<std::string>();
  r.common_name = j.at("common_name").get<std::string>();
  const auto& traits = j.at("traits");
  for (int i = 0; i < kNumTraits; ++i) {
    r.traits.set(i, traits.at(std::string(kTraitNames[size_t(i)])).get<bool>());
  }
  return r;
}

inline nlohmann::json record_to_json(const TaxonRecord& r) {
  nlohmann::json traits;
  for (int i = 0; i < kNumTraits; ++i) traits[std::string(kTraitNames[size_t(i)])] = r.traits.get(i);
  return nlohmann::json{{"species_id", r.species_id}, {"class", r.class_name},
                        {"order", r.order_name},      {"family", r.family_name},
                        {"genus", r.genus_name},      {"species", r.species_epithet},
                        {"common_name", r.common_name}, {"traits", traits}};
}

inline Registry load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  std::vector<TaxonRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      records.push_back(record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("manifest '" + path + "' line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  try {
    return Registry(std::move(records));
  } catch (const ValidationError& e) {
    throw ValidationError("manifest '" + path + "': " + e.what());
  }
}

inline void save_registry(const std::string& path, const Registry& reg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path + "'");
  for (size_t i = 0; i < reg.size(); ++i) {
    out << record_to_json(reg.record(i)).dump() << "\n";
  }
  if (!out) throw IoError("error writing manifest '" + path + "'");
}

// ---------------------------------------------------------------------------
// Seen/unseen partition. ceil(fraction*N) species become unseen, drawn
// uniformly, or weighted by `weights` (e.g. inverse sample counts) when
// provided. Deterministic per seed.
// ---------------------------------------------------------------------------
inline Registry split_seen_unseen(const Registry& reg, double unseen_fraction,
                                  uint64_t seed, const std::vector<double>& weights = {}) {
  if (unseen_fraction < 0.0 || unseen_fraction >= 1.0)
    throw ValidationError("unseen_fraction must be in [0,1)");
  if (reg.size() < 2) throw ValidationError("split requires at least 2 species");
  if (!weights.empty() && weights.size() != reg.size())
    throw ValidationError("weights size does not match registry");

  size_t n = reg.size();
  // Guard against fraction*n landing a hair above an integer.
  auto n_unseen = size_t(std::ceil(unseen_fraction * double(n) - 1e-9));

  Registry out = reg;
  std::fill(out.unseen_.begin(), out.unseen_.end(), 0);
  Rng rng(derive_seed(seed, "taxonomy/split"));

  if (weights.empty()) {
    for (uint32_t ix : rng.sample_without_replacement(uint32_t(n), uint32_t(n_unseen)))
      out.unseen_[ix] = 1;
  } else {
    std::vector<double> w = weights;
    for (size_t k = 0; k < n_unseen; ++k) {
      double total = std::accumulate(w.begin(), w.end(), 0.0);
      if (total <= 0.0) throw ValidationError("weights sum to zero before split completed");
      double u = rng.uniform() * total;
      size_t pick = 0;
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        acc += w[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      out.unseen_[pick] = 1;
      w[pick] = 0.0;
    }
  }
  return out;
}

inline bool shared_ancestor(const Registry& reg, std::string_view a, std::string_view b, Rank rank) {
  const TaxonRecord& ra = reg.record(reg.require(a));
  const TaxonRecord& rb = reg.record(reg.require(b));
  return name_at(ra, rank) == name_at(rb, rank);
}

inline bool shared_ancestor_ix(const Registry& reg, uint32_t a, uint32_t b, Rank rank) {
  return name_at(reg.record(a), rank) == name_at(reg.record(b), rank);
}

// ---------------------------------------------------------------------------
// Synthetic registry generator. Builds a consistent taxonomy tree with
// unique names at every rank; used by gen-data and the test suites.
// ---------------------------------------------------------------------------
struct RegistryShape {
  int species_per_genus = 2;
  int genera_per_family = 2;
  int families_per_order = 6;
  int orders_per_class = 4;
};

namespace detail {

inline std::string latinish(Rng& rng, int syllables, bool capitalize) {
  static constexpr std::array<std::string_view, 18> heads = {
      "ba", "co", "du", "fe", "gi", "ha", "ka", "lo", "mi",
      "na", "pe", "qui", "ra", "so", "tu", "ve", "xa", "zo"};
  static constexpr std::array<std::string_view, 12> tails = {
      "rus", "lia", "don", "mus", "tes", "nix", "gon", "pis", "vus", "ra", "lus", "ma"};
  std::string s;
  for (int i = 0; i < syllables; ++i) s += heads[size_t(rng.below(heads.size()))];
  s += tails[size_t(rng.below(tails.size()))];
  if (capitalize && !s.empty()) s[0] = char(std::toupper(s[0]));
  return s;
}

inline std::string unique_name(Rng& rng, int syllables, bool capitalize,
                               std::unordered_map<std::string, int>& used) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::string s = latinish(rng, syllables, capitalize);
    if (used.emplace(s, 1).second) return s;
  }
  // Fall back to an indexed suffix; still unique and deterministic.
  std::string base = latinish(rng, syllables, capitalize);
  int& n = used[base];
  ++n;
  return base + std::to_string(n);
}

}  // namespace detail

inline Registry make_synthetic_registry(size_t n_species, uint64_t seed,
                                        const RegistryShape& shape = {}) {
  if (n_species == 0) throw ValidationError("n_species must be >= 1");
  static constexpr std::array<std::string_view, 5> classes = {
      "Aves", "Mammalia", "Amphibia", "Insecta", "Reptilia"};
  static constexpr std::array<std::array<std::string_view, 4>, 5> nouns = {{
      {"warbler", "thrush", "finch", "wren"},
      {"bat", "shrew", "marmot", "otter"},
      {"frog", "toad", "newt", "treefrog"},
      {"cricket", "katydid", "cicada", "grasshopper"},
      {"gecko", "skink", "iguana", "anole"},
  }};
  static constexpr std::array<std::string_view, 12> adjectives = {
      "azure", "dusky", "spotted", "lesser", "greater", "crested",
      "golden", "rufous", "pale", "banded", "mottled", "whistling"};

  Rng rng(derive_seed(seed, "taxonomy/gen"));
  std::unordered_map<std::string, int> used_order, used_family, used_genus, used_common;

  std::vector<TaxonRecord> records;
  records.reserve(n_species);

  int species_in_genus = 0, genera_in_family = 0, families_in_order = 0, orders_in_class = 0;
  size_t class_ix = 0;
  std::string order, family, genus;
  int epithet_counter = 0;

  auto next_order = [&] {
    order = detail::unique_name(rng, 2, true, used_order) + "iformes";
    families_in_order = 0;
  };
  auto next_family = [&] {
    family = detail::unique_name(rng, 2, true, used_family) + "idae";
    genera_in_family = 0;
  };
  auto next_genus = [&] {
    genus = detail::unique_name(rng, 2, true, used_genus);
    species_in_genus = 0;
    epithet_counter = 0;
  };

  next_order();
  next_family();
  next_genus();

  for (size_t s = 0; s < n_species; ++s) {
    if (species_in_genus >= shape.species_per_genus) {
      ++genera_in_family;
      if (genera_in_family >= shape.genera_per_family) {
        ++families_in_order;
        if (families_in_order >= shape.families_per_order) {
          ++orders_in_class;
          if (orders_in_class >= shape.orders_per_class) {
            class_ix = (class_ix + 1) % classes.size();
            orders_in_class = 0;
          }
          next_order();
        }
        next_family();
      }
      next_genus();
    }
    ++species_in_genus;

    TaxonRecord r;
    r.species_id = "sp" + std::to_string(s);
    r.class_name = std::string(classes[class_ix]);
    r.order_name = order;
    r.family_name = family;
    r.genus_name = genus;
    r.species_epithet = detail::latinish(rng, 1, false) + std::to_string(epithet_counter++);

    const auto& class_nouns = nouns[class_ix];
    std::string common = std::string(adjectives[size_t(rng.below(adjectives.size()))]) + " " +
                         std::string(class_nouns[size_t(rng.below(class_nouns.size()))]);
    int& reuse = used_common[common];
    if (reuse > 0) common += " " + std::to_string(reuse + 1);
    ++reuse;
    r.common_name = common;

    for (const auto& cat : kTraitCategories) {
      if (cat.exclusive) {
        r.traits.set(cat.offset + int(rng.below(uint64_t(cat.count))), true);
      } else {
        for (int i = 0; i < cat.count; ++i) r.traits.set(cat.offset + i, rng.uniform() < 0.4);
      }
    }
    records.push_back(std::move(r));
  }
  return Registry(std::move(records));
}

}  // namespace biovita

#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace eventbench {

inline constexpr std::size_t kNumAttackTypes = 9;

/// The nine incident categories, in canonical ordinal order.
enum class AttackType : std::uint8_t {
  Assassination = 0,
  ArmedAssault,
  BombingExplosion,
  Hijacking,
  HostageBarricade,
  HostageKidnapping,
  FacilityInfrastructureAttack,
  UnarmedAssault,
  Unknown,
};

inline constexpr std::array<AttackType, kNumAttackTypes> kAllAttackTypes = {
    AttackType::Assassination,    AttackType::ArmedAssault,
    AttackType::BombingExplosion, AttackType::Hijacking,
    AttackType::HostageBarricade, AttackType::HostageKidnapping,
    AttackType::FacilityInfrastructureAttack,
    AttackType::UnarmedAssault,   AttackType::Unknown,
};

constexpr std::size_t ordinal(AttackType t) { return static_cast<std::size_t>(t); }
AttackType attack_type_from_ordinal(std::size_t i);

/// Display string as used in the classification prompt, e.g. "Bombing/Explosion".
std::string_view display(AttackType t);
/// Filename-safe identifier, e.g. "bombing_explosion".
std::string_view slug(AttackType t);

/// Set of attack types, bit i = ordinal i.
using AttackSet = std::bitset<kNumAttackTypes>;

/// Probabilities over the nine attack types, indexed by ordinal.
template <typename Scalar>
using CategoryVectorT = Eigen::Matrix<Scalar, static_cast<int>(kNumAttackTypes), 1>;
using CategoryVector = CategoryVectorT<double>;

CategoryVector attack_vector_template();

enum class BinaryLabel : std::uint8_t { NonConflict = 0, Conflict = 1 };

/// Canonical NER category. Builtins come first in a fixed order; extensions
/// loaded from configuration follow in the order they were declared.
struct EntityType {
  std::string name;
  std::size_t ordinal = 0;

  friend bool operator==(const EntityType& a, const EntityType& b) { return a.name == b.name; }
};

inline constexpr std::array<std::string_view, 8> kBuiltinEntityTypes = {
    "Person",           "Organisation",
    "Location",         "Temporal",
    "PerpetratorIndividual", "PerpetratorOrganization",
    "Victim",           "PhysicalTarget",
};

/// Folded lookup key for attack labels: lower-cased, with "/", " or " and "-"
/// collapsed to one separator and surrounding whitespace/quotes removed.
std::string fold_attack_label(std::string_view raw);
/// Folded lookup key for entity labels: lower-cased with spaces, "_" and "-" removed.
std::string fold_entity_label(std::string_view raw);

/// Surface-string to canonical-label tables for both tasks. Immutable once
/// built; concurrent reads are safe.
class Taxonomy {
 public:
  /// Built-in aliases and the eight builtin entity types.
  Taxonomy();

  /// Builtins plus extra entity types and alias overrides from a JSON file of the
  /// form {"attack": {surface: canonical}, "entity": {surface: canonical},
  /// "entity_types": [name, ...]}.
  static Taxonomy from_json_file(const std::filesystem::path& path);
  static Taxonomy from_json_text(std::string_view text);

  /// Copy with additional entity types registered after the existing ones.
  /// Throws FormatError when a name folds onto an alias of a different type.
  Taxonomy with_entity_types(const std::vector<std::string>& names) const;

  AttackType normalize_attack_label(std::string_view raw) const;
  std::optional<AttackType> try_attack_label(std::string_view raw) const;

  EntityType normalize_entity_label(std::string_view raw) const;
  std::optional<EntityType> try_entity_label(std::string_view raw) const;

  const std::vector<std::string>& entity_types() const { return entity_names_; }

  /// Canonicalizes a BIO tag ("B-PER" -> "B-Person"); throws UnknownTag.
  std::string canonical_tag(std::string_view tag) const;

  // Both throw FormatError when the folded surface already maps elsewhere.
  void add_attack_alias(std::string_view surface, AttackType target);
  void add_entity_alias(std::string_view surface, std::string_view canonical);

 private:
  void add_entity_type(std::string_view name);

  std::map<std::string, AttackType, std::less<>> attack_aliases_;
  std::map<std::string, std::size_t, std::less<>> entity_aliases_;
  std::vector<std::string> entity_names_;
};

/// Process-wide default taxonomy (builtins only).
const Taxonomy& default_taxonomy();

}  // namespace eventbench

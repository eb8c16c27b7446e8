#include "eventbench/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "eventbench/error.hpp"

namespace eventbench {
namespace {

struct AttackInfo {
  std::string_view display;
  std::string_view slug;
};

constexpr std::array<AttackInfo, kNumAttackTypes> kAttackInfo = {{
    {"Assassination", "assassination"},
    {"Armed Assault", "armed_assault"},
    {"Bombing/Explosion", "bombing_explosion"},
    {"Hijacking", "hijacking"},
    {"Hostage Taking (Barricade Incident)", "hostage_barricade"},
    {"Hostage Taking (Kidnapping)", "hostage_kidnapping"},
    {"Facility/Infrastructure Attack", "facility_infrastructure_attack"},
    {"Unarmed Assault", "unarmed_assault"},
    {"Unknown", "unknown"},
}};

struct AttackAlias {
  std::string_view surface;
  AttackType target;
};

constexpr AttackAlias kDefaultAttackAliases[] = {
    {"ArmedAssault", AttackType::ArmedAssault},
    {"Armed Attack", AttackType::ArmedAssault},
    {"BombingExplosion", AttackType::BombingExplosion},
    {"Bombing", AttackType::BombingExplosion},
    {"Explosion", AttackType::BombingExplosion},
    {"HostageBarricade", AttackType::HostageBarricade},
    {"Barricade Incident", AttackType::HostageBarricade},
    {"Hostage Taking Barricade Incident", AttackType::HostageBarricade},
    {"Hostage Taking - Barricade Incident", AttackType::HostageBarricade},
    {"HostageKidnapping", AttackType::HostageKidnapping},
    {"Kidnapping", AttackType::HostageKidnapping},
    {"Hostage Taking Kidnapping", AttackType::HostageKidnapping},
    {"Hostage Taking - Kidnapping", AttackType::HostageKidnapping},
    {"FacilityInfrastructureAttack", AttackType::FacilityInfrastructureAttack},
    {"Facility Attack", AttackType::FacilityInfrastructureAttack},
    {"Infrastructure Attack", AttackType::FacilityInfrastructureAttack},
    {"UnarmedAssault", AttackType::UnarmedAssault},
    // Not one of the nine categories but emitted by some classifiers.
    {"Other", AttackType::Unknown},
};

struct EntityAlias {
  std::string_view surface;
  std::string_view canonical;
};

constexpr EntityAlias kDefaultEntityAliases[] = {
    {"PER", "Person"},           {"PERS", "Person"},
    {"ORG", "Organisation"},     {"Organization", "Organisation"},
    {"LOC", "Location"},         {"GPE", "Location"},
    {"DATE", "Temporal"},        {"TIME", "Temporal"},
    {"Perpetrator Org", "PerpetratorOrganization"},
    {"Perpetrator Organisation", "PerpetratorOrganization"},
    {"Perp Ind", "PerpetratorIndividual"},
    {"Target", "PhysicalTarget"},
};

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_trim_char(unsigned char c) {
  return std::isspace(c) || c == '"' || c == '\'' || c == '`' || c == '.' || c == ':' ||
         c == ',' || c == '*';
}

std::string_view trim_label(std::string_view s) {
  while (!s.empty() && is_trim_char(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_trim_char(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Object keys seen twice within the same JSON object are a load-time error;
// nlohmann silently keeps the last one otherwise.
void reject_duplicate_keys(std::string_view text) {
  std::vector<std::set<std::string>> scopes;
  auto cb = [&](int, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
    using E = nlohmann::json::parse_event_t;
    if (event == E::object_start) {
      scopes.emplace_back();
    } else if (event == E::object_end) {
      scopes.pop_back();
    } else if (event == E::key) {
      const auto key = parsed.get<std::string>();
      if (!scopes.back().insert(key).second) {
        throw Error(ErrorCode::FormatError, "duplicate alias key \"" + key + "\"");
      }
    }
    return true;
  };
  try {
    const auto checked = nlohmann::json::parse(text.begin(), text.end(), cb);
    static_cast<void>(checked);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("alias table: ") + e.what());
  }
}

}  // namespace

AttackType attack_type_from_ordinal(std::size_t i) {
  if (i >= kNumAttackTypes) {
    throw Error(ErrorCode::InvalidArgument, "attack ordinal out of range: " + std::to_string(i));
  }
  return static_cast<AttackType>(i);
}

std::string_view display(AttackType t) { return kAttackInfo[ordinal(t)].display; }
std::string_view slug(AttackType t) { return kAttackInfo[ordinal(t)].slug; }

CategoryVector attack_vector_template() { return CategoryVector::Zero(); }

std::string fold_attack_label(std::string_view raw) {
  std::string s = lower_ascii(trim_label(raw));
  std::replace(s.begin(), s.end(), '_', ' ');
  for (auto& c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) c = ' ';
  }
  replace_all(s, " or ", "/");
  std::replace(s.begin(), s.end(), '-', '/');
  // Collapse whitespace and drop it around separators.
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == ' ') {
      if (out.empty() || out.back() == ' ' || out.back() == '/') continue;
      out.push_back(c);
    } else if (c == '/') {
      while (!out.empty() && out.back() == ' ') out.pop_back();
      if (out.empty() || out.back() != '/') out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && (out.back() == ' ' || out.back() == '/')) out.pop_back();
  return out;
}

std::string fold_entity_label(std::string_view raw) {
  std::string out;
  for (unsigned char c : trim_label(raw)) {
    if (std::isspace(c) || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

Taxonomy::Taxonomy() {
  for (AttackType t : kAllAttackTypes) add_attack_alias(display(t), t);
  for (const auto& a : kDefaultAttackAliases) add_attack_alias(a.surface, a.target);
  for (auto name : kBuiltinEntityTypes) add_entity_type(name);
  for (const auto& a : kDefaultEntityAliases) add_entity_alias(a.surface, a.canonical);
}

void Taxonomy::add_attack_alias(std::string_view surface, AttackType target) {
  auto key = fold_attack_label(surface);
  if (key.empty()) throw Error(ErrorCode::FormatError, "empty attack alias");
  auto [it, inserted] = attack_aliases_.emplace(key, target);
  if (!inserted && it->second != target) {
    throw Error(ErrorCode::FormatError,
                "attack alias \"" + std::string(surface) + "\" maps to both \"" +
                    std::string(display(it->second)) + "\" and \"" +
                    std::string(display(target)) + "\"");
  }
}

void Taxonomy::add_entity_type(std::string_view name) {
  auto key = fold_entity_label(name);
  if (key.empty()) throw Error(ErrorCode::FormatError, "empty entity type name");
  if (auto it = entity_aliases_.find(key); it != entity_aliases_.end()) {
    if (entity_names_[it->second] == name) return;
    throw Error(ErrorCode::FormatError, "entity type \"" + std::string(name) +
                                            "\" collides with \"" +
                                            entity_names_[it->second] + "\"");
  }
  entity_aliases_.emplace(std::move(key), entity_names_.size());
  entity_names_.emplace_back(name);
}

void Taxonomy::add_entity_alias(std::string_view surface, std::string_view canonical) {
  auto target = try_entity_label(canonical);
  if (!target || target->name != canonical) {
    throw Error(ErrorCode::UnknownLabel,
                "alias target \"" + std::string(canonical) + "\" is not an entity type");
  }
  auto key = fold_entity_label(surface);
  if (key.empty()) throw Error(ErrorCode::FormatError, "empty entity alias");
  auto [it, inserted] = entity_aliases_.emplace(key, target->ordinal);
  if (!inserted && it->second != target->ordinal) {
    throw Error(ErrorCode::FormatError, "entity alias \"" + std::string(surface) +
                                            "\" maps to both \"" + entity_names_[it->second] +
                                            "\" and \"" + std::string(canonical) + "\"");
  }
}

Taxonomy Taxonomy::with_entity_types(const std::vector<std::string>& names) const {
  Taxonomy copy = *this;
  for (const auto& n : names) copy.add_entity_type(n);
  return copy;
}

Taxonomy Taxonomy::from_json_text(std::string_view text) {
  reject_duplicate_keys(text);
  const auto doc = nlohmann::json::parse(text);
  if (!doc.is_object()) throw Error(ErrorCode::FormatError, "alias table must be an object");

  Taxonomy tax;
  if (auto it = doc.find("entity_types"); it != doc.end()) {
    tax = tax.with_entity_types(it->get<std::vector<std::string>>());
  }
  if (auto it = doc.find("attack"); it != doc.end()) {
    for (const auto& [surface, canonical] : it->items()) {
      const auto target = tax.try_attack_label(canonical.get<std::string>());
      if (!target) {
        throw Error(ErrorCode::UnknownLabel,
                    "alias target \"" + canonical.get<std::string>() + "\" is not an attack type");
      }
      tax.add_attack_alias(surface, *target);
    }
  }
  if (auto it = doc.find("entity"); it != doc.end()) {
    for (const auto& [surface, canonical] : it->items()) {
      const auto target = tax.normalize_entity_label(canonical.get<std::string>());
      tax.add_entity_alias(surface, target.name);
    }
  }
  return tax;
}

Taxonomy Taxonomy::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open alias file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::optional<AttackType> Taxonomy::try_attack_label(std::string_view raw) const {
  auto it = attack_aliases_.find(fold_attack_label(raw));
  if (it == attack_aliases_.end()) return std::nullopt;
  return it->second;
}

AttackType Taxonomy::normalize_attack_label(std::string_view raw) const {
  if (trim_label(raw).empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty attack label");
  }
  if (auto t = try_attack_label(raw)) return *t;
  throw Error(ErrorCode::UnknownLabel, "unknown attack label \"" + std::string(raw) + "\"");
}

std::optional<EntityType> Taxonomy::try_entity_label(std::string_view raw) const {
  auto it = entity_aliases_.find(fold_entity_label(raw));
  if (it == entity_aliases_.end()) return std::nullopt;
  return EntityType{entity_names_[it->second], it->second};
}

EntityType Taxonomy::normalize_entity_label(std::string_view raw) const {
  if (trim_label(raw).empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty entity label");
  }
  if (auto t = try_entity_label(raw)) return *t;
  throw Error(ErrorCode::UnknownLabel, "unknown entity label \"" + std::string(raw) + "\"");
}

std::string Taxonomy::canonical_tag(std::string_view tag) const {
  if (tag == "O") return "O";
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    if (auto t = try_entity_label(tag.substr(2))) {
      return std::string(1, tag[0]) + "-" + t->name;
    }
  }
  throw Error(ErrorCode::UnknownTag, "unknown tag \"" + std::string(tag) + "\"");
}

const Taxonomy& default_taxonomy() {
  static const Taxonomy instance;
  return instance;
}

}  // namespace eventbench

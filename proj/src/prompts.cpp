#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <numeric>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "eventbench/backends.hpp"
#include "eventbench/error.hpp"

namespace eventbench {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kClassificationHeader =
    "Classify each of the following events into up to three of these categories, providing "
    "probabilities for each:\n"
    "Assassination, Armed Assault, Bombing/Explosion, Hijacking,\n"
    "Hostage Taking (Barricade Incident), Hostage Taking (Kidnapping),\n"
    "Facility/Infrastructure Attack, Unarmed Assault, Unknown\n"
    "\n"
    "For each event, return only a JSON object with category names as keys and probabilities "
    "as values.\n"
    "Example format: {\"Armed Assault\": 0.7, \"Bombing/Explosion\": 0.2, \"Unknown\": 0.1}\n"
    "\n"
    "Events:";

constexpr std::size_t kMaxCategoriesPerEvent = 3;

std::string one_line(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

// Numbers, or strings holding a number with an optional trailing '%'.
std::optional<double> numeric_value(const ojson& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) return std::nullopt;
  std::string s = v.get<std::string>();
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  bool percent = false;
  if (!s.empty() && s.back() == '%') {
    percent = true;
    s.pop_back();
  }
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) return std::nullopt;
  while (*end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (*end != '\0') return std::nullopt;
  return percent ? x / 100.0 : x;
}

bool is_category_object(const ojson& v) {
  if (!v.is_object() || v.empty()) return false;
  return std::any_of(v.begin(), v.end(), [](const ojson& x) { return numeric_value(x).has_value(); });
}

// Category objects in reading order; containers of objects (arrays, or objects
// keyed by event number) are flattened one level.
void collect_category_objects(const ojson& v, std::vector<const ojson*>& out) {
  if (is_category_object(v)) {
    out.push_back(&v);
  } else if (v.is_array() || v.is_object()) {
    for (const auto& child : v) {
      if (is_category_object(child)) out.push_back(&child);
    }
  }
}

CategoryVector to_category_vector(const ojson& obj, const Taxonomy& taxonomy,
                                  std::size_t& dropped) {
  CategoryVector v = attack_vector_template();
  for (const auto& [key, value] : obj.items()) {
    const auto x = numeric_value(value);
    if (!x) continue;
    const auto t = taxonomy.try_attack_label(key);
    if (!t) {
      ++dropped;
      spdlog::warn("dropping unmatched category \"{}\" from model output", key);
      continue;
    }
    const double p = std::isnan(*x) ? 0.0 : std::clamp(*x, 0.0, 1.0);
    v[ordinal(*t)] = std::max(v[ordinal(*t)], p);
  }
  std::array<std::size_t, kNumAttackTypes> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  for (std::size_t i = kMaxCategoriesPerEvent; i < order.size(); ++i) v[order[i]] = 0.0;
  return v;
}

bool ieq(char a, char b) {
  return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
}

}  // namespace

std::vector<std::string> extract_json_values(std::string_view text, std::size_t limit) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = text.find_first_of("{[", pos);
    if (start == std::string_view::npos) break;

    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    std::size_t end = std::string_view::npos;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{' || c == '[') {
        stack.push_back(c == '{' ? '}' : ']');
      } else if (c == '}' || c == ']') {
        if (stack.back() != c) break;
        stack.pop_back();
        if (stack.empty()) {
          end = i + 1;
          break;
        }
      }
    }

    if (end != std::string_view::npos) {
      auto candidate = text.substr(start, end - start);
      if (ojson::accept(candidate)) {
        out.emplace_back(candidate);
        if (limit != 0 && out.size() >= limit) break;
        pos = end;
        continue;
      }
    }
    pos = start + 1;
  }
  return out;
}

std::string_view classification_prompt_header() { return kClassificationHeader; }

std::string render_classification_prompt(std::span<const std::string> events,
                                         std::size_t max_batch) {
  if (events.empty()) throw Error(ErrorCode::EmptyBatch, "no events to classify");
  if (max_batch != 0 && events.size() > max_batch) {
    throw Error(ErrorCode::InvalidArgument, "batch of " + std::to_string(events.size()) +
                                                " exceeds batch size " + std::to_string(max_batch));
  }
  std::string prompt(kClassificationHeader);
  for (std::size_t i = 0; i < events.size(); ++i) {
    prompt += '\n';
    prompt += std::to_string(i + 1);
    prompt += ". ";
    prompt += one_line(events[i]);
  }
  return prompt;
}

std::size_t ClassificationParse::failures() const {
  return static_cast<std::size_t>(std::count(parse_failure.begin(), parse_failure.end(), true));
}

ClassificationParse parse_classification_output(std::string_view text, std::size_t expected_n,
                                                const Taxonomy& taxonomy) {
  ClassificationParse out;
  std::vector<ojson> values;
  for (const auto& raw : extract_json_values(text)) values.push_back(ojson::parse(raw));

  std::vector<const ojson*> objects;
  for (const auto& v : values) {
    collect_category_objects(v, objects);
    if (objects.size() >= expected_n) break;
  }
  for (std::size_t i = 0; i < expected_n; ++i) {
    if (i < objects.size()) {
      out.vectors.push_back(to_category_vector(*objects[i], taxonomy, out.dropped_keys));
      out.parse_failure.push_back(false);
    } else {
      out.vectors.push_back(attack_vector_template());
      out.parse_failure.push_back(true);
    }
  }
  return out;
}

std::string render_ner_prompt(std::string_view text, std::span<const std::string> entity_types) {
  if (entity_types.empty()) throw Error(ErrorCode::InvalidTypes, "no entity types given");
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty NER text");
  std::string types;
  for (std::size_t i = 0; i < entity_types.size(); ++i) {
    if (i > 0) types += ", ";
    types += entity_types[i];
  }
  std::string prompt =
      "Extract the named entities mentioned in the text below. Use only these entity types: " +
      types +
      ".\n"
      "Return only a JSON array of objects of the form {\"text\": \"<exact surface string>\", "
      "\"type\": \"<entity type>\"}, in order of appearance. Return [] if there are none.\n"
      "\n"
      "Text:\n";
  prompt += text;
  return prompt;
}

std::vector<ExtractedEntity> parse_ner_output(std::string_view text,
                                              std::span<const std::string> allowed,
                                              const Taxonomy& taxonomy, bool* found_json) {
  std::vector<ExtractedEntity> out;
  if (found_json) *found_json = false;
  for (const auto& raw : extract_json_values(text)) {
    auto v = ojson::parse(raw);
    if (v.is_object() && v.contains("entities")) v = v["entities"];
    if (!v.is_array()) continue;
    if (found_json) *found_json = true;
    for (const auto& item : v) {
      if (!item.is_object() || !item.contains("text") || !item.contains("type") ||
          !item["text"].is_string() || !item["type"].is_string()) {
        continue;
      }
      const auto type = taxonomy.try_entity_label(item["type"].get<std::string>());
      const bool permitted =
          type && (allowed.empty() ||
                   std::find(allowed.begin(), allowed.end(), type->name) != allowed.end());
      if (!permitted) {
        spdlog::warn("dropping entity with type \"{}\"", item["type"].get<std::string>());
        continue;
      }
      auto surface = item["text"].get<std::string>();
      if (surface.empty()) continue;
      out.push_back({std::move(surface), *type});
    }
    break;
  }
  return out;
}

Alignment align_ner_output(std::string_view text, std::span<const Token> tokens,
                           std::span<const ExtractedEntity> entities) {
  Alignment out;
  std::vector<CharSpan> spans;
  for (const auto& e : entities) {
    const auto n = e.surface.size();
    bool placed = false;
    for (std::size_t pos = 0; !placed && n <= text.size() && pos + n <= text.size(); ++pos) {
      if (!std::equal(e.surface.begin(), e.surface.end(), text.begin() + pos, ieq)) continue;
      const bool taken = std::any_of(spans.begin(), spans.end(), [&](const CharSpan& s) {
        return pos < s.end && s.begin < pos + n;
      });
      if (taken) continue;
      spans.push_back({pos, pos + n, e.type});
      placed = true;
    }
    if (!placed) {
      ++out.unmatched;
      spdlog::warn("entity \"{}\" not found in document text, dropped", e.surface);
    }
  }
  out.tags = spans_to_bio(tokens, spans);
  return out;
}

std::string render_binary_prompt(std::string_view text) {
  std::string prompt =
      "Decide whether the following text is about political conflict or violence.\n"
      "Return only a JSON object of the form {\"conflict\": p}, where p is the probability "
      "that the text is conflict-related.\n"
      "\n"
      "Text:\n";
  prompt += one_line(text);
  return prompt;
}

std::optional<double> parse_binary_output(std::string_view text) {
  for (const auto& raw : extract_json_values(text)) {
    const auto v = ojson::parse(raw);
    if (!v.is_object()) continue;
    for (const auto& [key, value] : v.items()) {
      const auto k = fold_entity_label(key);
      if (k != "conflict" && k != "probability" && k != "score") continue;
      if (auto x = numeric_value(value); x && !std::isnan(*x)) return std::clamp(*x, 0.0, 1.0);
    }
  }
  return std::nullopt;
}

}  // namespace eventbench

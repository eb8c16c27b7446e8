#include <algorithm>
#include <tuple>

#include "json.hpp"

#include "eventbench/corpus.hpp"
#include "eventbench/error.hpp"

namespace eventbench {

std::vector<CharSpan> resolve_annotations(std::span<const RawEntityAnnotation> annotations,
                                          double threshold, const Taxonomy& taxonomy) {
  struct Candidate {
    CharSpan span;
    double confidence;
  };
  std::vector<Candidate> survivors;
  for (const auto& a : annotations) {
    if (a.end <= a.begin) {
      throw Error(ErrorCode::InvalidArgument, "annotation on " + a.doc_id + " has begin >= end");
    }
    if (!(a.confidence >= threshold)) continue;
    survivors.push_back({{a.begin, a.end, taxonomy.normalize_entity_label(a.label)}, a.confidence});
  }

  // Total priority order so the result does not depend on input order.
  std::sort(survivors.begin(), survivors.end(), [](const Candidate& a, const Candidate& b) {
    const auto la = a.span.end - a.span.begin;
    const auto lb = b.span.end - b.span.begin;
    return std::make_tuple(-static_cast<long long>(la), -a.confidence, a.span.type.ordinal,
                           a.span.begin) <
           std::make_tuple(-static_cast<long long>(lb), -b.confidence, b.span.type.ordinal,
                           b.span.begin);
  });

  std::vector<CharSpan> kept;
  for (const auto& c : survivors) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const CharSpan& k) {
      return c.span.begin < k.end && k.begin < c.span.end;
    });
    if (!overlaps) kept.push_back(c.span);
  }
  std::sort(kept.begin(), kept.end(),
            [](const CharSpan& a, const CharSpan& b) { return a.begin < b.begin; });
  return kept;
}

std::vector<RawEntityAnnotation> parse_annotations(std::string_view content) {
  std::vector<RawEntityAnnotation> out;
  std::size_t row = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = content.substr(start, nl - start);
    start = nl + 1;
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      RawEntityAnnotation a;
      a.doc_id = obj.at("doc_id").get<std::string>();
      a.begin = obj.at("begin").get<std::size_t>();
      a.end = obj.at("end").get<std::size_t>();
      a.label = obj.at("label").get<std::string>();
      a.confidence = obj.value("confidence", 1.0);
      if (a.end <= a.begin || a.confidence < 0.0 || a.confidence > 1.0) {
        throw Error(ErrorCode::FormatError, "row " + std::to_string(row) +
                                                ": need begin < end and confidence in [0,1]");
      }
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, "row " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RawEntityAnnotation> load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_file(path));
}

}  // namespace eventbench

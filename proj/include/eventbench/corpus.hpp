#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eventbench/date.hpp"
#include "eventbench/taxonomy.hpp"

namespace eventbench {

/// A token and its half-open byte extent in the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::optional<Date> date;
  std::optional<BinaryLabel> binary_label;
  std::optional<AttackSet> attack_labels;
  /// Only populated for NER documents built from tagged sentences.
  std::vector<Token> tokens;
};

enum class DocumentFormat { Jsonl, Csv };

/// Loads labeled documents. JSONL fields: id, text, date, label (0/1), labels
/// (array of attack-type names). CSV: header row naming the same columns, with
/// multiple labels separated by ';'.
std::vector<Document> load_documents(const std::filesystem::path& path, DocumentFormat format,
                                     const Taxonomy& taxonomy = default_taxonomy());
std::vector<Document> parse_documents(std::string_view content, DocumentFormat format,
                                      const Taxonomy& taxonomy = default_taxonomy());

// ---------------------------------------------------------------------------
// CoNLL 2003 and BIO

struct TagSequence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

/// Sentences from CoNLL 2003 text. The tag is the last column; tags are
/// canonicalized through the taxonomy ("B-PER" becomes "B-Person").
std::vector<TagSequence> parse_conll(std::string_view text,
                                     const Taxonomy& taxonomy = default_taxonomy());
std::string write_conll(std::span<const TagSequence> sequences);

/// Token-anchored entity, half-open over token indices.
struct EntitySpan {
  std::string doc_id;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string type;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

struct BioDecode {
  std::vector<EntitySpan> spans;
  std::size_t repairs = 0;
};

/// Maximal B/I runs become spans. A dangling I-X starts a new span, and so does
/// an I-Y following an X-typed tag.
BioDecode decode_bio(std::span<const std::string> tags, std::string_view doc_id = {});
std::vector<EntitySpan> bio_to_spans(const TagSequence& seq, std::string_view doc_id = {});

/// Character-anchored entity (half-open byte offsets).
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  EntityType type;

  friend bool operator==(const CharSpan& a, const CharSpan& b) {
    return a.begin == b.begin && a.end == b.end && a.type == b.type;
  }
};

/// Tags tokens covered by the spans. A token partially covered by a span is
/// claimed iff the span covers at least half of its characters.
TagSequence spans_to_bio(std::span<const Token> tokens, std::span<const CharSpan> spans);

// ---------------------------------------------------------------------------
// Raw annotation preprocessing

struct RawEntityAnnotation {
  std::string doc_id;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string label;
  double confidence = 1.0;
};

inline constexpr double kDefaultConfidenceThreshold = 0.5;

/// Drops annotations below the confidence threshold, then resolves overlaps by
/// keeping the longest span. Ties go to higher confidence, then lower entity
/// ordinal, then earlier begin. Output is non-overlapping and sorted by begin.
std::vector<CharSpan> resolve_annotations(std::span<const RawEntityAnnotation> annotations,
                                          double threshold = kDefaultConfidenceThreshold,
                                          const Taxonomy& taxonomy = default_taxonomy());

/// Reads {doc_id, begin, end, label, confidence} JSONL records.
std::vector<RawEntityAnnotation> parse_annotations(std::string_view content);
std::vector<RawEntityAnnotation> load_annotations(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tokenization

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<Token> tokenize(std::string_view text) const = 0;
};

/// Splits on whitespace; every ASCII punctuation character is its own token.
/// Bytes >= 0x80 are treated as word characters, so UTF-8 words stay intact.
class WhitespacePunctTokenizer final : public Tokenizer {
 public:
  std::vector<Token> tokenize(std::string_view text) const override;
};

/// NER document whose text is the tokens joined by single spaces.
Document document_from_sequence(std::string id, const TagSequence& seq);

// ---------------------------------------------------------------------------
// Temporal split

struct SplitSpec {
  int cutoff_year = 2016;
  int end_year = 2020;
};

struct SplitResult {
  std::vector<Document> train;
  std::vector<Document> test;
  std::size_t dateless = 0;
  std::size_t out_of_window = 0;
};

/// train: year <= cutoff; test: cutoff < year <= end_year. Dateless documents
/// are excluded and counted.
SplitResult temporal_split(std::span<const Document> docs, const SplitSpec& spec);

std::string read_file(const std::filesystem::path& path);

}  // namespace eventbench

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "eventbench/corpus.hpp"
#include "eventbench/error.hpp"

namespace eventbench {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) cols.push_back(line.substr(start, i - start));
  }
  return cols;
}

}  // namespace

std::vector<TagSequence> parse_conll(std::string_view text, const Taxonomy& taxonomy) {
  std::vector<TagSequence> sentences;
  TagSequence current;
  auto flush = [&] {
    if (!current.tokens.empty()) sentences.push_back(std::move(current));
    current = {};
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto cols = split_ws(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols.front() == "-DOCSTART-") {
      flush();
      continue;
    }
    if (cols.size() < 2) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": expected token and tag columns");
    }
    std::string tag;
    try {
      tag = taxonomy.canonical_tag(cols.back());
    } catch (const Error& e) {
      throw Error(ErrorCode::UnknownTag, "line " + std::to_string(line_no) + ": tag \"" +
                                             std::string(cols.back()) + "\"");
    }
    current.tokens.emplace_back(cols.front());
    current.tags.push_back(std::move(tag));
  }
  flush();
  return sentences;
}

std::string write_conll(std::span<const TagSequence> sequences) {
  std::string out;
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      out += seq.tokens[i];
      out += ' ';
      out += seq.tags[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

BioDecode decode_bio(std::span<const std::string> tags, std::string_view doc_id) {
  BioDecode out;
  std::optional<EntitySpan> open;
  auto close = [&](std::size_t end) {
    if (open) {
      open->end = end;
      out.spans.push_back(std::move(*open));
      open.reset();
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    if (tag == "O" || tag.size() < 3 || tag[1] != '-') {
      close(i);
      continue;
    }
    const char prefix = tag[0];
    std::string type = tag.substr(2);
    if (prefix == 'I' && open && open->type == type) continue;
    if (prefix == 'I') ++out.repairs;
    close(i);
    open = EntitySpan{std::string(doc_id), i, i + 1, std::move(type)};
  }
  close(tags.size());
  if (out.repairs > 0) {
    spdlog::debug("bio decode{}: repaired {} dangling I- tag(s)",
                  doc_id.empty() ? "" : " " + std::string(doc_id), out.repairs);
  }
  return out;
}

std::vector<EntitySpan> bio_to_spans(const TagSequence& seq, std::string_view doc_id) {
  return decode_bio(seq.tags, doc_id).spans;
}

TagSequence spans_to_bio(std::span<const Token> tokens, std::span<const CharSpan> spans) {
  TagSequence out;
  out.tokens.reserve(tokens.size());
  for (const auto& t : tokens) out.tokens.push_back(t.text);
  out.tags.assign(tokens.size(), "O");

  std::vector<const CharSpan*> ordered;
  for (const auto& s : spans) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CharSpan* a, const CharSpan* b) { return a->begin < b->begin; });

  std::vector<bool> claimed(tokens.size(), false);
  for (const CharSpan* span : ordered) {
    bool first = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto& tok = tokens[i];
      const std::size_t lo = std::max(tok.begin, span->begin);
      const std::size_t hi = std::min(tok.end, span->end);
      if (hi <= lo || claimed[i]) continue;
      const std::size_t width = tok.end - tok.begin;
      if (2 * (hi - lo) < width) continue;
      claimed[i] = true;
      out.tags[i] = (first ? "B-" : "I-") + span->type.name;
      first = false;
    }
    if (first) {
      spdlog::warn("span [{}, {}) {} covers no token, dropped", span->begin, span->end,
                   span->type.name);
    }
  }
  return out;
}

std::vector<Token> WhitespacePunctTokenizer::tokenize(std::string_view text) const {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (c < 0x80 && std::ispunct(c)) {
      tokens.push_back({std::string(1, text[i]), i, i + 1});
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size()) {
        const auto d = static_cast<unsigned char>(text[i]);
        if (std::isspace(d) || (d < 0x80 && std::ispunct(d))) break;
        ++i;
      }
      tokens.push_back({std::string(text.substr(start, i - start)), start, i});
    }
  }
  return tokens;
}

Document document_from_sequence(std::string id, const TagSequence& seq) {
  Document doc;
  doc.id = std::move(id);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i > 0) doc.text.push_back(' ');
    const std::size_t begin = doc.text.size();
    doc.text += seq.tokens[i];
    doc.tokens.push_back({seq.tokens[i], begin, doc.text.size()});
  }
  return doc;
}

}  // namespace eventbench

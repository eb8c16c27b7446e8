#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "eventbench/corpus.hpp"
#include "eventbench/error.hpp"

namespace eventbench {
namespace {

using nlohmann::json;

std::string row_ref(std::size_t row) { return "row " + std::to_string(row); }

// RFC 4180 records: quoted fields may contain separators, doubled quotes and
// newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          throw Error(ErrorCode::FormatError, "stray quote on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::FormatError, "unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

AttackSet parse_label_list(const std::vector<std::string>& labels, const Taxonomy& taxonomy,
                           std::size_t row) {
  AttackSet set;
  for (const auto& raw : labels) {
    const auto t = taxonomy.try_attack_label(raw);
    if (!t) {
      throw Error(ErrorCode::FormatError,
                  row_ref(row) + ": unknown attack label \"" + raw + "\"");
    }
    set.set(ordinal(*t));
  }
  return set;
}

std::optional<BinaryLabel> parse_binary(const json& v, std::size_t row) {
  if (v.is_null()) return std::nullopt;
  int value = -1;
  if (v.is_number_integer() || v.is_boolean()) {
    value = v.is_boolean() ? int(v.get<bool>()) : v.get<int>();
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.empty()) return std::nullopt;
    if (s == "0") value = 0;
    if (s == "1") value = 1;
  }
  if (value != 0 && value != 1) {
    throw Error(ErrorCode::FormatError, row_ref(row) + ": label must be 0 or 1");
  }
  return static_cast<BinaryLabel>(value);
}

std::optional<Date> parse_date_field(const json& v, const std::string& id) {
  std::optional<Date> d;
  if (v.is_null()) return d;
  if (v.is_number_integer()) {
    d = parse_date(std::to_string(v.get<int>()));
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.empty()) return d;
    d = parse_date(s);
  }
  if (!d) spdlog::warn("document {}: unparseable date {}, treating as absent", id, v.dump());
  return d;
}

std::string id_string(const json& v, std::size_t row) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(ErrorCode::FormatError, row_ref(row) + ": field \"id\" must be a string");
}

Document document_from_json(const json& obj, const Taxonomy& taxonomy, std::size_t row) {
  if (!obj.is_object()) throw Error(ErrorCode::FormatError, row_ref(row) + ": not an object");
  const auto id_it = obj.find("id");
  const auto text_it = obj.find("text");
  if (id_it == obj.end() || text_it == obj.end() || !text_it->is_string()) {
    throw Error(ErrorCode::FormatError, row_ref(row) + ": missing \"id\" or \"text\"");
  }
  Document doc;
  doc.id = id_string(*id_it, row);
  if (doc.id.empty()) throw Error(ErrorCode::FormatError, row_ref(row) + ": empty id");
  doc.text = text_it->get<std::string>();
  if (auto it = obj.find("date"); it != obj.end()) doc.date = parse_date_field(*it, doc.id);
  if (auto it = obj.find("label"); it != obj.end()) doc.binary_label = parse_binary(*it, row);
  if (auto it = obj.find("labels"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw Error(ErrorCode::FormatError, row_ref(row) + ": \"labels\" must be an array");
    }
    std::vector<std::string> labels;
    for (const auto& l : *it) {
      if (!l.is_string()) {
        throw Error(ErrorCode::FormatError, row_ref(row) + ": labels must be strings");
      }
      labels.push_back(l.get<std::string>());
    }
    doc.attack_labels = parse_label_list(labels, taxonomy, row);
  }
  return doc;
}

std::vector<Document> parse_jsonl(std::string_view content, const Taxonomy& taxonomy) {
  std::vector<Document> docs;
  std::size_t row = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    auto line = content.substr(start, nl - start);
    start = nl + 1;
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, row_ref(row) + ": " + e.what());
    }
    docs.push_back(document_from_json(obj, taxonomy, row));
  }
  return docs;
}

std::vector<std::string> split_labels(const std::string& cell) {
  std::vector<std::string> out;
  std::stringstream ss(cell);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.find_first_not_of(" \t") != std::string::npos) out.push_back(part);
  }
  return out;
}

std::vector<Document> parse_csv_documents(std::string_view content, const Taxonomy& taxonomy) {
  const auto rows = parse_csv(content);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("id");
  const auto text_col = column("text");
  if (!id_col || !text_col) {
    throw Error(ErrorCode::FormatError, "CSV header must contain \"id\" and \"text\"");
  }
  const auto date_col = column("date");
  const auto label_col = column("label");
  const auto labels_col = column("labels");

  std::vector<Document> docs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::size_t row = r + 1;
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::FormatError, row_ref(row) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(cells.size()));
    }
    json obj = {{"id", cells[*id_col]}, {"text", cells[*text_col]}};
    if (date_col) obj["date"] = cells[*date_col];
    if (label_col) obj["label"] = cells[*label_col];
    Document doc = document_from_json(obj, taxonomy, row);
    if (labels_col) {
      doc.attack_labels = parse_label_list(split_labels(cells[*labels_col]), taxonomy, row);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Document> parse_documents(std::string_view content, DocumentFormat format,
                                      const Taxonomy& taxonomy) {
  auto docs = format == DocumentFormat::Jsonl ? parse_jsonl(content, taxonomy)
                                              : parse_csv_documents(content, taxonomy);
  std::unordered_set<std::string> seen;
  for (const auto& d : docs) {
    if (!seen.insert(d.id).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate document id \"" + d.id + "\"");
    }
  }
  return docs;
}

std::vector<Document> load_documents(const std::filesystem::path& path, DocumentFormat format,
                                     const Taxonomy& taxonomy) {
  return parse_documents(read_file(path), format, taxonomy);
}

SplitResult temporal_split(std::span<const Document> docs, const SplitSpec& spec) {
  if (spec.end_year < spec.cutoff_year) {
    throw Error(ErrorCode::InvalidArgument, "split end year precedes cutoff year");
  }
  SplitResult out;
  for (const auto& d : docs) {
    if (!d.date) {
      ++out.dateless;
    } else if (d.date->year <= spec.cutoff_year) {
      out.train.push_back(d);
    } else if (d.date->year <= spec.end_year) {
      out.test.push_back(d);
    } else {
      ++out.out_of_window;
    }
  }
  if (out.dateless > 0) {
    spdlog::warn("temporal split: {} dateless document(s) excluded", out.dateless);
  }
  return out;
}

}  // namespace eventbench

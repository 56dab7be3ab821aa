/* Copyright 2026 The Summit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/


#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "summit/error.hpp"
#include "summit/ingestion.hpp"

// Masking replaces code, links and markdown syntax with placeholder tokens of
// the form ⟦K<n>⟧ (K is C for code, L for links, M for other markup; n counts
// per kind within one comment). Any literal ⟦ or ⟧ in the source is itself
// masked as markup, so the token syntax never occurs in masked prose and
// restoration is exact.

namespace summit {

inline constexpr std::string_view kTokenOpen = "\xE2\x9F\xA6";   // ⟦
inline constexpr std::string_view kTokenClose = "\xE2\x9F\xA7";  // ⟧

enum class PlaceholderKind : char { kCode = 'C', kLink = 'L', kMarkup = 'M' };

struct Placeholder {
  std::string token;
  std::string original;

  bool operator==(const Placeholder&) const = default;
};

/// Token -> original substring, kept in replacement order.
class PlaceholderMap {
 public:
  void add(std::string token, std::string original) {
    index_.emplace(token, entries_.size());
    entries_.push_back({std::move(token), std::move(original)});
  }

  const std::string* find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? nullptr : &entries_[it->second].original;
  }

  const std::vector<Placeholder>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const PlaceholderMap& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Placeholder> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct MaskedText {
  std::string masked_body;
  PlaceholderMap placeholders;
  std::string source_comment_id;
};

/// A sentence of one comment. Offsets are byte offsets into the original
/// (unmasked) body, half-open.
struct SentenceSpan {
  std::string sentence_id;
  std::string comment_id;
  std::size_t index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string masked_text;

  bool operator==(const SentenceSpan&) const = default;
};

inline std::string make_sentence_id(std::string_view comment_id, std::size_t index) {
  return std::string(comment_id) + ":" + std::to_string(index);
}

// ---------------------------------------------------------------------------
// Token syntax helpers

/// If `text` at `pos` starts a well-formed token, returns its byte length.
inline std::size_t match_token(std::string_view text, std::size_t pos) {
  if (text.compare(pos, kTokenOpen.size(), kTokenOpen) != 0) return 0;
  std::size_t i = pos + kTokenOpen.size();
  if (i >= text.size() || (text[i] != 'C' && text[i] != 'L' && text[i] != 'M')) return 0;
  ++i;
  const std::size_t digits = i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == digits) return 0;
  if (text.compare(i, kTokenClose.size(), kTokenClose) != 0) return 0;
  return i + kTokenClose.size() - pos;
}

inline char token_kind(std::string_view token) { return token[kTokenOpen.size()]; }

/// Replaces every token in `text` with its original. Tokens absent from the
/// text are simply unused.
inline std::string restore(std::string_view text, const PlaceholderMap& placeholders) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (const std::size_t len = match_token(text, i)) {
      const auto token = text.substr(i, len);
      const std::string* original = placeholders.find(token);
      if (!original) {
        fail(ErrorCode::kUnknownPlaceholder, "no original recorded for " + std::string(token));
      }
      out += *original;
      i += len;
    } else {
      out += text[i++];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Masking

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }
inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

inline std::size_t leading_spaces(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] == ' ') ++i;
  return i;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

struct Fence {
  char ch = 0;
  std::size_t len = 0;
};

inline std::optional<Fence> fence_opener(std::string_view line) {
  line = strip_cr(line);
  const std::size_t indent = leading_spaces(line);
  if (indent > 3 || indent >= line.size()) return std::nullopt;
  const char ch = line[indent];
  if (ch != '`' && ch != '~') return std::nullopt;
  std::size_t n = indent;
  while (n < line.size() && line[n] == ch) ++n;
  if (n - indent < 3) return std::nullopt;
  if (ch == '`' && line.substr(n).find('`') != std::string_view::npos) return std::nullopt;
  return Fence{ch, n - indent};
}

inline bool fence_closes(std::string_view line, const Fence& f) {
  line = strip_cr(line);
  const std::size_t indent = leading_spaces(line);
  if (indent > 3) return false;
  std::size_t n = indent;
  while (n < line.size() && line[n] == f.ch) ++n;
  return n - indent >= f.len && is_blank(line.substr(n));
}

inline bool is_quote_line(std::string_view line) {
  const std::size_t indent = leading_spaces(line);
  return indent <= 3 && indent < line.size() && line[indent] == '>';
}

inline bool is_table_line(std::string_view line) {
  const std::size_t indent = leading_spaces(line);
  return indent < line.size() && line[indent] == '|';
}

inline bool is_rule_line(std::string_view line) {
  line = strip_cr(line);
  const std::size_t indent = leading_spaces(line);
  if (indent > 3 || indent >= line.size()) return false;
  const char ch = line[indent];
  if (ch != '-' && ch != '*' && ch != '_' && ch != '=') return false;
  std::size_t count = 0;
  for (std::size_t i = indent; i < line.size(); ++i) {
    if (line[i] == ch) {
      ++count;
    } else if (line[i] != ' ' && line[i] != '\t') {
      return false;
    }
  }
  return count >= 3;
}

/// Length of a leading heading / list / task-list marker, including the
/// indentation before it and the whitespace after it. 0 if none.
inline std::size_t block_marker_length(std::string_view line) {
  line = strip_cr(line);
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  const std::size_t start = i;
  if (i < line.size() && line[i] == '#' && i <= 3) {
    while (i < line.size() && line[i] == '#') ++i;
    if (i - start > 6) return 0;
    if (i == line.size()) return i;
    if (line[i] != ' ' && line[i] != '\t') return 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return i;
  }
  if (i < line.size() && (line[i] == '-' || line[i] == '*' || line[i] == '+')) {
    ++i;
  } else {
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])) && i - start < 9) ++i;
    if (i == start || i >= line.size() || (line[i] != '.' && line[i] != ')')) return 0;
    ++i;
  }
  if (i >= line.size() || (line[i] != ' ' && line[i] != '\t')) return 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  // Task-list checkbox belongs to the marker.
  if (i + 2 < line.size() && line[i] == '[' &&
      (line[i + 1] == ' ' || line[i + 1] == 'x' || line[i + 1] == 'X') && line[i + 2] == ']' &&
      (i + 3 == line.size() || line[i + 3] == ' ' || line[i + 3] == '\t')) {
    i += 3;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  }
  return i;
}

class Masker {
 public:
  explicit Masker(std::string_view body) : body_(body) {}

  MaskedText run(std::string comment_id) {
    std::size_t pos = 0;
    while (pos < body_.size()) {
      const std::size_t eol = line_end(pos);
      const std::string_view line = body_.substr(pos, eol - pos);

      if (auto fence = fence_opener(line)) {
        std::size_t close = eol;
        std::size_t end = body_.size();
        while (close < body_.size()) {
          const std::size_t next = close + 1;
          const std::size_t next_eol = line_end(next);
          if (fence_closes(body_.substr(next, next_eol - next), *fence)) {
            end = next_eol;
            break;
          }
          close = next_eol;
        }
        if (end == body_.size() && !body_.empty() && body_.back() == '\n' && end > pos) {
          --end;  // unterminated fence: leave the final newline as text
        }
        emit_token(PlaceholderKind::kCode, pos, std::max(end, eol));
        pos = std::max(end, eol);
        continue;
      }
      if (is_quote_line(line) || is_table_line(line)) {
        const bool quote = is_quote_line(line);
        std::size_t end = eol;
        while (end < body_.size()) {
          const std::size_t next = end + 1;
          const std::size_t next_eol = line_end(next);
          const auto next_line = body_.substr(next, next_eol - next);
          if (next_line.empty() || (quote ? !is_quote_line(next_line) : !is_table_line(next_line))) break;
          end = next_eol;
        }
        emit_token(PlaceholderKind::kMarkup, pos, end);
        pos = end;
        continue;
      }
      if (is_rule_line(line)) {
        const auto trimmed = strip_cr(line);
        emit_token(PlaceholderKind::kMarkup, pos, pos + trimmed.size());
        emit_text(pos + trimmed.size(), eol);
        pos = eol;
        continue;
      }
      std::size_t content = pos;
      if (const std::size_t marker = block_marker_length(line)) {
        emit_token(PlaceholderKind::kMarkup, pos, pos + marker);
        content = pos + marker;
      }
      mask_inline(content, eol);
      if (eol < body_.size()) emit_text(eol, eol + 1);
      pos = eol + 1;
    }
    MaskedText out;
    out.masked_body = std::move(masked_);
    out.placeholders = std::move(map_);
    out.source_comment_id = std::move(comment_id);
    return out;
  }

 private:
  std::size_t line_end(std::size_t pos) const {
    const auto nl = body_.find('\n', pos);
    return nl == std::string_view::npos ? body_.size() : nl;
  }

  void emit_text(std::size_t b, std::size_t e) {
    if (e > b) masked_.append(body_.substr(b, e - b));
  }

  void emit_token(PlaceholderKind kind, std::size_t b, std::size_t e) {
    if (e <= b) return;
    const auto k = static_cast<char>(kind);
    const std::size_t n = counters_[k == 'C' ? 0 : k == 'L' ? 1 : 2]++;
    std::string token;
    token.append(kTokenOpen).push_back(k);
    token.append(std::to_string(n)).append(kTokenClose);
    masked_ += token;
    map_.add(std::move(token), std::string(body_.substr(b, e - b)));
  }

  struct Piece {
    std::size_t begin;
    std::size_t end;
    bool atomic;                 // code, link, html, literal bracket
    PlaceholderKind kind;        // meaningful when atomic
  };

  // Finds the end of a balanced bracket group starting at `i` (which holds
  // `open`), within [i, limit). Returns npos if unbalanced.
  std::size_t balanced(std::size_t i, std::size_t limit, char open, char close) const {
    int depth = 0;
    for (std::size_t j = i; j < limit; ++j) {
      if (body_[j] == '\\' && j + 1 < limit) {
        ++j;
        continue;
      }
      if (body_[j] == open) ++depth;
      if (body_[j] == close && --depth == 0) return j + 1;
    }
    return std::string_view::npos;
  }

  std::size_t match_link(std::size_t i, std::size_t limit) const {
    const std::size_t start = i;
    if (body_[i] == '!') ++i;
    if (i >= limit || body_[i] != '[') return 0;
    const std::size_t text_end = balanced(i, limit, '[', ']');
    if (text_end == std::string_view::npos || text_end >= limit) return 0;
    if (body_[text_end] == '(') {
      const std::size_t dest_end = balanced(text_end, limit, '(', ')');
      if (dest_end == std::string_view::npos) return 0;
      return dest_end - start;
    }
    if (body_[text_end] == '[') {
      const std::size_t ref_end = balanced(text_end, limit, '[', ']');
      if (ref_end == std::string_view::npos) return 0;
      return ref_end - start;
    }
    return 0;
  }

  std::size_t match_angle(std::size_t i, std::size_t limit, PlaceholderKind& kind) const {
    const auto rest = body_.substr(i, limit - i);
    if (rest.rfind("<!--", 0) == 0) {
      const auto close = rest.find("-->");
      if (close == std::string_view::npos) return 0;
      kind = PlaceholderKind::kMarkup;
      return close + 3;
    }
    const auto close = rest.find('>');
    if (close == std::string_view::npos || close < 2) return 0;
    const auto inner = rest.substr(1, close - 1);
    if (inner.find('<') != std::string_view::npos) return 0;
    const bool has_space = std::any_of(inner.begin(), inner.end(), is_space);
    if (!has_space && (inner.find("://") != std::string_view::npos ||
                       (inner.find('@') != std::string_view::npos &&
                        inner.find('.') != std::string_view::npos))) {
      kind = PlaceholderKind::kLink;
      return close + 1;
    }
    const char first = inner[0];
    if (std::isalpha(static_cast<unsigned char>(first)) || first == '/' || first == '!') {
      kind = PlaceholderKind::kMarkup;
      return close + 1;
    }
    return 0;
  }

  std::size_t match_raw_url(std::size_t i, std::size_t limit) const {
    const auto rest = body_.substr(i, limit - i);
    std::size_t scheme = 0;
    if (rest.rfind("https://", 0) == 0) scheme = 8;
    else if (rest.rfind("http://", 0) == 0) scheme = 7;
    else return 0;
    if (i > 0 && is_alnum(body_[i - 1])) return 0;
    std::size_t n = scheme;
    while (n < rest.size() && !is_space(rest[n]) && rest[n] != '<' &&
           rest.compare(n, kTokenOpen.size(), kTokenOpen) != 0 &&
           rest.compare(n, kTokenClose.size(), kTokenClose) != 0) {
      ++n;
    }
    // Trailing punctuation and unbalanced closing parens are prose.
    while (n > scheme) {
      const char c = rest[n - 1];
      if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '\'' ||
          c == '"' || c == '*' || c == '_' || c == '~') {
        --n;
        continue;
      }
      if (c == ')') {
        const auto url = rest.substr(0, n);
        if (std::count(url.begin(), url.end(), '(') < std::count(url.begin(), url.end(), ')')) {
          --n;
          continue;
        }
      }
      break;
    }
    return n > scheme ? n : 0;
  }

  void mask_inline(std::size_t begin, std::size_t line_end) {
    std::size_t end = line_end;
    if (end > begin && body_[end - 1] == '\r') --end;
    std::vector<Piece> pieces;
    std::size_t text_start = begin;
    auto flush = [&](std::size_t upto) {
      if (upto > text_start) pieces.push_back({text_start, upto, false, PlaceholderKind::kMarkup});
    };
    std::size_t i = begin;
    while (i < end) {
      const char c = body_[i];
      std::size_t len = 0;
      PlaceholderKind kind = PlaceholderKind::kMarkup;
      if (c == '\\' && i + 1 < end && is_ascii_punct(body_[i + 1])) {
        i += 2;
        continue;
      }
      if (c == '`') {
        std::size_t run = i;
        while (run < end && body_[run] == '`') ++run;
        const std::size_t ticks = run - i;
        std::size_t j = run;
        while (j < end) {
          if (body_[j] != '`') {
            ++j;
            continue;
          }
          std::size_t k = j;
          while (k < end && body_[k] == '`') ++k;
          if (k - j == ticks) {
            len = k - i;
            break;
          }
          j = k;
        }
        kind = PlaceholderKind::kCode;
        if (!len) {
          i = run;  // unmatched backtick run stays literal
          continue;
        }
      } else if (body_.compare(i, kTokenOpen.size(), kTokenOpen) == 0 ||
                 body_.compare(i, kTokenClose.size(), kTokenClose) == 0) {
        len = kTokenOpen.size();
      } else if (c == '[' || (c == '!' && i + 1 < end && body_[i + 1] == '[')) {
        len = match_link(i, end);
        kind = PlaceholderKind::kLink;
      } else if (c == '<') {
        len = match_angle(i, end, kind);
      } else if (c == 'h') {
        len = match_raw_url(i, end);
        kind = PlaceholderKind::kLink;
      }
      if (len) {
        flush(i);
        pieces.push_back({i, i + len, true, kind});
        i += len;
        text_start = i;
      } else {
        ++i;
      }
    }
    flush(end);
    emit_with_emphasis(pieces);
    emit_text(end, line_end);
  }

  // Emphasis delimiters are paired over the line's plain text, treating
  // atomic pieces as opaque non-space characters.
  void emit_with_emphasis(const std::vector<Piece>& pieces) {
    struct Cell {
      std::size_t begin, end;
      int piece;
      char ch;  // the character; atomic pieces and escapes read as 'a'
      bool atomic;
    };
    std::vector<Cell> cells;
    for (int p = 0; p < static_cast<int>(pieces.size()); ++p) {
      const auto& pc = pieces[p];
      if (pc.atomic) {
        cells.push_back({pc.begin, pc.end, p, 'a', true});
      } else {
        for (std::size_t k = pc.begin; k < pc.end; ++k) {
          if (body_[k] == '\\' && k + 1 < pc.end && is_ascii_punct(body_[k + 1])) {
            cells.push_back({k, k + 2, p, 'a', false});
            ++k;
          } else {
            cells.push_back({k, k + 1, p, body_[k], false});
          }
        }
      }
    }
    struct Run {
      std::size_t first, last;  // cell index range, inclusive-exclusive
      char ch;
      bool can_open, can_close, used;
    };
    std::vector<Run> runs;
    for (std::size_t k = 0; k < cells.size();) {
      const char ch = cells[k].ch;
      if (ch != '*' && ch != '_' && ch != '~') {
        ++k;
        continue;
      }
      std::size_t e = k;
      while (e < cells.size() && cells[e].ch == ch) ++e;
      const char before = k > 0 ? cells[k - 1].ch : ' ';
      const char after = e < cells.size() ? cells[e].ch : ' ';
      Run r{k, e, ch, !is_space(after), !is_space(before), false};
      if (ch == '_') {
        r.can_open = r.can_open && !is_alnum(before);
        r.can_close = r.can_close && !is_alnum(after);
      }
      if (ch == '~' && e - k != 2) r.can_open = r.can_close = false;
      if (e - k > 3) r.can_open = r.can_close = false;
      runs.push_back(r);
      k = e;
    }
    std::vector<bool> marked(cells.size(), false);
    for (std::size_t a = 0; a < runs.size(); ++a) {
      if (runs[a].used || !runs[a].can_open) continue;
      for (std::size_t b = a + 1; b < runs.size(); ++b) {
        if (runs[b].used || !runs[b].can_close || runs[b].ch != runs[a].ch ||
            runs[b].last - runs[b].first != runs[a].last - runs[a].first) {
          continue;
        }
        if (runs[b].first == runs[a].last) continue;  // nothing between
        runs[a].used = runs[b].used = true;
        for (auto r : {a, b}) {
          for (std::size_t k = runs[r].first; k < runs[r].last; ++k) marked[k] = true;
        }
        break;
      }
    }
    for (std::size_t k = 0; k < cells.size();) {
      const auto& cell = cells[k];
      if (cell.atomic) {
        emit_token(pieces[cell.piece].kind, cell.begin, cell.end);
        ++k;
      } else if (marked[k]) {
        std::size_t e = k;
        while (e < cells.size() && marked[e] && cells[e].ch == cell.ch) ++e;
        emit_token(PlaceholderKind::kMarkup, cell.begin, cells[e - 1].end);
        k = e;
      } else {
        emit_text(cell.begin, cell.end);
        ++k;
      }
    }
  }

  std::string_view body_;
  std::string masked_;
  PlaceholderMap map_;
  std::array<std::size_t, 3> counters_{};
};

}  // namespace detail

/// Masks fenced and inline code, links and URLs, quoted replies, tables,
/// HTML tags and markdown emphasis/heading/list markers. Never fails:
/// malformed markdown just masks less.
inline MaskedText mask_markup(std::string_view body, std::string comment_id = {}) {
  return detail::Masker(body).run(std::move(comment_id));
}

// ---------------------------------------------------------------------------
// Sentence segmentation

class AbbreviationList {
 public:
  AbbreviationList() = default;

  static AbbreviationList defaults() {
    return parse(
        "e.g.\ni.e.\netc.\nvs.\ncf.\ndr.\nfig.\nmr.\nmrs.\nms.\nal.\napprox.\nincl.\nno.\nresp.\neq.\n");
  }

  /// One abbreviation per line, `#` starts a comment. Matching ignores case.
  static AbbreviationList parse(std::string_view text) {
    AbbreviationList list;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto e = line.find_last_not_of(" \t\r");
      list.add(line.substr(b, e - b + 1));
    }
    return list;
  }

  static AbbreviationList load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIoError, "cannot open abbreviation list " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  void add(std::string abbreviation) {
    for (auto& c : abbreviation) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    entries_.insert(std::move(abbreviation));
  }

  bool contains(std::string_view word) const {
    std::string lower(word);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return entries_.count(lower) > 0;
  }

  const std::set<std::string>& entries() const { return entries_; }

 private:
  std::set<std::string> entries_;
};

namespace detail {

/// Maps masked-body offsets to original-body offsets. Only offsets on token
/// boundaries or inside plain text are meaningful.
class OffsetMap {
 public:
  explicit OffsetMap(const MaskedText& m) {
    std::size_t orig = 0;
    const std::string_view text = m.masked_body;
    std::size_t i = 0;
    while (i < text.size()) {
      if (const std::size_t len = match_token(text, i)) {
        const std::string* original = m.placeholders.find(text.substr(i, len));
        if (!original) fail(ErrorCode::kUnknownPlaceholder, std::string(text.substr(i, len)));
        points_.push_back({i, orig, len, original->size()});
        orig += original->size();
        i += len;
      } else {
        ++i;
        ++orig;
      }
    }
  }

  std::size_t to_original(std::size_t masked) const {
    std::size_t shift_masked = 0, shift_orig = 0;
    for (const auto& p : points_) {
      if (p.masked >= masked) break;
      shift_masked = p.masked + p.masked_len;
      shift_orig = p.orig + p.orig_len;
    }
    return shift_orig + (masked - shift_masked);
  }

 private:
  struct Point {
    std::size_t masked, orig, masked_len, orig_len;
  };
  std::vector<Point> points_;
};

inline bool line_starts_with_markup(std::string_view masked, std::size_t line_start) {
  std::size_t i = line_start;
  while (i < masked.size() && (masked[i] == ' ' || masked[i] == '\t')) ++i;
  const std::size_t len = match_token(masked, i);
  return len && token_kind(masked.substr(i, len)) == 'M';
}

inline bool only_markup(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (const std::size_t len = match_token(s, i)) {
      if (token_kind(s.substr(i, len)) != 'M') return false;
      i += len;
    } else if (is_space(s[i])) {
      ++i;
    } else {
      return false;
    }
  }
  return true;
}

/// A unit has content when it holds a word character or a code/link token.
inline bool has_content(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (const std::size_t len = match_token(s, i)) {
      if (token_kind(s.substr(i, len)) != 'M') return true;
      i += len;
    } else {
      if (is_alnum(s[i]) || static_cast<unsigned char>(s[i]) >= 0x80) return true;
      ++i;
    }
  }
  return false;
}

/// Splits the masked body into block units: blank lines always separate;
/// a single newline separates when the next line is led by a markup token
/// (list item, heading, quote, table row) or the previous line is a heading
/// or pure markup.
inline std::vector<std::pair<std::size_t, std::size_t>> block_units(const MaskedText& m) {
  const std::string_view masked = m.masked_body;
  auto led_by_heading = [&](std::size_t line_start) {
    std::size_t i = line_start;
    while (i < masked.size() && (masked[i] == ' ' || masked[i] == '\t')) ++i;
    const std::size_t len = match_token(masked, i);
    if (!len) return false;
    const std::string* original = m.placeholders.find(masked.substr(i, len));
    if (!original) return false;
    const auto first = original->find_first_not_of(" \t");
    return first != std::string::npos && (*original)[first] == '#';
  };
  std::vector<std::pair<std::size_t, std::size_t>> lines;
  for (std::size_t pos = 0; pos <= masked.size();) {
    auto nl = masked.find('\n', pos);
    if (nl == std::string_view::npos) nl = masked.size();
    lines.emplace_back(pos, nl);
    pos = nl + 1;
  }
  std::vector<std::pair<std::size_t, std::size_t>> units;
  std::size_t unit_start = std::string_view::npos, unit_end = 0;
  bool prev_markup_only = false;
  for (const auto& [b, e] : lines) {
    const auto line = masked.substr(b, e - b);
    const bool blank = is_blank(line);
    const bool split = blank || prev_markup_only || line_starts_with_markup(masked, b);
    if (split && unit_start != std::string_view::npos) {
      units.emplace_back(unit_start, unit_end);
      unit_start = std::string_view::npos;
    }
    if (!blank) {
      if (unit_start == std::string_view::npos) unit_start = b;
      unit_end = e;
    }
    prev_markup_only = !blank && (only_markup(line) || led_by_heading(b));
  }
  if (unit_start != std::string_view::npos) units.emplace_back(unit_start, unit_end);
  return units;
}

inline bool is_closer(char c) { return c == ')' || c == '"' || c == '\'' || c == ']'; }

}  // namespace detail

/// Rule-based sentence segmentation of a masked comment body. Boundaries are
/// terminal punctuation followed by whitespace (unless the word is a known
/// abbreviation) and block breaks. Leading list/heading markers are excluded
/// from spans; units with no words, code or links are dropped.
inline std::vector<SentenceSpan> sentencize(
    const MaskedText& masked, const AbbreviationList& abbreviations = AbbreviationList::defaults()) {
  using detail::is_space;
  const std::string_view text = masked.masked_body;
  const detail::OffsetMap offsets(masked);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;

  for (const auto& [ub, ue] : detail::block_units(masked)) {
    std::size_t start = ub;
    std::size_t i = ub;
    while (i < ue) {
      if (const std::size_t len = match_token(text, i)) {
        i += len;
        continue;
      }
      const char c = text[i];
      if (c != '.' && c != '!' && c != '?') {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < ue && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
      while (j < ue && detail::is_closer(text[j])) ++j;
      if (j < ue && !is_space(text[j])) {
        i = j;
        continue;
      }
      if (c == '.' && j == i + 1) {
        std::size_t w = i;
        while (w > start && !is_space(text[w - 1])) --w;
        while (w < i && (text[w] == '(' || text[w] == '"' || text[w] == '\'')) ++w;
        if (abbreviations.contains(text.substr(w, i + 1 - w))) {
          i = j;
          continue;
        }
      }
      ranges.emplace_back(start, j);
      start = j;
      i = j;
    }
    if (start < ue) ranges.emplace_back(start, ue);
  }

  std::vector<SentenceSpan> out;
  for (auto [b, e] : ranges) {
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    // Drop leading block markers (they end in whitespace in the original).
    while (b < e) {
      const std::size_t len = match_token(text, b);
      if (!len) break;
      const auto token = text.substr(b, len);
      const std::string* original = masked.placeholders.find(token);
      if (token_kind(token) != 'M' || !original || original->empty() || !is_space(original->back())) break;
      b += len;
      while (b < e && is_space(text[b])) ++b;
    }
    if (b >= e || !detail::has_content(text.substr(b, e - b))) continue;
    SentenceSpan span;
    span.comment_id = masked.source_comment_id;
    span.index = out.size();
    span.sentence_id = make_sentence_id(span.comment_id, span.index);
    span.char_start = offsets.to_original(b);
    span.char_end = offsets.to_original(e);
    span.masked_text = std::string(text.substr(b, e - b));
    out.push_back(std::move(span));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole-thread preparation

struct PreparedComment {
  std::string comment_id;
  std::size_t position = 0;  // 0 is the original post
  MaskedText masked;
  std::vector<SentenceSpan> sentences;
};

/// A thread after masking and segmentation, in thread order.
struct PreparedThread {
  std::vector<PreparedComment> comments;

  const PreparedComment* find(std::string_view comment_id) const {
    for (const auto& c : comments) {
      if (c.comment_id == comment_id) return &c;
    }
    return nullptr;
  }

  std::vector<SentenceSpan> all_sentences() const {
    std::vector<SentenceSpan> out;
    for (const auto& c : comments) out.insert(out.end(), c.sentences.begin(), c.sentences.end());
    return out;
  }

  std::unordered_map<std::string, const PlaceholderMap*> placeholders_by_comment() const {
    std::unordered_map<std::string, const PlaceholderMap*> out;
    for (const auto& c : comments) out.emplace(c.comment_id, &c.masked.placeholders);
    return out;
  }
};

inline PreparedComment prepare_comment(const Comment& comment, std::size_t position,
                                       const AbbreviationList& abbreviations) {
  PreparedComment out;
  out.comment_id = comment.comment_id;
  out.position = position;
  out.masked = mask_markup(comment.body_markdown, comment.comment_id);
  out.sentences = sentencize(out.masked, abbreviations);
  return out;
}

inline PreparedThread prepare_thread(const IssueThread& thread,
                                     const AbbreviationList& abbreviations = AbbreviationList::defaults()) {
  PreparedThread out;
  std::size_t position = 0;
  for (const Comment* c : thread.in_thread_order()) {
    out.comments.push_back(prepare_comment(*c, position++, abbreviations));
  }
  return out;
}

}  // namespace summit

#include "doceval/table_model.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <utility>

#include "doceval/error.hpp"
#include "utf8.hpp"

namespace doceval {

std::string_view to_string(Tag tag) noexcept {
  switch (tag) {
    case Tag::table: return "table";
    case Tag::thead: return "thead";
    case Tag::tbody: return "tbody";
    case Tag::tr: return "tr";
    case Tag::td: return "td";
    case Tag::th: return "th";
  }
  return "?";
}

TableNode make_cell(Tag tag, std::string text, int rowspan, int colspan) {
  return TableNode{tag, rowspan, colspan, std::move(text), {}};
}

TableNode make_node(Tag tag, std::vector<TableNode> children) {
  return TableNode{tag, 1, 1, {}, std::move(children)};
}

std::size_t ParseDiagnostics::count(std::string_view code) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      warnings.begin(), warnings.end(), [&](const ParseWarning& w) { return w.code == code; }));
}

namespace {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_hex(char c) noexcept {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

char lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower(c);
  return out;
}

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

void require_utf8(std::string_view src) {
  if (auto bad = utf8::first_invalid(src)) {
    throw Error(ErrorCode::EncodingError,
                "invalid UTF-8 at byte offset " + std::to_string(*bad));
  }
}

// Decodes &amp; &lt; &gt; &quot; and numeric references. Anything else that
// looks like an entity is kept verbatim and reported.
std::string decode_entities(std::string_view text, std::size_t base_offset,
                            std::vector<ParseWarning>& warnings) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out += text[i++];
      continue;
    }
    std::size_t j = i + 1;
    std::optional<char32_t> numeric;
    bool named = false;
    if (j < text.size() && text[j] == '#') {
      ++j;
      const bool hex = j < text.size() && (text[j] == 'x' || text[j] == 'X');
      if (hex) ++j;
      const std::size_t digits = j;
      while (j < text.size() && (hex ? is_hex(text[j]) : is_digit(text[j]))) ++j;
      if (j == digits || j >= text.size() || text[j] != ';') {
        out += text[i++];
        continue;
      }
      std::uint32_t cp = 0;
      auto [p, ec] = std::from_chars(text.data() + digits, text.data() + j, cp, hex ? 16 : 10);
      if (ec == std::errc{} && cp > 0 && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF)) {
        numeric = static_cast<char32_t>(cp);
      }
    } else if (j < text.size() && is_alpha(text[j])) {
      while (j < text.size() && (is_alpha(text[j]) || is_digit(text[j]))) ++j;
      if (j >= text.size() || text[j] != ';') {
        out += text[i++];
        continue;
      }
      named = true;
    } else {
      out += text[i++];
      continue;
    }
    const std::string_view entity = text.substr(i, j - i + 1);
    if (numeric) {
      utf8::append(out, *numeric);
    } else if (named && entity == "&amp;") {
      out += '&';
    } else if (named && entity == "&lt;") {
      out += '<';
    } else if (named && entity == "&gt;") {
      out += '>';
    } else if (named && entity == "&quot;") {
      out += '"';
    } else {
      out += entity;
      warnings.push_back({"UnknownEntity", "entity " + std::string(entity) + " kept verbatim",
                          base_offset + i});
    }
    i = j + 1;
  }
  return out;
}

struct HtmlTag {
  std::string name;  // lower-case
  bool closing = false;
  bool self_closing = false;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::size_t offset = 0;

  std::optional<std::string_view> attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

// Reads a tag starting at src[pos] == '<'. Returns the position after '>'.
std::size_t read_tag(std::string_view src, std::size_t pos, HtmlTag& tag) {
  tag = HtmlTag{};
  tag.offset = pos;
  std::size_t i = pos + 1;
  if (i < src.size() && src[i] == '/') {
    tag.closing = true;
    ++i;
  }
  const std::size_t name_start = i;
  while (i < src.size() && !is_space(src[i]) && src[i] != '>' && src[i] != '/') ++i;
  tag.name = to_lower(src.substr(name_start, i - name_start));
  while (i < src.size() && src[i] != '>') {
    if (is_space(src[i])) {
      ++i;
      continue;
    }
    if (src[i] == '/') {
      tag.self_closing = true;
      ++i;
      continue;
    }
    tag.self_closing = false;
    const std::size_t key_start = i;
    while (i < src.size() && !is_space(src[i]) && src[i] != '>' && src[i] != '=' && src[i] != '/') ++i;
    std::string key = to_lower(src.substr(key_start, i - key_start));
    while (i < src.size() && is_space(src[i])) ++i;
    std::string value;
    if (i < src.size() && src[i] == '=') {
      ++i;
      while (i < src.size() && is_space(src[i])) ++i;
      if (i < src.size() && (src[i] == '"' || src[i] == '\'')) {
        const char quote = src[i++];
        const std::size_t v0 = i;
        while (i < src.size() && src[i] != quote) ++i;
        value = std::string(src.substr(v0, i - v0));
        if (i < src.size()) ++i;
      } else {
        const std::size_t v0 = i;
        while (i < src.size() && !is_space(src[i]) && src[i] != '>') ++i;
        value = std::string(src.substr(v0, i - v0));
      }
    }
    if (!key.empty()) tag.attrs.emplace_back(std::move(key), std::move(value));
  }
  return i < src.size() ? i + 1 : i;
}

// Finds the next "<table" open tag at or after pos.
std::size_t find_table_open(std::string_view src, std::size_t pos) {
  while ((pos = src.find('<', pos)) != std::string_view::npos) {
    if (pos + 6 <= src.size() && to_lower(src.substr(pos + 1, 5)) == "table" &&
        (pos + 6 == src.size() || is_space(src[pos + 6]) || src[pos + 6] == '>' ||
         src[pos + 6] == '/')) {
      return pos;
    }
    ++pos;
  }
  return std::string_view::npos;
}

class HtmlTableBuilder {
 public:
  explicit HtmlTableBuilder(std::string_view src) : src_(src) {}

  ParsedTable run() {
    const std::size_t start = find_table_open(src_, 0);
    if (start == std::string_view::npos) {
      throw Error(ErrorCode::NoTableFound, "no <table> element in input");
    }
    std::size_t pos = read_tag(src_, start, tag_);
    bool closed = false;
    while (pos < src_.size() && !closed) {
      if (src_[pos] != '<') {
        std::size_t end = src_.find('<', pos);
        if (end == std::string_view::npos) end = src_.size();
        on_text(pos, end);
        pos = end;
        continue;
      }
      const std::string_view rest = src_.substr(pos);
      if (rest.starts_with("<!--")) {
        const std::size_t end = src_.find("-->", pos + 4);
        pos = end == std::string_view::npos ? src_.size() : end + 3;
      } else if (rest.starts_with("<!") || rest.starts_with("<?")) {
        const std::size_t end = src_.find('>', pos);
        pos = end == std::string_view::npos ? src_.size() : end + 1;
      } else if (rest.size() > 1 && (is_alpha(rest[1]) || (rest[1] == '/' && rest.size() > 2 &&
                                                          is_alpha(rest[2])))) {
        pos = read_tag(src_, pos, tag_);
        closed = tag_.closing ? on_end_tag() : on_start_tag();
      } else {
        on_text(pos, pos + 1);
        ++pos;
      }
    }
    if (!closed) {
      const std::size_t at = src_.size();
      close_cell(at, true);
      close_row(at, true);
      section_.reset();
      warn("UnclosedTag", "<table> not closed before end of input", at);
    } else if (find_table_open(src_, pos) != std::string_view::npos) {
      warn("ExtraTable", "only the first <table> is scored; later tables ignored",
           find_table_open(src_, pos));
    }
    return std::move(out_);
  }

 private:
  struct OpenCell {
    Tag tag;
    int rowspan;
    int colspan;
    std::string text;
  };

  void warn(std::string code, std::string message, std::size_t offset) {
    out_.diagnostics.warnings.push_back({std::move(code), std::move(message), offset});
  }

  TableNode& container() {
    return section_ ? out_.tree.root.children[*section_] : out_.tree.root;
  }

  void on_text(std::size_t begin, std::size_t end) {
    const std::string_view raw = src_.substr(begin, end - begin);
    if (cell_) {
      cell_->text += decode_entities(raw, begin, out_.diagnostics.warnings);
    } else if (!trim(raw).empty()) {
      warn("StrayText", "text outside any cell discarded", begin);
    }
  }

  int parse_span(std::string_view key, std::size_t offset) {
    const auto value = tag_.attr(key);
    if (!value) return 1;
    const std::string_view v = trim(*value);
    int n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc{} || p != v.data() + v.size() || n <= 0) {
      warn("InvalidSpan", std::string(key) + "=\"" + std::string(*value) + "\" coerced to 1",
           offset);
      return 1;
    }
    return n;
  }

  void close_cell(std::size_t offset, bool implicit) {
    if (!cell_) return;
    if (implicit) {
      warn("UnclosedTag", "<" + std::string(to_string(cell_->tag)) + "> closed implicitly", offset);
    }
    container().children[*row_].children.push_back(
        make_cell(cell_->tag, canonicalize_whitespace(cell_->text), cell_->rowspan, cell_->colspan));
    cell_.reset();
  }

  void close_row(std::size_t offset, bool implicit) {
    if (!row_) return;
    if (implicit) warn("UnclosedTag", "<tr> closed implicitly", offset);
    row_.reset();
  }

  void open_row() {
    container().children.push_back(make_node(Tag::tr));
    row_ = container().children.size() - 1;
  }

  // Returns true when the outer table has been closed.
  bool on_start_tag() {
    const std::string& name = tag_.name;
    const std::size_t at = tag_.offset;
    if (name == "table") {
      ++nested_;
      warn("NestedTable", "nested table flattened to text", at);
      if (cell_) cell_->text += ' ';
      return false;
    }
    if (nested_ > 0) {
      if (cell_ && (name == "td" || name == "th" || name == "tr" || name == "br")) {
        cell_->text += ' ';
      }
      return false;
    }
    if (name == "thead" || name == "tbody" || name == "tfoot") {
      close_cell(at, true);
      close_row(at, true);
      if (name == "tfoot") warn("UnknownTag", "<tfoot> treated as <tbody>", at);
      out_.tree.root.children.push_back(make_node(name == "thead" ? Tag::thead : Tag::tbody));
      section_ = out_.tree.root.children.size() - 1;
      return false;
    }
    if (name == "tr") {
      close_cell(at, true);
      close_row(at, true);
      open_row();
      if (tag_.self_closing) row_.reset();
      return false;
    }
    if (name == "td" || name == "th") {
      close_cell(at, true);
      if (!row_) {
        warn("ImpliedRow", "cell outside <tr>; row synthesized", at);
        open_row();
      }
      const int rowspan = parse_span("rowspan", at);
      const int colspan = parse_span("colspan", at);
      cell_ = OpenCell{name == "td" ? Tag::td : Tag::th, rowspan, colspan, {}};
      if (tag_.self_closing) close_cell(at, false);
      return false;
    }
    if (name == "br" && cell_) cell_->text += ' ';
    return false;
  }

  bool on_end_tag() {
    const std::string& name = tag_.name;
    const std::size_t at = tag_.offset;
    if (name == "table") {
      if (nested_ > 0) {
        --nested_;
        if (cell_) cell_->text += ' ';
        return false;
      }
      close_cell(at, true);
      close_row(at, true);
      section_.reset();
      return true;
    }
    if (nested_ > 0) {
      if (cell_ && (name == "td" || name == "th" || name == "tr")) cell_->text += ' ';
      return false;
    }
    if (name == "td" || name == "th") {
      if (cell_) {
        close_cell(at, false);
      } else {
        warn("StrayEndTag", "</" + name + "> without open cell", at);
      }
    } else if (name == "tr") {
      close_cell(at, true);
      if (row_) {
        close_row(at, false);
      } else {
        warn("StrayEndTag", "</tr> without open row", at);
      }
    } else if (name == "thead" || name == "tbody" || name == "tfoot") {
      close_cell(at, true);
      close_row(at, true);
      if (section_) {
        section_.reset();
      } else {
        warn("StrayEndTag", "</" + name + "> without open section", at);
      }
    }
    return false;
  }

  std::string_view src_;
  ParsedTable out_;
  HtmlTag tag_;
  std::optional<std::size_t> section_;
  std::optional<std::size_t> row_;
  std::optional<OpenCell> cell_;
  int nested_ = 0;
};

// Splits a pipe-table line into raw cell strings; "\|" becomes a literal pipe.
std::vector<std::string> split_pipe_row(std::string_view line) {
  line = trim(line);
  if (!line.empty() && line.front() == '|') line.remove_prefix(1);
  if (!line.empty() && line.back() == '|' && !(line.size() >= 2 && line[line.size() - 2] == '\\')) {
    line.remove_suffix(1);
  }
  std::vector<std::string> cells(1);
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
      cells.back() += '|';
      ++i;
    } else if (line[i] == '|') {
      cells.emplace_back();
    } else {
      cells.back() += line[i];
    }
  }
  return cells;
}

bool is_separator_row(std::string_view line) {
  if (line.find('|') == std::string_view::npos || line.find('-') == std::string_view::npos) {
    return false;
  }
  for (const auto& raw : split_pipe_row(line)) {
    std::string_view cell = trim(raw);
    if (!cell.empty() && cell.front() == ':') cell.remove_prefix(1);
    if (!cell.empty() && cell.back() == ':') cell.remove_suffix(1);
    if (cell.empty() || cell.find_first_not_of('-') != std::string_view::npos) return false;
  }
  return true;
}

struct Line {
  std::string_view text;
  std::size_t offset;
};

std::vector<Line> split_lines(std::string_view src) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos <= src.size()) {
    std::size_t end = src.find('\n', pos);
    if (end == std::string_view::npos) end = src.size();
    std::string_view text = src.substr(pos, end - pos);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    lines.push_back({text, pos});
    pos = end + 1;
  }
  return lines;
}

void escape_text(std::string& out, std::string_view text) {
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
}

void serialize_node(std::string& out, const TableNode& node) {
  const std::string_view name = to_string(node.tag);
  out += '<';
  out += name;
  if (node.rowspan != 1) out += " rowspan=\"" + std::to_string(node.rowspan) + "\"";
  if (node.colspan != 1) out += " colspan=\"" + std::to_string(node.colspan) + "\"";
  out += '>';
  if (is_cell(node.tag)) {
    escape_text(out, node.text);
  } else {
    for (const auto& child : node.children) serialize_node(out, child);
  }
  out += "</";
  out += name;
  out += '>';
}

}  // namespace

std::string canonicalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

ParsedTable parse_html_table(std::string_view src) {
  require_utf8(src);
  return HtmlTableBuilder(src).run();
}

ParsedTable parse_md_table(std::string_view src) {
  require_utf8(src);
  const auto lines = split_lines(src);
  std::size_t sep = 1;
  for (; sep < lines.size(); ++sep) {
    if (is_separator_row(lines[sep].text) && !trim(lines[sep - 1].text).empty() &&
        !is_separator_row(lines[sep - 1].text)) {
      break;
    }
  }
  if (sep >= lines.size()) {
    throw Error(ErrorCode::NoTableFound, "no pipe table separator row found");
  }

  ParsedTable out;
  const auto header = split_pipe_row(lines[sep - 1].text);
  const std::size_t width = header.size();

  TableNode head_row = make_node(Tag::tr);
  for (const auto& cell : header) head_row.children.push_back(make_cell(Tag::th, canonicalize_whitespace(cell)));
  out.tree.root.children.push_back(make_node(Tag::thead, {std::move(head_row)}));

  TableNode body = make_node(Tag::tbody);
  for (std::size_t i = sep + 1; i < lines.size(); ++i) {
    const std::string_view text = lines[i].text;
    if (trim(text).empty() || text.find('|') == std::string_view::npos) break;
    auto cells = split_pipe_row(text);
    if (cells.size() != width) {
      out.diagnostics.warnings.push_back(
          {"RaggedRow",
           "row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(width),
           lines[i].offset});
      cells.resize(width);
    }
    TableNode row = make_node(Tag::tr);
    for (const auto& cell : cells) row.children.push_back(make_cell(Tag::td, canonicalize_whitespace(cell)));
    body.children.push_back(std::move(row));
  }
  if (!body.children.empty()) out.tree.root.children.push_back(std::move(body));
  return out;
}

std::string serialize_html(const TableTree& tree) {
  std::string out;
  serialize_node(out, tree.root);
  return out;
}

std::size_t node_count(const TableNode& node) {
  std::size_t count = 0;
  std::vector<const TableNode*> stack{&node};
  while (!stack.empty()) {
    const TableNode* n = stack.back();
    stack.pop_back();
    ++count;
    for (const auto& child : n->children) stack.push_back(&child);
  }
  return count;
}

std::size_t node_count(const TableTree& tree) { return node_count(tree.root); }

}  // namespace doceval

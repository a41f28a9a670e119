#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace doceval {

enum class Tag { table, thead, tbody, tr, td, th };

std::string_view to_string(Tag tag) noexcept;

inline bool is_cell(Tag tag) noexcept { return tag == Tag::td || tag == Tag::th; }

/// A node of the canonical table tree.
///
/// Only cell nodes (td/th) carry text or spans other than 1. Cell text is
/// whitespace-canonicalized: no leading/trailing whitespace and no runs.
struct TableNode {
  Tag tag = Tag::table;
  int rowspan = 1;
  int colspan = 1;
  std::string text;
  std::vector<TableNode> children;

  bool operator==(const TableNode&) const = default;
};

TableNode make_cell(Tag tag, std::string text, int rowspan = 1, int colspan = 1);
TableNode make_node(Tag tag, std::vector<TableNode> children = {});

/// Ordered labeled tree for one table. The root always has tag `table`.
struct TableTree {
  TableNode root{Tag::table, 1, 1, {}, {}};

  bool operator==(const TableTree&) const = default;
};

struct ParseWarning {
  std::string code;
  std::string message;
  std::size_t byte_offset = 0;

  bool operator==(const ParseWarning&) const = default;
};

struct ParseDiagnostics {
  std::vector<ParseWarning> warnings;

  bool empty() const noexcept { return warnings.empty(); }
  std::size_t count(std::string_view code) const noexcept;
};

struct ParsedTable {
  TableTree tree;
  ParseDiagnostics diagnostics;
};

// Tag-soup tolerant HTML table parser. Only the first <table> is used.
// Throws Error{NoTableFound} or Error{EncodingError}.
ParsedTable parse_html_table(std::string_view src);

// GitHub-style pipe table parser. Throws Error{NoTableFound} when no
// alignment separator row follows a header row.
ParsedTable parse_md_table(std::string_view src);

// Canonical HTML; span attributes are emitted only when different from 1.
std::string serialize_html(const TableTree& tree);

std::size_t node_count(const TableTree& tree);
std::size_t node_count(const TableNode& node);

// Collapses whitespace runs to one space and trims both ends.
std::string canonicalize_whitespace(std::string_view text);

}  // namespace doceval

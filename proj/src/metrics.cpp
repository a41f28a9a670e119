#include "doceval/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "doceval/tree_edit.hpp"

namespace doceval {

TedsScore teds(const TableTree& gt, const TableTree& pred) {
  const auto result = tree_edit_distance(gt, pred, teds_cost_model());
  TedsScore s;
  s.distance = result.distance;
  s.denom = std::max({result.n_left, result.n_right, std::size_t{1}});
  s.score = std::clamp(1.0 - result.distance / static_cast<double>(s.denom), 0.0, 1.0);
  return s;
}

namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) noexcept {
  const auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return s;
}

bool strip_currency(std::string_view& s) {
  for (std::string_view sym : {"$", "€", "£"}) {
    if (s.starts_with(sym)) {
      s.remove_prefix(sym.size());
      return true;
    }
  }
  return false;
}

// digits, or 1-3 digits followed by ",ddd" groups. Writes digits without commas.
bool take_integer_part(std::string_view& s, std::string& out) {
  std::size_t i = 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == 0) return false;
  out.append(s.substr(0, i));
  if (i < s.size() && s[i] == ',') {
    if (i > 3) return false;
    while (i < s.size() && s[i] == ',') {
      if (i + 4 > s.size() || !is_digit(s[i + 1]) || !is_digit(s[i + 2]) || !is_digit(s[i + 3])) {
        return false;
      }
      out.append(s.substr(i + 1, 3));
      i += 4;
    }
    if (i < s.size() && is_digit(s[i])) return false;
  }
  s.remove_prefix(i);
  return true;
}

std::string render_integer(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[400];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

bool is_header(const TableNode& cell, bool in_thead) { return in_thead || cell.tag == Tag::th; }

// Visits cells with their header status.
void for_each_cell(TableNode& node, bool in_thead,
                   const std::function<void(TableNode&, bool)>& fn) {
  if (is_cell(node.tag)) {
    fn(node, is_header(node, in_thead));
    return;
  }
  for (auto& child : node.children) for_each_cell(child, in_thead || node.tag == Tag::thead, fn);
}

}  // namespace

NumericCellView parse_numeric(std::string_view text) {
  NumericCellView view;
  view.original_text = std::string(text);
  std::string_view s = trim(text);

  std::string number;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    if (s.front() == '-') number += '-';
    s.remove_prefix(1);
    strip_currency(s);
  } else if (strip_currency(s) && !s.empty() && (s.front() == '+' || s.front() == '-')) {
    if (s.front() == '-') number += '-';
    s.remove_prefix(1);
  }
  const bool percent = !s.empty() && s.back() == '%';
  if (percent) s.remove_suffix(1);

  if (!take_integer_part(s, number)) return view;
  if (!s.empty() && s.front() == '.') {
    number += '.';
    s.remove_prefix(1);
    std::size_t i = 0;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == 0) return view;
    number.append(s.substr(0, i));
    s.remove_prefix(i);
  }
  if (!s.empty() && (s.front() == 'e' || s.front() == 'E')) {
    number += 'e';
    s.remove_prefix(1);
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
      number += s.front();
      s.remove_prefix(1);
    }
    std::size_t i = 0;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == 0) return view;
    number.append(s.substr(0, i));
    s.remove_prefix(i);
  }
  if (!s.empty()) return view;

  double value = 0.0;
  auto [p, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
  if (ec != std::errc{} || p != number.data() + number.size() || !std::isfinite(value)) return view;
  view.is_numeric = true;
  view.value = percent ? value / 100.0 : value;
  return view;
}

std::pair<TableTree, TableTree> normalize_values(const TableTree& gt, const TableTree& pred,
                                                 const MtedsConfig& cfg) {
  if (cfg.scale_factor < 1) throw std::invalid_argument("scale_factor must be >= 1");
  std::pair<TableTree, TableTree> out{gt, pred};
  const auto counts = [&](bool header) { return !(cfg.exclude_headers && header); };

  double max_abs = 0.0;
  bool any = false;
  for_each_cell(out.first.root, false, [&](TableNode& cell, bool header) {
    if (!counts(header)) return;
    const auto v = parse_numeric(cell.text);
    if (!v.is_numeric) return;
    any = true;
    max_abs = std::max(max_abs, std::abs(v.value));
  });
  if (!any || max_abs == 0.0) return out;

  const auto rewrite = [&](TableNode& cell, bool header) {
    if (!counts(header)) return;
    const auto v = parse_numeric(cell.text);
    if (!v.is_numeric) return;
    // std::round is half-away-from-zero.
    cell.text = render_integer(std::round(cfg.scale_factor * (v.value / max_abs)));
  };
  for_each_cell(out.first.root, false, rewrite);
  for_each_cell(out.second.root, false, rewrite);
  return out;
}

TedsScore mteds(const TableTree& gt, const TableTree& pred, const MtedsConfig& cfg) {
  const auto [g, p] = normalize_values(gt, pred, cfg);
  return teds(g, p);
}

}  // namespace doceval

#include <doctest.h>

#include "doceval/harness.hpp"
#include "doceval/metrics.hpp"
#include "doceval/tree_edit.hpp"
#include "support/random_tables.hpp"
#include "support/scaling.hpp"

using namespace doceval;

namespace {

TableTree column(std::initializer_list<const char*> values, bool with_tbody = true) {
  std::vector<TableNode> rows;
  for (const char* v : values) rows.push_back(make_node(Tag::tr, {make_cell(Tag::td, v)}));
  TableTree t;
  if (with_tbody) {
    t.root.children.push_back(make_node(Tag::tbody, std::move(rows)));
  } else {
    t.root.children = std::move(rows);
  }
  return t;
}

std::vector<std::string> cell_texts(const TableNode& n) {
  if (is_cell(n.tag)) return {n.text};
  std::vector<std::string> out;
  for (const auto& c : n.children) {
    auto sub = cell_texts(c);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

TableTree html(const char* src) { return parse_html_table(src).tree; }

}  // namespace

TEST_CASE("teds worked examples") {
  const TableTree ab = html("<table><tr><td>a</td><td>b</td></tr></table>");
  const TableTree ac = html("<table><tr><td>a</td><td>c</td></tr></table>");
  const TableTree a = html("<table><tr><td>a</td></tr></table>");

  CHECK(teds(ab, ab).score == 1.0);

  // distances confirmed by the exhaustive oracle first
  REQUIRE(brute_force_distance(ab, ac, teds_cost_model()).distance == doctest::Approx(1.0));
  REQUIRE(brute_force_distance(ab, a, teds_cost_model()).distance == doctest::Approx(1.0));

  const auto sub = teds(ab, ac);
  CHECK(sub.score == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(sub.denom == 4);
  const auto del = teds(ab, a);
  CHECK(del.score == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(del.denom == 4);
  CHECK(del.distance == doctest::Approx(1.0));
}

TEST_CASE("teds clamps to [0, 1]") {
  const TableTree a = html("<table><tr><td>x</td></tr></table>");
  const TableTree b = html("<table><thead><tr><th>1</th><th>2</th></tr></thead></table>");
  const auto s = teds(a, b);
  CHECK(s.score >= 0.0);
  CHECK(s.score <= 1.0);
}

TEST_CASE("parse_numeric grammar") {
  CHECK(parse_numeric("42").is_numeric);
  CHECK(parse_numeric("42").value == 42.0);
  CHECK(parse_numeric("$1,234.5").value == 1234.5);
  CHECK_FALSE(parse_numeric("3 apples").is_numeric);
  CHECK(parse_numeric("  -7.25 ").value == -7.25);
  CHECK(parse_numeric("12%").value == doctest::Approx(0.12));
  CHECK(parse_numeric("€3").value == 3.0);
  CHECK(parse_numeric("£1,000,000").value == 1e6);
  CHECK(parse_numeric("-$5").value == -5.0);
  CHECK(parse_numeric("$-5").value == -5.0);
  CHECK(parse_numeric("+2e3").value == 2000.0);
  CHECK(parse_numeric("1.5E-2").value == doctest::Approx(0.015));
  CHECK(parse_numeric("7").original_text == "7");
  for (const char* bad : {"", "-", "$", "%", "1,23", "12,3456", "1.", ".5", "1e", "1..2", "$$1", "1%%", "abc", "1 2", "0x10"}) {
    CAPTURE(bad);
    CHECK_FALSE(parse_numeric(bad).is_numeric);
  }
}

TEST_CASE("normalize_values") {
  SUBCASE("gt {5, 10}, pred 9") {
    const auto [g, p] = normalize_values(column({"5", "10"}), column({"9"}));
    CHECK(cell_texts(g.root) == std::vector<std::string>{"10", "20"});
    CHECK(cell_texts(p.root) == std::vector<std::string>{"18"});
  }
  SUBCASE("negative values keep their sign") {
    const auto [g, p] = normalize_values(column({"-5", "20"}), column({"-5", "20"}));
    CHECK(cell_texts(g.root) == std::vector<std::string>{"-5", "20"});
  }
  SUBCASE("non-numeric gt leaves both trees untouched") {
    const TableTree gt = column({"x", "y"});
    const TableTree pred = column({"1", "2"});
    const auto [g, p] = normalize_values(gt, pred);
    CHECK(g == gt);
    CHECK(p == pred);
  }
  SUBCASE("all-zero gt leaves both trees untouched") {
    const auto [g, p] = normalize_values(column({"0", "0.0"}), column({"3"}));
    CHECK(cell_texts(p.root) == std::vector<std::string>{"3"});
  }
  SUBCASE("rounding is half away from zero, no negative zero") {
    // S = 40: N(1) = round(0.5) = 1, N(-1) = -1, N(-0.1) = round(-0.05) = 0
    const auto [g, p] = normalize_values(column({"1", "-1", "-0.1", "40"}), column({"3"}));
    CHECK(cell_texts(g.root) == std::vector<std::string>{"1", "-1", "0", "20"});
    CHECK(cell_texts(p.root) == std::vector<std::string>{"2"});  // 1.5 -> 2
  }
  SUBCASE("mixed numeric and text cells") {
    const auto [g, p] = normalize_values(column({"Total", "$2,000", "50%"}), column({"Total", "1000"}));
    CHECK(cell_texts(g.root) == std::vector<std::string>{"Total", "20", "0"});
    CHECK(cell_texts(p.root) == std::vector<std::string>{"Total", "10"});
  }
  SUBCASE("scale factor is configurable") {
    const auto [g, p] = normalize_values(column({"5", "10"}), column({"9"}), MtedsConfig{100, true});
    CHECK(cell_texts(g.root) == std::vector<std::string>{"50", "100"});
    CHECK(cell_texts(p.root) == std::vector<std::string>{"90"});
  }
}

TEST_CASE("header cells are excluded from S and left as-is") {
  const char* gt_src =
      "<table><thead><tr><th>1000</th></tr></thead><tbody><tr><th>500</th><td>5</td><td>10</td></tr></tbody></table>";
  const TableTree gt = html(gt_src);
  const auto [g, p] = normalize_values(gt, gt);
  CHECK(cell_texts(g.root) == std::vector<std::string>{"1000", "500", "10", "20"});

  // changing a thead number never changes S
  const TableTree gt2 = html(
      "<table><thead><tr><th>99999</th></tr></thead><tbody><tr><th>500</th><td>5</td><td>10</td></tr></tbody></table>");
  const auto [g2, p2] = normalize_values(gt2, gt2);
  CHECK(cell_texts(g2.root)[2] == "10");

  // without exclusion the headers join V_gt and are normalized too
  const auto [g3, p3] = normalize_values(gt, gt, MtedsConfig{20, false});
  CHECK(cell_texts(g3.root) == std::vector<std::string>{"20", "10", "0", "0"});
}

TEST_CASE("mteds worked examples") {
  const TableTree gt = column({"5", "10"});
  const TableTree pred = column({"5", "9"});
  CHECK(node_count(gt) == 6);
  CHECK(mteds(gt, gt).score == 1.0);

  const auto [g, p] = normalize_values(gt, pred);
  CHECK(cell_texts(g.root) == std::vector<std::string>{"10", "20"});
  CHECK(cell_texts(p.root) == std::vector<std::string>{"10", "18"});
  const double oracle = brute_force_distance(g, p, teds_cost_model()).distance;
  // "20" vs "18" share no character: normalized Levenshtein 1
  CHECK(oracle == doctest::Approx(1.0));

  const auto s = mteds(gt, pred);
  CHECK(s.distance == doctest::Approx(oracle));
  CHECK(s.score == doctest::Approx(1.0 - 1.0 / 6.0).epsilon(1e-12));

  // x1000 in both trees
  CHECK(mteds(testing::scaled(gt, 3), testing::scaled(pred, 3)).score == s.score);
  // 11 -> "22" is one edit from "20", closer than "18"
  CHECK(mteds(gt, column({"5", "11"})).score == doctest::Approx(1.0 - 0.5 / 6.0));
}

TEST_CASE("property: identities, symmetry, range on random tables") {
  testing::TreeGen gen(5);
  const std::vector<std::string> texts{"1", "2", "10", "-3", "x", "4.5", "$7", "9%", ""};
  for (int i = 0; i < 200; ++i) {
    const TableTree a = gen.tree(14, texts);
    const TableTree b = gen.tree(14, texts);
    CHECK(teds(a, a).score == 1.0);
    CHECK(mteds(a, a).score == 1.0);
    const double ab = teds(a, b).score;
    CHECK(ab == teds(b, a).score);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    const double m = mteds(a, b).score;
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("property: mteds invariant under exact decimal scaling") {
  for (const auto& f : gen_fixtures(60, 24, 3)) {
    const TableTree gt = parse_html_table(f.record.gt).tree;
    const TableTree pred = parse_html_table(f.record.pred).tree;
    const double base = mteds(gt, pred).score;
    for (int places : {1, 3}) {
      CAPTURE(f.record.gt);
      CHECK(mteds(testing::scaled(gt, places), testing::scaled(pred, places)).score == base);
    }
  }
}

TEST_CASE("scaling helper shifts decimals exactly") {
  CHECK(testing::shift_decimal("12.5", 1) == "125");
  CHECK(testing::shift_decimal("$1,234.5", 2) == "$123450");
  CHECK(testing::shift_decimal("0.05", 1) == "0.5");
  CHECK(testing::shift_decimal("-3", 3) == "-3000");
  CHECK(testing::shift_decimal("45%", 1) == "450%");
  CHECK(testing::shift_decimal("word", 3) == "word");
}

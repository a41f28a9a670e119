#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <tuple>

#include "doceval/error.hpp"
#include "doceval/tiler.hpp"

using namespace doceval;

namespace {

struct OracleChoice {
  int rows;
  int cols;
  std::int64_t effective;
  std::int64_t waste;
};

// scale = min(W/iw, H/ih) kept as the fraction num/den, floors taken on
// exact integer products.
OracleChoice oracle(std::int64_t iw, std::int64_t ih, int max_tiles, int edge = 384) {
  std::vector<std::tuple<std::int64_t, std::int64_t, int, int, int>> keys;
  for (int r = 1; r <= max_tiles; ++r) {
    for (int c = 1; c <= max_tiles; ++c) {
      if (r * c > max_tiles) continue;
      const std::int64_t W = std::int64_t{c} * edge, H = std::int64_t{r} * edge;
      std::int64_t num = W, den = iw;
      if (H * iw < W * ih) num = H, den = ih;
      const std::int64_t eff = std::min((iw * num / den) * (ih * num / den), iw * ih);
      keys.emplace_back(-eff, W * H - eff, r * c, r, c);
    }
  }
  const auto& k = *std::min_element(keys.begin(), keys.end());
  return {std::get<3>(k), std::get<4>(k), -std::get<0>(k), std::get<1>(k)};
}

void check_partition(const TilingPlan& p) {
  REQUIRE(p.tiles.size() == static_cast<std::size_t>(p.grid.rows * p.grid.cols));
  std::int64_t area = 0;
  std::vector<std::vector<int>> cover(static_cast<std::size_t>(p.grid.rows),
                                      std::vector<int>(static_cast<std::size_t>(p.grid.cols), 0));
  for (std::size_t i = 0; i < p.tiles.size(); ++i) {
    const auto& t = p.tiles[i];
    CHECK(t.w == p.grid.tile_edge);
    CHECK(t.h == p.grid.tile_edge);
    CHECK(t.x % t.w == 0);
    CHECK(t.y % t.h == 0);
    CHECK(t.x + t.w <= p.target_w);
    CHECK(t.y + t.h <= p.target_h);
    // row-major
    CHECK(static_cast<int>(i) == (t.y / t.h) * p.grid.cols + t.x / t.w);
    ++cover[static_cast<std::size_t>(t.y / t.h)][static_cast<std::size_t>(t.x / t.w)];
    area += std::int64_t{t.w} * t.h;
  }
  CHECK(area == std::int64_t{p.target_w} * p.target_h);
  for (const auto& row : cover) {
    for (int n : row) CHECK(n == 1);
  }
}

}  // namespace

TEST_CASE("enumerate_grids") {
  const auto g = enumerate_grids();
  CHECK(g.size() == 27);
  CHECK(std::is_sorted(g.begin(), g.end(), [](const GridSpec& a, const GridSpec& b) {
    return std::tie(a.rows, a.cols) < std::tie(b.rows, b.cols);
  }));
  CHECK(g.front() == GridSpec{1, 1, 384});
  CHECK(std::any_of(g.begin(), g.end(), [](const GridSpec& s) { return s.rows == 1 && s.cols == 10; }));
  CHECK(std::any_of(g.begin(), g.end(), [](const GridSpec& s) { return s.rows == 10 && s.cols == 1; }));

  std::set<std::pair<int, int>> set;
  for (const auto& s : g) set.insert({s.rows, s.cols});
  for (const auto& [r, c] : set) CHECK(set.count({c, r}) == 1);

  CHECK(enumerate_grids(1) == std::vector<GridSpec>{{1, 1, 384}});
  const auto four = enumerate_grids(4);
  std::set<std::pair<int, int>> four_set;
  for (const auto& s : four) four_set.insert({s.rows, s.cols});
  CHECK(four_set == std::set<std::pair<int, int>>{{1, 1}, {1, 2}, {1, 3}, {1, 4}, {2, 1}, {2, 2}, {3, 1}, {4, 1}});
  CHECK(four.size() == 8);

  CHECK(enumerate_grids(10, 224).front().width() == 224);
  CHECK_THROWS_AS(enumerate_grids(0), std::invalid_argument);
}

TEST_CASE("select_grid worked examples") {
  const auto grids = enumerate_grids();

  const auto square = select_grid(384, 384, grids);
  CHECK(square.grid.rows == 1);
  CHECK(square.grid.cols == 1);
  CHECK(square.waste == 0);

  const auto wide = select_grid(1000, 380, grids);
  const auto o = oracle(1000, 380, 10);
  CHECK(o.rows == 1);
  CHECK(o.cols == 3);
  CHECK(o.effective == 380000);
  CHECK(o.waste == 62368);
  CHECK(wide.grid.rows == 1);
  CHECK(wide.grid.cols == 3);
  CHECK(wide.target_w == 1152);
  CHECK(wide.target_h == 384);
  CHECK(wide.effective == 380000);
  CHECK(wide.waste == 62368);
  CHECK(wide.scaled_w == 1010);
  CHECK(wide.scaled_h == 384);
  CHECK(wide.offset_x == 71);
  CHECK(wide.offset_y == 0);
  CHECK(wide.includes_global);

  const auto tall = select_grid(384, 3840, grids);
  CHECK(tall.grid.rows == 10);
  CHECK(tall.grid.cols == 1);
  CHECK(tall.target_w == 384);
  CHECK(tall.target_h == 3840);
  CHECK(tall.waste == 0);
}

TEST_CASE("select_grid errors") {
  CHECK_THROWS_AS(select_grid(0, 10, enumerate_grids()), std::invalid_argument);
  try {
    select_grid(10, 10, std::span<const GridSpec>{});
    FAIL("expected EmptyGridSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyGridSet);
  }
}

TEST_CASE("stage-1 grids") {
  const auto s = stage1_grids();
  CHECK(s.size() == 5);
  CHECK(std::any_of(s.begin(), s.end(), [](const GridSpec& g) {
    return g.width() == 1152 && g.height() == 384 && g.rows == 1 && g.cols == 3;
  }));
  std::set<std::pair<int, int>> res;
  for (const auto& g : s) res.insert({g.width(), g.height()});
  CHECK(res == std::set<std::pair<int, int>>{{384, 768}, {768, 384}, {768, 768}, {1152, 384}, {384, 1152}});
  const auto all = enumerate_grids(10);
  for (const auto& g : s) CHECK(std::find(all.begin(), all.end(), g) != all.end());
  CHECK(select_grid(1000, 380, s).grid == GridSpec{1, 3, 384});
}

TEST_CASE("plan JSON") {
  const auto plan = select_grid(1000, 380, enumerate_grids());
  CHECK(plan_to_json(plan) ==
        R"({"grid":{"rows":1,"cols":3},"target":[1152,384],"scaled":[1010,384],)"
        R"("tiles":[[0,0,384,384],[384,0,384,384],[768,0,384,384]],"global":true})");
}

TEST_CASE("property: selection matches the oracle and tiles partition the canvas") {
  const auto grids = enumerate_grids();
  for (int w = 1; w <= 4000; w += 37) {
    for (int h = 1; h <= 4000; h += 41) {
      const auto p = select_grid(w, h, grids);
      const auto o = oracle(w, h, 10);
      CAPTURE(w);
      CAPTURE(h);
      CHECK(p.grid.rows == o.rows);
      CHECK(p.grid.cols == o.cols);
      CHECK(p.effective == o.effective);
      CHECK(p.waste == o.waste);
      CHECK(p.scaled_w <= p.target_w);
      CHECK(p.scaled_h <= p.target_h);
      check_partition(p);
    }
  }
}

TEST_CASE("property: exact fits are chosen") {
  const auto grids = enumerate_grids();
  for (const auto& g : grids) {
    const auto p = select_grid(g.width(), g.height(), grids);
    CHECK(p.grid == g);
    CHECK(p.waste == 0);
  }
}

TEST_CASE("property: doubling the image never reduces the tile count") {
  const auto grids = enumerate_grids();
  for (int w = 1; w <= 3000; w += 13) {
    for (int h = 1; h <= 3000; h += 17) {
      const auto a = select_grid(w, h, grids);
      const auto b = select_grid(2 * w, 2 * h, grids);
      CAPTURE(w);
      CAPTURE(h);
      CHECK(b.grid.rows * b.grid.cols >= a.grid.rows * a.grid.cols);
    }
  }
}

TEST_CASE("property: determinism") {
  const auto grids = enumerate_grids();
  for (int w : {1, 77, 640, 1920}) {
    for (int h : {1, 480, 1080, 5000}) CHECK(select_grid(w, h, grids) == select_grid(w, h, grids));
  }
}

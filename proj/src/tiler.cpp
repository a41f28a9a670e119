#include "doceval/tiler.hpp"

#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "doceval/error.hpp"

namespace doceval {

std::vector<GridSpec> enumerate_grids(int max_tiles, int tile_edge) {
  if (max_tiles < 1) throw std::invalid_argument("max_tiles must be >= 1");
  if (tile_edge < 1) throw std::invalid_argument("tile_edge must be >= 1");
  std::vector<GridSpec> grids;
  for (int rows = 1; rows <= max_tiles; ++rows) {
    for (int cols = 1; rows * cols <= max_tiles; ++cols) grids.push_back({rows, cols, tile_edge});
  }
  return grids;
}

std::vector<GridSpec> stage1_grids(int tile_edge) {
  // (384, 768), (768, 384), (768, 768), (1152, 384), (384, 1152) as (W, H)
  return {{2, 1, tile_edge}, {1, 2, tile_edge}, {2, 2, tile_edge}, {1, 3, tile_edge}, {3, 1, tile_edge}};
}

namespace {

struct Fit {
  std::int64_t scaled_w;
  std::int64_t scaled_h;
  std::int64_t effective;
  std::int64_t waste;
};

Fit fit_into(std::int64_t iw, std::int64_t ih, std::int64_t W, std::int64_t H) {
  Fit f{};
  if (W * ih <= H * iw) {  // width is the binding side
    f.scaled_w = W;
    f.scaled_h = ih * W / iw;
  } else {
    f.scaled_h = H;
    f.scaled_w = iw * H / ih;
  }
  f.effective = std::min(f.scaled_w * f.scaled_h, iw * ih);
  f.waste = W * H - f.effective;
  return f;
}

}  // namespace

TilingPlan select_grid(int image_w, int image_h, std::span<const GridSpec> grids) {
  if (image_w < 1 || image_h < 1) throw std::invalid_argument("image dimensions must be >= 1");
  if (grids.empty()) throw Error(ErrorCode::EmptyGridSet, "no candidate grids");

  const GridSpec* best = nullptr;
  Fit best_fit{};
  for (const auto& g : grids) {
    const Fit f = fit_into(image_w, image_h, g.width(), g.height());
    if (best == nullptr) {
      best = &g, best_fit = f;
      continue;
    }
    const auto key = [](const GridSpec& s, const Fit& x) {
      return std::make_tuple(-x.effective, x.waste, s.rows * s.cols, s.rows, s.cols);
    };
    if (key(g, f) < key(*best, best_fit)) best = &g, best_fit = f;
  }

  TilingPlan plan;
  plan.grid = *best;
  plan.target_w = best->width();
  plan.target_h = best->height();
  plan.scaled_w = static_cast<int>(best_fit.scaled_w);
  plan.scaled_h = static_cast<int>(best_fit.scaled_h);
  plan.offset_x = (plan.target_w - plan.scaled_w) / 2;
  plan.offset_y = (plan.target_h - plan.scaled_h) / 2;
  plan.effective = best_fit.effective;
  plan.waste = best_fit.waste;
  for (int r = 0; r < best->rows; ++r) {
    for (int c = 0; c < best->cols; ++c) {
      plan.tiles.push_back({c * best->tile_edge, r * best->tile_edge, best->tile_edge, best->tile_edge});
    }
  }
  plan.includes_global = true;
  return plan;
}

std::string plan_to_json(const TilingPlan& plan) {
  nlohmann::ordered_json j;
  j["grid"] = {{"rows", plan.grid.rows}, {"cols", plan.grid.cols}};
  j["target"] = {plan.target_w, plan.target_h};
  j["scaled"] = {plan.scaled_w, plan.scaled_h};
  j["tiles"] = nlohmann::ordered_json::array();
  for (const auto& t : plan.tiles) j["tiles"].push_back({t.x, t.y, t.w, t.h});
  j["global"] = plan.includes_global;
  return j.dump();
}

}  // namespace doceval

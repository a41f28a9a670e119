#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace doceval {

inline constexpr int kDefaultTileEdge = 384;
inline constexpr int kDefaultMaxTiles = 10;

struct GridSpec {
  int rows = 1;
  int cols = 1;
  int tile_edge = kDefaultTileEdge;

  // (width, height) = (cols * edge, rows * edge)
  int width() const noexcept { return cols * tile_edge; }
  int height() const noexcept { return rows * tile_edge; }

  bool operator==(const GridSpec&) const = default;
};

struct TileRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const TileRect&) const = default;
};

struct TilingPlan {
  GridSpec grid;
  int target_w = 0;
  int target_h = 0;
  int scaled_w = 0;  // aspect-preserving fit of the image inside the target
  int scaled_h = 0;
  int offset_x = 0;  // the fitted image is centered on the target canvas
  int offset_y = 0;
  std::int64_t effective = 0;
  std::int64_t waste = 0;
  std::vector<TileRect> tiles;  // row-major
  bool includes_global = true;

  bool operator==(const TilingPlan&) const = default;
};

// Every (rows, cols) with rows * cols <= max_tiles, sorted by (rows, cols).
std::vector<GridSpec> enumerate_grids(int max_tiles = kDefaultMaxTiles,
                                      int tile_edge = kDefaultTileEdge);

// Picks the grid that preserves the most image pixels, then pads least, then
// uses fewest tiles, then smallest (rows, cols). Throws Error{EmptyGridSet}.
TilingPlan select_grid(int image_w, int image_h, std::span<const GridSpec> grids);

// The five scales used during projector pre-training.
std::vector<GridSpec> stage1_grids(int tile_edge = kDefaultTileEdge);

std::string plan_to_json(const TilingPlan& plan);

}  // namespace doceval

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

#include "doceval/table_model.hpp"

namespace doceval {

struct TedsScore {
  double score = 1.0;     // clamp(1 - distance / denom, 0, 1)
  double distance = 0.0;
  std::size_t denom = 1;  // max node count of the two trees
};

struct NumericCellView {
  bool is_numeric = false;
  double value = 0.0;
  std::string original_text;
};

struct MtedsConfig {
  int scale_factor = 20;
  bool exclude_headers = true;
};

TedsScore teds(const TableTree& gt, const TableTree& pred);

// Accepts optional sign, one leading currency symbol ($ € £), grouped
// thousands commas, fraction, exponent and one trailing %. Percent values
// are divided by 100.
NumericCellView parse_numeric(std::string_view text);

// Rewrites every numeric body cell of both trees to round(scale * v / S),
// where S is the largest |v| among ground-truth body cells. With
// exclude_headers, cells under <thead> and <th> cells are left untouched and
// do not contribute to S. Returns the inputs unchanged when S is 0 or no
// ground-truth cell is numeric.
std::pair<TableTree, TableTree> normalize_values(const TableTree& gt, const TableTree& pred,
                                                 const MtedsConfig& cfg = {});

TedsScore mteds(const TableTree& gt, const TableTree& pred, const MtedsConfig& cfg = {});

}  // namespace doceval

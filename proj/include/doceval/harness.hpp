#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "doceval/metrics.hpp"
#include "doceval/sav_io.hpp"
#include "doceval/table_model.hpp"

namespace doceval {

enum class TableFormat { html, md };
enum class Metric { teds, mteds };

std::string_view to_string(TableFormat f) noexcept;
std::string_view to_string(Metric m) noexcept;
std::optional<TableFormat> parse_table_format(std::string_view s) noexcept;

struct EvalRecord {
  std::string id;
  std::string gt;
  std::string pred;
  std::optional<TableFormat> format;  // falls back to the run-level format
};

// One JSON object per line with string fields id, gt, pred and optional
// format ("html" | "md"). Throws Error{MalformedRecord} with the line number,
// including for duplicate ids.
std::vector<EvalRecord> read_records(std::istream& in);
std::vector<EvalRecord> read_records(const std::filesystem::path& path);

ParsedTable parse_table(std::string_view src, TableFormat format);

struct ExampleScore {
  std::string id;
  double score = 0.0;
  std::optional<double> distance;
  std::size_t warnings_count = 0;
  std::optional<std::string> error;
  bool gt_error = false;  // excluded from the mean regardless of skip_errors
};

struct ScoreReport {
  Metric metric = Metric::teds;
  std::size_t n = 0;  // examples contributing to mean
  double mean = 0.0;
  std::vector<ExampleScore> per_example;  // input order

  bool has_gt_errors() const noexcept;
};

struct EvalOptions {
  Metric metric = Metric::teds;
  TableFormat format = TableFormat::html;
  MtedsConfig mteds;
  int jobs = 1;
  bool skip_errors = false;  // drop prediction failures from n and mean
};

// Scores every record on a pool of `jobs` workers. A prediction that fails
// to parse scores 0 with its error code; a ground truth that fails to parse
// marks the record as a gt error. Aggregation follows input order.
ScoreReport run_eval(std::span<const EvalRecord> records, const EvalOptions& opts);

ExampleScore score_record(const EvalRecord& record, const EvalOptions& opts);

std::string report_to_json(const ScoreReport& report);
std::string report_to_csv(const ScoreReport& report);  // id,score,distance

struct Mutation {
  enum class Kind { cell_edit, row_drop, span_change };
  Kind kind = Kind::cell_edit;
  std::size_t row = 0;  // body row index at the time the mutation is applied
  std::size_t col = 0;
  std::string before;   // cell_edit: old text
  std::string after;    // cell_edit: new text
  int rowspan = 1;      // span_change: new spans
  int colspan = 1;
};

std::string_view to_string(Mutation::Kind k) noexcept;

struct FixtureRecord {
  EvalRecord record;
  std::vector<Mutation> mutations;
};

// Seeded random HTML tables (<= max_nodes nodes each) paired with mutated
// predictions. Body rows are the <tr> children of <tbody>, or of <table> when
// there is no <tbody>; header rows are never mutated.
std::vector<FixtureRecord> gen_fixtures(std::size_t count, std::size_t max_nodes, std::uint64_t seed);

std::string fixture_to_jsonl(const FixtureRecord& f);

void convert_dump(const std::filesystem::path& in_path, sav::DumpFormat in_format,
                  const std::filesystem::path& out_path, sav::DumpFormat out_format);

}  // namespace doceval

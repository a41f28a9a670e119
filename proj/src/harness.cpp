#include "doceval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <random>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "doceval/error.hpp"

namespace doceval {

using ojson = nlohmann::ordered_json;

std::string_view to_string(TableFormat f) noexcept { return f == TableFormat::html ? "html" : "md"; }
std::string_view to_string(Metric m) noexcept { return m == Metric::teds ? "teds" : "mteds"; }

std::optional<TableFormat> parse_table_format(std::string_view s) noexcept {
  if (s == "html") return TableFormat::html;
  if (s == "md") return TableFormat::md;
  return std::nullopt;
}

std::string_view to_string(Mutation::Kind k) noexcept {
  switch (k) {
    case Mutation::Kind::cell_edit: return "cell_edit";
    case Mutation::Kind::row_drop: return "row_drop";
    case Mutation::Kind::span_change: return "span_change";
  }
  return "?";
}

std::vector<EvalRecord> read_records(std::istream& in) {
  std::vector<EvalRecord> records;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(line_no);
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, where + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, where + ": expected a JSON object");
    EvalRecord r;
    for (const char* key : {"id", "gt", "pred"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw Error(ErrorCode::MalformedRecord, where + ": missing string field '" + key + "'");
      }
    }
    r.id = j["id"].get<std::string>();
    r.gt = j["gt"].get<std::string>();
    r.pred = j["pred"].get<std::string>();
    if (j.contains("format") && !j["format"].is_null()) {
      const auto f = j["format"].is_string() ? parse_table_format(j["format"].get<std::string>()) : std::nullopt;
      if (!f) throw Error(ErrorCode::MalformedRecord, where + ": 'format' must be \"html\" or \"md\"");
      r.format = f;
    }
    if (!ids.insert(r.id).second) {
      throw Error(ErrorCode::MalformedRecord, where + ": duplicate id '" + r.id + "'");
    }
    records.push_back(std::move(r));
  }
  if (in.bad()) throw Error(ErrorCode::DatasetUnreadable, "read failed after line " + std::to_string(line_no));
  return records;
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::DatasetUnreadable, "cannot open " + path.string());
  return read_records(in);
}

ParsedTable parse_table(std::string_view src, TableFormat format) {
  return format == TableFormat::html ? parse_html_table(src) : parse_md_table(src);
}

ExampleScore score_record(const EvalRecord& record, const EvalOptions& opts) {
  ExampleScore out;
  out.id = record.id;
  const TableFormat format = record.format.value_or(opts.format);

  ParsedTable gt;
  try {
    gt = parse_table(record.gt, format);
  } catch (const Error& e) {
    out.gt_error = true;
    out.error = "gt:" + std::string(to_string(e.code()));
    return out;
  }
  out.warnings_count = gt.diagnostics.warnings.size();

  ParsedTable pred;
  try {
    pred = parse_table(record.pred, format);
  } catch (const Error& e) {
    out.error = std::string(to_string(e.code()));
    return out;
  }
  out.warnings_count += pred.diagnostics.warnings.size();

  const TedsScore s = opts.metric == Metric::teds ? teds(gt.tree, pred.tree)
                                                  : mteds(gt.tree, pred.tree, opts.mteds);
  out.score = s.score;
  out.distance = s.distance;
  return out;
}

bool ScoreReport::has_gt_errors() const noexcept {
  return std::any_of(per_example.begin(), per_example.end(), [](const ExampleScore& e) { return e.gt_error; });
}

ScoreReport run_eval(std::span<const EvalRecord> records, const EvalOptions& opts) {
  ScoreReport report;
  report.metric = opts.metric;
  report.per_example.resize(records.size());

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opts.jobs, 1)), 1,
                                                      std::max<std::size_t>(records.size(), 1));
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      report.per_example[i] = score_record(records[i], opts);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  double sum = 0.0;
  for (const auto& e : report.per_example) {
    if (e.gt_error || (e.error && opts.skip_errors)) continue;
    ++report.n;
    sum += e.score;
  }
  report.mean = report.n ? sum / static_cast<double>(report.n) : 0.0;
  return report;
}

std::string report_to_json(const ScoreReport& report) {
  ojson j;
  j["metric"] = to_string(report.metric);
  j["n"] = report.n;
  j["mean"] = report.mean;
  j["per_example"] = ojson::array();
  for (const auto& e : report.per_example) {
    ojson x;
    x["id"] = e.id;
    x["score"] = e.score;
    x["distance"] = e.distance ? ojson(*e.distance) : ojson(nullptr);
    x["warnings_count"] = e.warnings_count;
    x["error"] = e.error ? ojson(*e.error) : ojson(nullptr);
    j["per_example"].push_back(std::move(x));
  }
  return j.dump(2) + '\n';
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string report_to_csv(const ScoreReport& report) {
  std::string out = "id,score,distance\n";
  for (const auto& e : report.per_example) {
    out += csv_field(e.id) + ',' + shortest(e.score) + ',' + (e.distance ? shortest(*e.distance) : "") + '\n';
  }
  return out;
}

namespace {

constexpr const char* kHeaderWords[] = {"Year", "Region", "Revenue", "Count", "Share", "Label", "Value", "Total"};
constexpr const char* kWords[] = {"alpha", "beta", "gamma", "north", "south", "Q1", "Q2", "n/a", "total", "other"};

class FixtureRng {
 public:
  explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n). Plain modulo keeps the stream identical across
  // standard libraries, unlike std::uniform_int_distribution.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  bool chance(unsigned percent) { return below(100) < percent; }

  std::string cell_text() {
    const std::size_t kind = below(8);
    if (kind == 0) return kWords[below(std::size(kWords))];
    const std::size_t a = below(kind == 4 ? 9 : kind == 6 ? 10 : kind == 7 ? 100000 : 1000);
    const std::size_t b = below(1000);
    switch (kind) {
      case 1: return std::to_string(a);
      case 2: return std::to_string(a % 100) + "." + std::to_string(b % 10);
      case 3: return "-" + std::to_string(1 + a % 500);
      case 4: return "$" + std::to_string(1 + a) + "," + pad3(b);
      case 5: return std::to_string(a % 100) + "%";
      case 6: return std::to_string(a) + "." + pad2(b % 100);
      default: return std::to_string(a);
    }
  }

 private:
  static std::string pad3(std::size_t v) {
    std::string s = std::to_string(v);
    return std::string(3 - s.size(), '0') + s;
  }
  static std::string pad2(std::size_t v) {
    std::string s = std::to_string(v);
    return std::string(2 - s.size(), '0') + s;
  }

  std::mt19937_64 engine_;
};

TableNode& body_container(TableTree& tree) {
  for (auto& child : tree.root.children) {
    if (child.tag == Tag::tbody) return child;
  }
  return tree.root;
}

std::vector<TableNode>& body_rows(TableTree& tree) { return body_container(tree).children; }

TableTree random_table(FixtureRng& rng, std::size_t max_nodes) {
  bool thead = rng.chance(50);
  bool tbody = thead || rng.chance(70);
  std::size_t cols = 1 + rng.below(4);
  std::size_t rows = 1 + rng.below(5);
  const auto count = [&] { return 1 + (thead ? 2 + cols : 0) + (tbody ? 1 : 0) + rows * (1 + cols); };
  while (count() > max_nodes) {
    if (rows > 1) {
      --rows;
    } else if (thead) {
      thead = false;
    } else if (cols > 1) {
      --cols;
    } else {
      tbody = false;
    }
  }

  TableTree t;
  if (thead) {
    TableNode tr = make_node(Tag::tr);
    for (std::size_t c = 0; c < cols; ++c) tr.children.push_back(make_cell(Tag::th, kHeaderWords[rng.below(std::size(kHeaderWords))]));
    t.root.children.push_back(make_node(Tag::thead, {std::move(tr)}));
  }
  std::vector<TableNode> body;
  for (std::size_t r = 0; r < rows; ++r) {
    TableNode tr = make_node(Tag::tr);
    for (std::size_t c = 0; c < cols; ++c) {
      TableNode cell = make_cell(Tag::td, rng.cell_text());
      if (rng.chance(8)) cell.rowspan = 2 + static_cast<int>(rng.below(2));
      if (rng.chance(8)) cell.colspan = 2 + static_cast<int>(rng.below(2));
      tr.children.push_back(std::move(cell));
    }
    body.push_back(std::move(tr));
  }
  if (tbody) {
    t.root.children.push_back(make_node(Tag::tbody, std::move(body)));
  } else {
    for (auto& tr : body) t.root.children.push_back(std::move(tr));
  }
  return t;
}

Mutation mutate(FixtureRng& rng, TableTree& tree) {
  auto& rows = body_rows(tree);
  Mutation m;
  const std::size_t pick = rng.below(3);
  if (pick == 0 && rows.size() > 1) {
    m.kind = Mutation::Kind::row_drop;
    m.row = rng.below(rows.size());
    rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(m.row));
    return m;
  }
  m.row = rng.below(rows.size());
  auto& cells = rows[m.row].children;
  m.col = rng.below(cells.size());
  TableNode& cell = cells[m.col];
  if (pick == 2) {
    m.kind = Mutation::Kind::span_change;
    do {
      m.rowspan = 1 + static_cast<int>(rng.below(3));
      m.colspan = 1 + static_cast<int>(rng.below(3));
    } while (m.rowspan == cell.rowspan && m.colspan == cell.colspan);
    cell.rowspan = m.rowspan;
    cell.colspan = m.colspan;
    return m;
  }
  m.kind = Mutation::Kind::cell_edit;
  m.before = cell.text;
  do {
    m.after = rng.cell_text();
  } while (m.after == m.before);
  cell.text = m.after;
  return m;
}

}  // namespace

std::vector<FixtureRecord> gen_fixtures(std::size_t count, std::size_t max_nodes, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  if (max_nodes < 3) throw std::invalid_argument("max_nodes must be >= 3");
  FixtureRng rng(seed);
  std::vector<FixtureRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TableTree gt = random_table(rng, max_nodes);
    TableTree pred = gt;
    FixtureRecord f;
    const std::size_t mutations = rng.below(4);
    for (std::size_t k = 0; k < mutations; ++k) f.mutations.push_back(mutate(rng, pred));
    char id[32];
    std::snprintf(id, sizeof id, "fx-%06zu", i);
    f.record = {id, serialize_html(gt), serialize_html(pred), TableFormat::html};
    out.push_back(std::move(f));
  }
  return out;
}

std::string fixture_to_jsonl(const FixtureRecord& f) {
  ojson j;
  j["id"] = f.record.id;
  j["gt"] = f.record.gt;
  j["pred"] = f.record.pred;
  j["format"] = to_string(f.record.format.value_or(TableFormat::html));
  j["mutations"] = ojson::array();
  for (const auto& m : f.mutations) {
    ojson x;
    x["op"] = to_string(m.kind);
    x["row"] = m.row;
    if (m.kind != Mutation::Kind::row_drop) x["col"] = m.col;
    if (m.kind == Mutation::Kind::cell_edit) {
      x["from"] = m.before;
      x["to"] = m.after;
    } else if (m.kind == Mutation::Kind::span_change) {
      x["rowspan"] = m.rowspan;
      x["colspan"] = m.colspan;
    }
    j["mutations"].push_back(std::move(x));
  }
  return j.dump() + '\n';
}

void convert_dump(const std::filesystem::path& in_path, sav::DumpFormat in_format,
                  const std::filesystem::path& out_path, sav::DumpFormat out_format) {
  sav::save_dump(sav::load_dump(in_path, in_format), out_path, out_format);
}

}  // namespace doceval

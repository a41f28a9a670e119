// doceval: batch TEDS/mTEDS scoring, SAV head selection and classification,
// AnyRes tile planning and fixture generation.
//
// Exit codes: 0 success, 1 usage error, 2 dataset or ground-truth parse
// error, 3 dump or model format error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "doceval/error.hpp"
#include "doceval/harness.hpp"
#include "doceval/sav.hpp"
#include "doceval/sav_io.hpp"
#include "doceval/tiler.hpp"

namespace {

using namespace doceval;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDataset = 2;
constexpr int kExitFormat = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    sav::write_file(out_path, text);
  }
}

struct EvalArgs {
  std::string gt_pred;
  std::string format = "html";
  int jobs = 1;
  std::string out;
  bool csv = false;
  bool skip_errors = false;
  int scale_factor = 20;
  bool no_header_exclusion = false;
};

int run_metric(Metric metric, const EvalArgs& args) {
  EvalOptions opts;
  opts.metric = metric;
  const auto format = parse_table_format(args.format);
  if (!format) throw UsageError("--format must be html or md");
  opts.format = *format;
  opts.jobs = args.jobs;
  opts.skip_errors = args.skip_errors;
  opts.mteds.scale_factor = args.scale_factor;
  opts.mteds.exclude_headers = !args.no_header_exclusion;

  const auto records = read_records(args.gt_pred);
  const auto report = run_eval(records, opts);
  emit(args.out, args.csv ? report_to_csv(report) : report_to_json(report));
  if (report.has_gt_errors()) {
    std::cerr << "doceval: some ground-truth tables failed to parse\n";
    return kExitDataset;
  }
  return kExitOk;
}

int sav_fit(const std::string& dump_path, int k, bool loo, const std::string& out) {
  const auto dump = sav::load_dump(dump_path);
  std::vector<std::string> warnings;
  const auto model = sav::fit(dump, k, loo, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  emit(out, sav::model_to_json(model));
  return kExitOk;
}

int sav_score_heads(const std::string& dump_path, bool loo, const std::string& out) {
  const auto table = sav::score_heads(sav::load_dump(dump_path), loo);
  std::string csv = "layer,head,score\n";
  for (const auto& h : table) {
    csv += std::to_string(h.head.layer) + ',' + std::to_string(h.head.head) + ',' + std::to_string(h.score) + '\n';
  }
  emit(out, csv);
  return kExitOk;
}

int sav_classify(const std::string& model_path, const std::string& dump_path, const std::string& out) {
  const auto model = sav::load_model(model_path);
  const auto dump = sav::load_dump(dump_path);
  std::string lines;
  for (const auto& ex : dump.examples) {
    const auto p = sav::classify(model, ex.vectors, ex.id);
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["label"] = model.labels[static_cast<std::size_t>(p.label)];
    j["votes"] = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < model.labels.size(); ++c) j["votes"][model.labels[c]] = p.votes[c];
    j["per_head"] = nlohmann::ordered_json::array();
    for (const auto& v : p.per_head) {
      j["per_head"].push_back({{"layer", v.head_id.layer},
                               {"head", v.head_id.head},
                               {"label", model.labels[static_cast<std::size_t>(v.label)]},
                               {"similarity", v.similarity}});
    }
    lines += j.dump() + '\n';
  }
  emit(out, lines);
  return kExitOk;
}

int sav_eval(const std::string& model_path, const std::string& dump_path) {
  const auto ev = sav::evaluate(sav::load_model(model_path), sav::load_dump(dump_path));
  std::printf("accuracy %.6f\n", ev.accuracy);
  for (const auto& c : ev.per_class) {
    const double acc = c.total ? static_cast<double>(c.correct) / c.total : 0.0;
    std::printf("class %s %d/%d %.6f\n", c.label.c_str(), c.correct, c.total, acc);
  }
  return kExitOk;
}

sav::DumpFormat dump_format_arg(const std::string& name, const std::string& path) {
  if (name == "savd") return sav::DumpFormat::savd;
  if (name == "jsonl") return sav::DumpFormat::jsonl;
  if (name.empty()) {
    const auto ext = std::filesystem::path(path).extension();
    if (ext == ".savd") return sav::DumpFormat::savd;
    if (ext == ".jsonl") return sav::DumpFormat::jsonl;
  }
  throw UsageError("cannot determine dump format of '" + path + "'; pass savd or jsonl");
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoTableFound:
    case ErrorCode::EncodingError:
    case ErrorCode::DatasetUnreadable:
    case ErrorCode::MalformedRecord:
      return kExitDataset;
    default:
      return kExitFormat;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document-extraction metrics, SAV safety heads and AnyRes tiling"};
  app.require_subcommand(1);

  EvalArgs teds_args, mteds_args;
  auto* teds_cmd = app.add_subcommand("teds", "Score predictions with TEDS");
  auto* mteds_cmd = app.add_subcommand("mteds", "Score chart extractions with value-normalized TEDS");
  for (auto [cmd, a] : {std::pair{teds_cmd, &teds_args}, std::pair{mteds_cmd, &mteds_args}}) {
    cmd->add_option("--gt-pred", a->gt_pred, "JSONL records {id, gt, pred[, format]}")->required();
    cmd->add_option("--format", a->format, "Table syntax when a record has none")->check(CLI::IsMember({"html", "md"}));
    cmd->add_option("--jobs", a->jobs, "Worker threads")->envname("DOCEVAL_JOBS")->check(CLI::PositiveNumber);
    cmd->add_option("--out", a->out, "Report path (stdout when omitted)");
  }
  teds_cmd->add_flag("--csv", teds_args.csv, "Write id,score,distance CSV instead of JSON");
  teds_cmd->add_flag("--skip-errors", teds_args.skip_errors, "Leave unparseable predictions out of the mean");
  mteds_cmd->add_option("--scale-factor", mteds_args.scale_factor, "Normalization scale")->check(CLI::PositiveNumber);
  mteds_cmd->add_flag("--no-header-exclusion", mteds_args.no_header_exclusion, "Normalize header cells too");
  mteds_cmd->add_flag("--csv", mteds_args.csv, "Write id,score,distance CSV instead of JSON");
  mteds_cmd->add_flag("--skip-errors", mteds_args.skip_errors, "Leave unparseable predictions out of the mean");

  auto* sav_cmd = app.add_subcommand("sav", "Sparse attention vector classifier");
  sav_cmd->require_subcommand(1);
  std::string dump_path, model_path, out_path, in_path, in_format, out_format;
  int k = 20;
  bool loo = false;
  auto* fit_cmd = sav_cmd->add_subcommand("fit", "Select top-k heads and store class centroids");
  fit_cmd->add_option("--dump", dump_path, "Few-shot dump (.savd or .jsonl)")->required();
  fit_cmd->add_option("--k", k, "Number of heads to keep")->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--leave-one-out", loo, "Score heads with held-out centroids");
  fit_cmd->add_option("--out", out_path, "Model JSON path")->required();
  auto* score_cmd = sav_cmd->add_subcommand("score-heads", "Write per-head nearest-centroid scores");
  score_cmd->add_option("--dump", dump_path)->required();
  score_cmd->add_flag("--leave-one-out", loo);
  score_cmd->add_option("--out", out_path, "CSV path (layer,head,score)")->required();
  auto* classify_cmd = sav_cmd->add_subcommand("classify", "Predict labels by majority vote");
  classify_cmd->add_option("--model", model_path)->required();
  classify_cmd->add_option("--dump", dump_path)->required();
  classify_cmd->add_option("--out", out_path, "Predictions JSONL path")->required();
  auto* eval_cmd = sav_cmd->add_subcommand("eval", "Report accuracy on a labeled dump");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--dump", dump_path)->required();
  auto* convert_cmd = sav_cmd->add_subcommand("convert", "Convert between SAVD and JSONL dumps");
  convert_cmd->add_option("--in", in_path)->required();
  convert_cmd->add_option("--out", out_path)->required();
  convert_cmd->add_option("--in-format", in_format)->check(CLI::IsMember({"savd", "jsonl"}));
  convert_cmd->add_option("--out-format", out_format)->check(CLI::IsMember({"savd", "jsonl"}));

  auto* tile_cmd = app.add_subcommand("tile", "AnyRes tiling");
  tile_cmd->require_subcommand(1);
  int width = 0, height = 0, max_tiles = kDefaultMaxTiles, tile_edge = kDefaultTileEdge;
  bool stage1 = false;
  auto* plan_cmd = tile_cmd->add_subcommand("plan", "Choose a grid for an image size");
  plan_cmd->add_option("--width", width)->required()->check(CLI::PositiveNumber);
  plan_cmd->add_option("--height", height)->required()->check(CLI::PositiveNumber);
  plan_cmd->add_option("--max-tiles", max_tiles)->check(CLI::PositiveNumber);
  plan_cmd->add_option("--tile-edge", tile_edge)->check(CLI::PositiveNumber);
  plan_cmd->add_flag("--stage1", stage1, "Restrict to the five pre-training scales");

  auto* gen_cmd = app.add_subcommand("gen", "Generate test data");
  gen_cmd->require_subcommand(1);
  std::size_t count = 0, max_nodes = 0;
  std::uint64_t seed = 0;
  auto* fixtures_cmd = gen_cmd->add_subcommand("fixtures", "Random gt/pred table pairs with mutation logs");
  fixtures_cmd->add_option("--count", count)->required()->check(CLI::PositiveNumber);
  fixtures_cmd->add_option("--max-nodes", max_nodes)->required()->check(CLI::Range(3, 1 << 20));
  fixtures_cmd->add_option("--seed", seed)->required();
  fixtures_cmd->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*teds_cmd) return run_metric(Metric::teds, teds_args);
    if (*mteds_cmd) return run_metric(Metric::mteds, mteds_args);
    if (*fit_cmd) return sav_fit(dump_path, k, loo, out_path);
    if (*score_cmd) return sav_score_heads(dump_path, loo, out_path);
    if (*classify_cmd) return sav_classify(model_path, dump_path, out_path);
    if (*eval_cmd) return sav_eval(model_path, dump_path);
    if (*convert_cmd) {
      convert_dump(in_path, dump_format_arg(in_format, in_path), out_path, dump_format_arg(out_format, out_path));
      return kExitOk;
    }
    if (*plan_cmd) {
      const auto grids = stage1 ? stage1_grids(tile_edge) : enumerate_grids(max_tiles, tile_edge);
      std::cout << plan_to_json(select_grid(width, height, grids)) << '\n';
      return kExitOk;
    }
    if (*fixtures_cmd) {
      std::string text;
      for (const auto& f : gen_fixtures(count, max_nodes, seed)) text += fixture_to_jsonl(f);
      sav::write_file(out_path, text);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "doceval: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "doceval: " << e.what() << '\n';
    if (e.code() == ErrorCode::IoError) return *teds_cmd || *mteds_cmd ? kExitDataset : kExitFormat;
    return exit_code_for(e.code());
  } catch (const std::invalid_argument& e) {
    std::cerr << "doceval: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

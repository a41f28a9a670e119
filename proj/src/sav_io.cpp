#include "doceval/sav_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace doceval::sav {
namespace {

using ojson = nlohmann::ordered_json;
// binary32 numbers so that JSONL floats print and parse as shortest float text
using json32 = nlohmann::basic_json<nlohmann::ordered_map, std::vector, std::string, bool,
                                    std::int64_t, std::uint64_t, float>;

constexpr char kMagic[4] = {'S', 'A', 'V', 'D'};

void put_u16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>(v >> 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out += static_cast<char>((v >> shift) & 0xFF);
}

void put_string(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedFile, std::string("file ends inside ") + what + " at byte " +
                                                std::to_string(pos_));
    }
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    const auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(i)]);
    return v;
  }

  std::uint16_t u16(const char* what) {
    const auto s = take(2, what);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[0]) |
                                      (static_cast<unsigned char>(s[1]) << 8));
  }

  std::string string(const char* what) {
    const std::uint32_t n = u32(what);
    return std::string(take(n, what));
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string hex_bytes(std::string_view s) {
  std::string out;
  char buf[4];
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%02X", static_cast<unsigned char>(s[i]));
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

[[noreturn]] void bad_model(const std::string& why) { throw Error(ErrorCode::BadModel, why); }

int checked_int(const ojson& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) bad_model(std::string("missing integer '") + key + "'");
  return j.at(key).get<int>();
}

}  // namespace

std::string encode_savd(const AttentionDump& dump) {
  dump.validate();
  std::string out(kMagic, 4);
  put_u16(out, kSavdVersion);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(dump.layers));
  put_u32(out, static_cast<std::uint32_t>(dump.heads));
  put_u32(out, static_cast<std::uint32_t>(dump.dim));
  put_u32(out, static_cast<std::uint32_t>(dump.labels.size()));
  for (const auto& label : dump.labels) put_string(out, label);
  put_u32(out, static_cast<std::uint32_t>(dump.examples.size()));
  for (const auto& ex : dump.examples) {
    put_string(out, ex.id);
    put_u32(out, static_cast<std::uint32_t>(ex.label));
    const auto& data = ex.vectors.data();
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      for (Eigen::Index c = 0; c < data.cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(data(r, c)));
    }
  }
  return out;
}

AttentionDump decode_savd(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorCode::BadMagic,
                "expected 53 41 56 44, found " + hex_bytes(bytes.substr(0, std::min<std::size_t>(4, bytes.size()))));
  }
  ByteReader in(bytes.substr(4));
  const auto version = in.u16("header");
  if (version != kSavdVersion) {
    throw Error(ErrorCode::VersionUnsupported, "SAVD version " + std::to_string(version));
  }
  in.u16("header");  // reserved
  AttentionDump dump;
  const std::uint32_t L = in.u32("header");
  const std::uint32_t M = in.u32("header");
  const std::uint32_t D = in.u32("header");
  if (L == 0 || M == 0 || D == 0 || L > 1u << 20 || M > 1u << 20 || D > 1u << 24) {
    throw Error(ErrorCode::DimMismatch, "implausible dump shape " + std::to_string(L) + "x" +
                                            std::to_string(M) + "x" + std::to_string(D));
  }
  dump.layers = static_cast<int>(L);
  dump.heads = static_cast<int>(M);
  dump.dim = static_cast<int>(D);
  const std::uint32_t C = in.u32("label count");
  for (std::uint32_t c = 0; c < C; ++c) dump.labels.push_back(in.string("label"));
  const std::uint32_t N = in.u32("example count");
  const std::uint64_t values = std::uint64_t{L} * M * D;
  for (std::uint32_t n = 0; n < N; ++n) {
    DumpExample ex;
    ex.id = in.string("example id");
    ex.label = static_cast<std::int32_t>(in.u32("label index"));
    if (in.remaining() < values * 4) {
      throw Error(ErrorCode::TruncatedFile, "file ends inside vectors of example '" + ex.id + "'");
    }
    ex.vectors = AttentionTensorf(dump.layers, dump.heads, dump.dim);
    auto& data = ex.vectors.data();
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = std::bit_cast<float>(in.u32("vectors"));
    }
    dump.examples.push_back(std::move(ex));
  }
  if (in.remaining() != 0) {
    throw Error(ErrorCode::TruncatedFile, std::to_string(in.remaining()) + " trailing bytes after last example");
  }
  dump.validate();
  return dump;
}

std::string encode_jsonl(const AttentionDump& dump) {
  dump.validate();
  std::vector<int> appearance;
  for (const auto& ex : dump.examples) {
    if (ex.label >= 0 && std::find(appearance.begin(), appearance.end(), ex.label) == appearance.end()) {
      appearance.push_back(ex.label);
    }
  }
  bool header = dump.examples.empty() || appearance.size() != dump.labels.size();
  for (std::size_t i = 0; !header && i < appearance.size(); ++i) header = appearance[i] != static_cast<int>(i);

  std::string out;
  if (header) {
    ojson h;
    h["labels"] = dump.labels;
    h["layers"] = dump.layers;
    h["heads"] = dump.heads;
    h["dim"] = dump.dim;
    out += h.dump() + '\n';
  }
  for (const auto& ex : dump.examples) {
    json32 line;
    line["id"] = ex.id;
    line["label"] = ex.label < 0 ? json32(nullptr) : json32(dump.labels[static_cast<std::size_t>(ex.label)]);
    json32 layers = json32::array();
    for (int l = 0; l < dump.layers; ++l) {
      json32 heads = json32::array();
      for (int m = 0; m < dump.heads; ++m) {
        json32 values = json32::array();
        const auto row = ex.vectors.head(l, m);
        for (Eigen::Index d = 0; d < row.size(); ++d) {
          const float v = row(d);
          if (!std::isfinite(v)) {
            throw Error(ErrorCode::DimMismatch, "example '" + ex.id + "' has a non-finite value; JSONL cannot carry it");
          }
          values.push_back(v);
        }
        heads.push_back(std::move(values));
      }
      layers.push_back(std::move(heads));
    }
    line["vectors"] = std::move(layers);
    out += line.dump() + '\n';
  }
  return out;
}

AttentionDump decode_jsonl(std::string_view text) {
  AttentionDump dump;
  bool shaped = false;
  bool vocab_fixed = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json32 j;
    try {
      j = json32::parse(line);
    } catch (const json32::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto where = "line " + std::to_string(line_no);
    if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, where + ": expected an object");

    if (!j.contains("id") && j.contains("labels")) {
      if (line_no != 1) throw Error(ErrorCode::MalformedRecord, where + ": header must be the first line");
      try {
        dump.labels = j.at("labels").get<std::vector<std::string>>();
        dump.layers = j.at("layers").get<int>();
        dump.heads = j.at("heads").get<int>();
        dump.dim = j.at("dim").get<int>();
      } catch (const json32::exception& e) {
        throw Error(ErrorCode::MalformedRecord, where + ": bad header: " + e.what());
      }
      shaped = vocab_fixed = true;
      continue;
    }
    if (!j.contains("id") || !j["id"].is_string() || !j.contains("vectors") || !j["vectors"].is_array()) {
      throw Error(ErrorCode::MalformedRecord, where + ": needs string 'id' and array 'vectors'");
    }
    DumpExample ex;
    ex.id = j["id"].get<std::string>();
    const json32& vec = j["vectors"];
    const auto mismatch = [&] {
      return Error(ErrorCode::DimMismatch, "example '" + ex.id + "' (" + where + ") has ragged or mismatched vectors");
    };
    if (!shaped) {
      if (vec.empty() || !vec[0].is_array() || vec[0].empty() || !vec[0][0].is_array() || vec[0][0].empty()) {
        throw mismatch();
      }
      dump.layers = static_cast<int>(vec.size());
      dump.heads = static_cast<int>(vec[0].size());
      dump.dim = static_cast<int>(vec[0][0].size());
      shaped = true;
    }
    if (vec.size() != static_cast<std::size_t>(dump.layers)) throw mismatch();
    ex.vectors = AttentionTensorf(dump.layers, dump.heads, dump.dim);
    for (int l = 0; l < dump.layers; ++l) {
      const json32& layer = vec[static_cast<std::size_t>(l)];
      if (!layer.is_array() || layer.size() != static_cast<std::size_t>(dump.heads)) throw mismatch();
      for (int m = 0; m < dump.heads; ++m) {
        const json32& head = layer[static_cast<std::size_t>(m)];
        if (!head.is_array() || head.size() != static_cast<std::size_t>(dump.dim)) throw mismatch();
        auto row = ex.vectors.head(l, m);
        for (int d = 0; d < dump.dim; ++d) {
          const json32& v = head[static_cast<std::size_t>(d)];
          if (!v.is_number()) throw mismatch();
          row(d) = v.get<float>();
        }
      }
    }
    const json32 label = j.value("label", json32(nullptr));
    if (label.is_string()) {
      const auto name = label.get<std::string>();
      const auto it = std::find(dump.labels.begin(), dump.labels.end(), name);
      if (it != dump.labels.end()) {
        ex.label = static_cast<int>(it - dump.labels.begin());
      } else if (vocab_fixed) {
        throw Error(ErrorCode::UnknownLabel, "example '" + ex.id + "' has label '" + name + "' missing from the header");
      } else {
        dump.labels.push_back(name);
        ex.label = static_cast<int>(dump.labels.size()) - 1;
      }
    } else if (!label.is_null()) {
      throw Error(ErrorCode::MalformedRecord, where + ": 'label' must be a string or null");
    }
    dump.examples.push_back(std::move(ex));
  }
  if (!shaped) throw Error(ErrorCode::EmptyDump, "JSONL dump has no examples and no header");
  dump.validate();
  return dump;
}

DumpFormat detect_dump_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".savd") return DumpFormat::savd;
  if (ext == ".jsonl") return DumpFormat::jsonl;
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::equal(magic, magic + 4, kMagic) ? DumpFormat::savd : DumpFormat::jsonl;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

AttentionDump load_dump(const std::filesystem::path& path, DumpFormat format) {
  const auto bytes = read_file(path);
  return format == DumpFormat::savd ? decode_savd(bytes) : decode_jsonl(bytes);
}

AttentionDump load_dump(const std::filesystem::path& path) { return load_dump(path, detect_dump_format(path)); }

void save_dump(const AttentionDump& dump, const std::filesystem::path& path, DumpFormat format) {
  write_file(path, format == DumpFormat::savd ? encode_savd(dump) : encode_jsonl(dump));
}

std::string model_to_json(const SavModel& model) {
  ojson j;
  j["version"] = 1;
  j["labels"] = model.labels;
  j["k"] = model.k;
  j["dim"] = model.dim;
  j["heads"] = ojson::array();
  for (const auto& head : model.heads) {
    ojson h;
    h["layer"] = head.head_id.layer;
    h["head"] = head.head_id.head;
    h["score"] = head.score;
    ojson rows = ojson::array();
    for (Eigen::Index c = 0; c < head.centroids.rows(); ++c) {
      ojson row = ojson::array();
      for (Eigen::Index d = 0; d < head.centroids.cols(); ++d) row.push_back(head.centroids(c, d));
      rows.push_back(std::move(row));
    }
    h["centroids"] = std::move(rows);
    j["heads"].push_back(std::move(h));
  }
  return j.dump(2) + '\n';
}

SavModel model_from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    bad_model(e.what());
  }
  if (!j.is_object()) bad_model("model must be a JSON object");
  if (checked_int(j, "version") != 1) bad_model("unsupported model version");
  SavModel model;
  if (!j.contains("labels") || !j["labels"].is_array()) bad_model("missing 'labels'");
  for (const auto& l : j["labels"]) {
    if (!l.is_string()) bad_model("labels must be strings");
    model.labels.push_back(l.get<std::string>());
  }
  if (model.labels.size() < 2) bad_model("model needs at least two labels");
  model.k = checked_int(j, "k");
  model.dim = checked_int(j, "dim");
  if (model.k < 1 || model.dim < 1) bad_model("'k' and 'dim' must be positive");
  if (!j.contains("heads") || !j["heads"].is_array()) bad_model("missing 'heads'");
  const auto classes = static_cast<Eigen::Index>(model.labels.size());
  for (const auto& h : j["heads"]) {
    if (!h.is_object()) bad_model("head entries must be objects");
    SelectedHead head;
    head.head_id = {checked_int(h, "layer"), checked_int(h, "head")};
    head.score = checked_int(h, "score");
    if (head.head_id.layer < 0 || head.head_id.head < 0) bad_model("negative head index");
    if (!h.contains("centroids") || !h["centroids"].is_array() ||
        h["centroids"].size() != static_cast<std::size_t>(classes)) {
      bad_model("head needs one centroid per label");
    }
    head.centroids.resize(classes, model.dim);
    for (Eigen::Index c = 0; c < classes; ++c) {
      const auto& row = h["centroids"][static_cast<std::size_t>(c)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(model.dim)) bad_model("centroid length must equal 'dim'");
      for (Eigen::Index d = 0; d < model.dim; ++d) {
        const auto& v = row[static_cast<std::size_t>(d)];
        if (!v.is_number()) bad_model("centroid values must be numbers");
        head.centroids(c, d) = v.get<double>();
      }
    }
    model.heads.push_back(std::move(head));
  }
  if (model.heads.empty()) bad_model("model has no heads");
  return model;
}

void save_model(const SavModel& model, const std::filesystem::path& path) { write_file(path, model_to_json(model)); }

SavModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

}  // namespace doceval::sav

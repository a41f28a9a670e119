#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "doceval/sav.hpp"

namespace doceval::sav {

// SAVD layout (little-endian):
//   "SAVD" | u16 version=1 | u16 reserved=0 | u32 L | u32 M | u32 D | u32 C
//   C x (u32 len + UTF-8 label) | u32 N
//   N x (u32 len + UTF-8 id | i32 label (-1 unlabeled) | L*M*D binary32)
inline constexpr std::uint16_t kSavdVersion = 1;

std::string encode_savd(const AttentionDump& dump);
AttentionDump decode_savd(std::string_view bytes);

// One {"id", "label", "vectors": [L][M][D]} object per line. Labels are
// assigned indices in order of first appearance. When that order cannot
// reproduce the dump's vocabulary (unused or reordered labels, or no
// examples to carry the shape) the writer prepends one header line
// {"labels": [...], "layers": L, "heads": M, "dim": D}.
std::string encode_jsonl(const AttentionDump& dump);
AttentionDump decode_jsonl(std::string_view text);

enum class DumpFormat { savd, jsonl };

// By extension (.savd / .jsonl), falling back to sniffing the magic bytes.
DumpFormat detect_dump_format(const std::filesystem::path& path);

AttentionDump load_dump(const std::filesystem::path& path, DumpFormat format);
AttentionDump load_dump(const std::filesystem::path& path);
void save_dump(const AttentionDump& dump, const std::filesystem::path& path, DumpFormat format);

// {"version":1,"labels":[...],"k":..,"dim":..,"heads":[{"layer","head","score","centroids"}]}
std::string model_to_json(const SavModel& model);
SavModel model_from_json(std::string_view text);

void save_model(const SavModel& model, const std::filesystem::path& path);
SavModel load_model(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace doceval::sav

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace engage {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a 64-bit digest, used to stamp reports with the identity of their
// inputs so any report can be traced back to exact input bytes.
uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(uint64_t d);
std::string file_digest(const std::string& path);

// Provenance header embedded in every emitted report.
struct ReportMeta {
  uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // (name, digest)
};

// TSV reports carry the meta as leading '#' comment lines.
void write_meta_tsv(std::ostream& os, const ReportMeta& meta);
nlohmann::json meta_json(const ReportMeta& meta);

// Fixed-width decimal formatting so TSV bytes are reproducible.
std::string format_fixed(double v, int decimals);

}  // namespace engage

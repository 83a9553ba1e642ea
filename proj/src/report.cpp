#include "engage/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "engage/errors.hpp"

namespace engage {

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(uint64_t d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(d));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return digest_hex(fnv1a64(ss.str()));
}

void write_meta_tsv(std::ostream& os, const ReportMeta& meta) {
  os << "# engage_version=" << kVersion << "\n";
  os << "# seed=" << meta.seed << "\n";
  for (const auto& [name, digest] : meta.inputs) {
    os << "# " << name << "_digest=" << digest << "\n";
  }
}

nlohmann::json meta_json(const ReportMeta& meta) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [name, digest] : meta.inputs) inputs[name] = digest;
  return {{"engage_version", kVersion}, {"seed", meta.seed}, {"inputs", inputs}};
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace engage

#include "ncensus/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ncensus {

namespace {

constexpr char kMagic[4] = {'N', 'C', 'F', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <class T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof buf)) throw FormatError("field file truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

nlohmann::json field_header(const FieldSample& sample) {
  return {{"model", sample.model()}, {"grid", sample.grid()}, {"seed", sample.seed()}, {"index", sample.index()}};
}

void write_field(const std::filesystem::path& path, const FieldSample& sample) {
  const std::string header = field_header(sample).dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_le<std::uint64_t>(out, sample.values().size());
  for (double v : sample.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw FormatError("write failed for " + path.string());

  std::ofstream side(path.string() + ".json");
  side << field_header(sample).dump(2) << '\n';
}

FieldSample read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path.string() + ": not an NCFS file");
  if (get_le<std::uint32_t>(in) != kVersion) throw FormatError(path.string() + ": unsupported NCFS version");
  const auto header_len = get_le<std::uint32_t>(in);
  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len)) throw FormatError("field file truncated");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  const auto count = get_le<std::uint64_t>(in);
  std::vector<double> values(count);
  for (auto& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return FieldSample(h.at("model").get<SpectralModel>(), h.at("grid").get<GridSpec>(), std::move(values),
                     h.at("seed").get<std::uint64_t>(), h.at("index").get<std::uint64_t>());
}

}  // namespace ncensus

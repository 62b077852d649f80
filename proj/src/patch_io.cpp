#include "focus/patch_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "focus/error.hpp"

namespace focus {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

}  // namespace

void write_patch(const PatchStack& patch, std::ostream& out) {
  patch.validate_structure();
  if (patch.channels.empty()) throw ValidationError("write_patch: patch has no channels");
  const RasterGrid& ref = patch.channels.front().grid;

  nlohmann::json header;
  header["size_p"] = patch.size;
  header["cell_size"] = ref.cell_size();
  header["origin"] = {ref.origin().easting, ref.origin().northing};
  header["center"] = {patch.center.easting, patch.center.northing};
  header["nodata"] = ref.nodata();
  auto& chans = header["channels"] = nlohmann::json::array();
  for (const auto& ch : patch.channels) {
    chans.push_back({{"name", ch.name}, {"role", std::string(role_name(ch.role))}});
  }
  const std::string text = header.dump();

  out.write(kPatchMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  std::vector<unsigned char> buf(static_cast<std::size_t>(patch.size) * patch.size * 4);
  for (const auto& ch : patch.channels) {
    std::size_t k = 0;
    for (double v : ch.grid.values()) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      buf[k++] = static_cast<unsigned char>(bits);
      buf[k++] = static_cast<unsigned char>(bits >> 8);
      buf[k++] = static_cast<unsigned char>(bits >> 16);
      buf[k++] = static_cast<unsigned char>(bits >> 24);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("write_patch: stream write failed");
}

void write_patch(const PatchStack& patch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_patch(patch, out);
}

PatchStack read_patch(std::istream& in) {
  unsigned char head[8];
  if (!in.read(reinterpret_cast<char*>(head), 8)) throw FormatError("read_patch: truncated header");
  if (std::memcmp(head, kPatchMagic, 4) != 0) throw FormatError("read_patch: bad magic bytes");
  const std::uint32_t header_len = get_u32(head + 4);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) throw FormatError("read_patch: truncated JSON header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("read_patch: malformed JSON header: ") + e.what());
  }

  PatchStack patch;
  double cell_size = 0.0;
  Coord origin;
  double nodata = kDefaultNodata;
  std::vector<std::pair<std::string, ChannelRole>> layout;
  try {
    patch.size = header.at("size_p").get<int>();
    cell_size = header.at("cell_size").get<double>();
    origin = {header.at("origin").at(0).get<double>(), header.at("origin").at(1).get<double>()};
    nodata = header.at("nodata").get<double>();
    for (const auto& ch : header.at("channels")) {
      layout.emplace_back(ch.at("name").get<std::string>(), parse_role(ch.at("role").get<std::string>()));
    }
    if (header.contains("center")) {
      patch.center = {header["center"].at(0).get<double>(), header["center"].at(1).get<double>()};
    } else {
      patch.center = {origin.easting + (patch.size / 2 + 0.5) * cell_size,
                      origin.northing - (patch.size / 2 + 0.5) * cell_size};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("read_patch: header is missing fields: ") + e.what());
  }
  if (patch.size <= 0 || !(cell_size > 0.0)) throw FormatError("read_patch: invalid size_p or cell_size");

  const std::size_t count = static_cast<std::size_t>(patch.size) * patch.size;
  std::vector<unsigned char> buf(count * 4);
  for (auto& [name, role] : layout) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw CorruptionError("read_patch: channel '" + name + "' is shorter than " + std::to_string(count) +
                            " values");
    }
    RasterGrid grid(patch.size, patch.size, cell_size, origin, 0.0, nodata);
    auto vals = grid.values();
    for (std::size_t i = 0; i < count; ++i) {
      vals[i] = static_cast<double>(std::bit_cast<float>(get_u32(buf.data() + 4 * i)));
    }
    patch.channels.push_back({name, role, std::move(grid)});
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CorruptionError("read_patch: trailing bytes after the last channel");
  }
  patch.validate_structure();
  return patch;
}

PatchStack read_patch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_patch(in);
}

PatchStack quantize_to_disk_precision(PatchStack patch) {
  for (auto& ch : patch.channels) {
    for (double& v : ch.grid.values()) v = static_cast<double>(static_cast<float>(v));
  }
  return patch;
}

}  // namespace focus

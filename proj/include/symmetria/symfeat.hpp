#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "symmetria/features.hpp"

namespace symmetria {

static_assert(std::endian::native == std::endian::little, "SYMFEAT I/O assumes a little-endian host");

/// What the paired view bundle says the feature file must contain.
struct FeatureShape {
  std::size_t viewpoints = 0;
  int resolution = 0;
};

namespace detail {

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class ByteCursor {
 public:
  explicit ByteCursor(const std::string& data) : data_(data) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > data_.size()) throw Error(std::string("SYMFEAT: truncated file while reading ") + what);
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void read_floats(std::vector<float>& out, std::size_t n) {
    if (n > (data_.size() - pos_) / sizeof(float)) throw Error("SYMFEAT: truncated file while reading grid data");
    out.resize(n);
    std::memcpy(out.data(), data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint32_t kSymfeatVersion = 1;

/// SYMFEAT v1: "SYMF", u32 version, u32 grid count, then per grid u32
/// view_id, rotation_k, h, w, D followed by h*w*D float32, all little-endian.
inline std::string encode_symfeat(const std::vector<PatchFeatureGrid>& grids) {
  std::string out = "SYMF";
  detail::put<std::uint32_t>(out, kSymfeatVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(grids.size()));
  for (const auto& g : grids) {
    if (g.data.size() != static_cast<std::size_t>(g.h) * g.w * g.dim) throw Error("SYMFEAT: grid data size mismatch");
    for (auto v : {g.view_id, g.rotation_k, g.h, g.w, g.dim}) detail::put<std::uint32_t>(out, v);
    const auto* bytes = reinterpret_cast<const char*>(g.data.data());
    out.append(bytes, g.data.size() * sizeof(float));
  }
  return out;
}

inline void export_features(const std::vector<PatchFeatureGrid>& grids, const std::filesystem::path& path) {
  const std::string bytes = encode_symfeat(grids);
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw Error("cannot write feature file " + path.string());
}

/// Parses and validates a SYMFEAT v1 image. With `expected`, also checks the
/// grid count (4 rotations per viewpoint), the (view, rotation) coverage and
/// that every grid tiles the rendered resolution; patch sizes are derived
/// from the resolution.
inline std::vector<PatchFeatureGrid> decode_symfeat(const std::string& data,
                                                    const std::optional<FeatureShape>& expected = std::nullopt) {
  detail::ByteCursor cur(data);
  char magic[4];
  for (char& c : magic) c = cur.get<char>("magic");
  if (std::string(magic, 4) != "SYMF") throw Error("SYMFEAT: bad magic");
  const auto version = cur.get<std::uint32_t>("version");
  if (version != kSymfeatVersion) throw Error("SYMFEAT: unsupported version " + std::to_string(version));
  const auto count = cur.get<std::uint32_t>("grid count");
  if (expected && count != 4 * expected->viewpoints)
    throw Error("SYMFEAT: manifest mismatch: " + std::to_string(count) + " grids for " +
                std::to_string(expected->viewpoints) + " viewpoints (expected 4 per viewpoint)");

  std::vector<PatchFeatureGrid> grids;
  grids.reserve(std::min<std::size_t>(count, 4096));
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    PatchFeatureGrid g;
    g.view_id = cur.get<std::uint32_t>("view id");
    g.rotation_k = cur.get<std::uint32_t>("rotation");
    g.h = cur.get<std::uint32_t>("height");
    g.w = cur.get<std::uint32_t>("width");
    g.dim = cur.get<std::uint32_t>("dimension");
    if (g.rotation_k > 3) throw Error("SYMFEAT: rotation k out of range in grid " + std::to_string(i));
    if (g.h == 0 || g.w == 0 || g.dim == 0) throw Error("SYMFEAT: empty grid " + std::to_string(i));
    const std::size_t n = static_cast<std::size_t>(g.h) * g.w * g.dim;
    cur.read_floats(g.data, n);
    for (float v : g.data)
      if (!std::isfinite(v)) throw Error("SYMFEAT: non-finite value in grid " + std::to_string(i));
    if (!grids.empty() && g.dim != grids.front().dim) throw Error("SYMFEAT: inconsistent feature width");
    if (!seen.insert({g.view_id, g.rotation_k}).second)
      throw Error("SYMFEAT: duplicate (view, rotation) pair in grid " + std::to_string(i));
    if (expected) {
      if (g.view_id >= expected->viewpoints) throw Error("SYMFEAT: manifest mismatch: unknown view id " + std::to_string(g.view_id));
      if (g.h != g.w || expected->resolution % static_cast<int>(g.h) != 0)
        throw Error("SYMFEAT: manifest mismatch: grid " + std::to_string(i) + " does not tile the resolution");
      g.patch_size = static_cast<std::uint32_t>(expected->resolution) / g.h;
    }
    grids.push_back(std::move(g));
  }
  if (!cur.at_end()) throw Error("SYMFEAT: " + std::to_string(cur.remaining()) + " trailing bytes");
  return grids;
}

inline std::vector<PatchFeatureGrid> import_features(const std::filesystem::path& path,
                                                     const std::optional<FeatureShape>& expected = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_symfeat(data, expected);
}

}  // namespace symmetria

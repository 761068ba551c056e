#pragma once

#include <filesystem>
#include <fstream>

#include "symmetria/net.hpp"
#include "symmetria/symfeat.hpp"

namespace symmetria {

inline constexpr std::uint32_t kSymwVersion = 1;

/// SYMW: "SYMW", u32 version, u32 width count, u32 widths..., u32 heads,
/// then every parameter as float64 in ModelParams::flatten order.
inline std::string encode_model(const ModelParams& params) {
  const ModelConfig cfg = params.config();
  std::string out = "SYMW";
  detail::put<std::uint32_t>(out, kSymwVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.widths.size()));
  for (int w : cfg.widths) detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.heads));
  const Eigen::VectorXd flat = params.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) detail::put<double>(out, flat[i]);
  return out;
}

inline ModelParams decode_model(const std::string& data) {
  detail::ByteCursor cur(data);
  char magic[4];
  for (char& c : magic) c = cur.get<char>("magic");
  if (std::string(magic, 4) != "SYMW") throw Error("SYMW: bad magic");
  if (const auto v = cur.get<std::uint32_t>("version"); v != kSymwVersion)
    throw Error("SYMW: unsupported version " + std::to_string(v));
  ModelConfig cfg;
  cfg.widths.resize(cur.get<std::uint32_t>("width count"));
  if (cfg.widths.size() < 2 || cfg.widths.size() > 64) throw Error("SYMW: implausible layer count");
  for (int& w : cfg.widths) {
    w = static_cast<int>(cur.get<std::uint32_t>("width"));
    if (w <= 0 || w > (1 << 16)) throw Error("SYMW: implausible layer width");
  }
  cfg.heads = static_cast<int>(cur.get<std::uint32_t>("heads"));
  if (cfg.heads < 1 || cfg.heads > 1024) throw Error("SYMW: implausible head count");
  ModelParams p = init_model(cfg, 0);
  Eigen::VectorXd flat(static_cast<Eigen::Index>(p.parameter_count()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = cur.get<double>("parameters");
  if (!cur.at_end()) throw Error("SYMW: trailing bytes");
  p.unflatten(flat);
  return p;
}

inline void save_model(const ModelParams& params, const std::filesystem::path& path) {
  const std::string bytes = encode_model(params);
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw Error("cannot write model file " + path.string());
}

inline ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(data);
}

}  // namespace symmetria

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rdn/errors.hpp"
#include "rdn/tensor_net/mlp.hpp"

namespace rdn {

// Snapshot layout (little-endian):
//   8 bytes   magic "RDNMLP01"
//   u32       scalar width in bytes (8 = f64, 4 = f32)
//   u32       layer count
//   per layer:
//     u32     rows (fan_out)
//     u32     cols (fan_in)
//     u32     activation (0 = identity, 1 = relu)
//     rows*cols scalars, W row-major
//     rows scalars, b
static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline constexpr std::array<char, 8> kSnapshotMagic = {'R', 'D', 'N', 'M', 'L', 'P', '0', '1'};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated snapshot");
  return v;
}

template <typename T>
void write_scalar(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_scalar(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated snapshot");
  return v;
}

}  // namespace detail

template <typename T>
void write_snapshot(const Mlp<T>& net, std::ostream& out) {
  out.write(kSnapshotMagic.data(), kSnapshotMagic.size());
  detail::write_u32(out, sizeof(T));
  detail::write_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& layer : net.layers()) {
    detail::write_u32(out, static_cast<std::uint32_t>(layer.fan_out()));
    detail::write_u32(out, static_cast<std::uint32_t>(layer.fan_in()));
    detail::write_u32(out, static_cast<std::uint32_t>(layer.activation));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) detail::write_scalar(out, layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) detail::write_scalar(out, layer.bias(r));
  }
  if (!out) throw IoError("failed writing snapshot");
}

template <typename T>
Mlp<T> read_snapshot(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kSnapshotMagic) throw IoError("not an MLP snapshot (bad magic)");
  const auto width = detail::read_u32(in);
  if (width != sizeof(T)) {
    throw ConfigError("snapshot scalar width " + std::to_string(width) + " does not match requested width " +
                      std::to_string(sizeof(T)));
  }
  const auto count = detail::read_u32(in);
  std::vector<DenseLayer<T>> layers(count);
  for (auto& layer : layers) {
    const auto rows = detail::read_u32(in);
    const auto cols = detail::read_u32(in);
    const auto act = detail::read_u32(in);
    if (act > 1) throw IoError("snapshot has an unknown activation code");
    layer.activation = static_cast<Activation>(act);
    layer.weight.resize(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) layer.weight(r, c) = detail::read_scalar<T>(in);
    }
    layer.bias.resize(rows);
    for (std::uint32_t r = 0; r < rows; ++r) layer.bias(r) = detail::read_scalar<T>(in);
  }
  return Mlp<T>(std::move(layers));
}

template <typename T>
void save_snapshot(const Mlp<T>& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_snapshot(net, out);
}

template <typename T>
Mlp<T> load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_snapshot<T>(in);
}

}  // namespace rdn

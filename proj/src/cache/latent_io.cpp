// SPDX-License-Identifier: Apache-2.0

#include "chai/cache/latent_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"

namespace chai::cache {

namespace {

constexpr char kMagic[4] = {'C', 'H', 'A', 'I'};

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xffu));
}

template <typename T>
T get_le(std::span<const std::byte> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(std::to_integer<unsigned>(in[offset + i])) << (8 * i);
  }
  return value;
}

}  // namespace

std::size_t serialized_size(const LatentShape& shape) {
  return kLatentHeaderBytes + shape.element_count() * sizeof(float);
}

std::vector<std::byte> serialize(const Latent& latent) {
  if (latent.step_index() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("step_index does not fit the u16 header field");
  }
  std::vector<std::byte> out;
  out.reserve(serialized_size(latent.shape()));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint16_t>(out, kLatentFormatVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(latent.step_index()));
  put_le<std::uint32_t>(out, latent.shape().frames);
  put_le<std::uint32_t>(out, latent.shape().tokens_per_frame);
  put_le<std::uint32_t>(out, latent.shape().channels);
  for (float v : latent.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Latent deserialize(std::span<const std::byte> bytes) {
  if (bytes.size() < kLatentHeaderBytes) throw ParseError("latent: truncated header");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw ParseError("latent: bad magic");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kLatentFormatVersion) {
    throw ParseError("latent: unsupported version " + std::to_string(version));
  }
  const auto step = get_le<std::uint16_t>(bytes, 6);
  const LatentShape shape{get_le<std::uint32_t>(bytes, 8), get_le<std::uint32_t>(bytes, 12),
                          get_le<std::uint32_t>(bytes, 16)};
  const std::size_t n = shape.element_count();
  if (bytes.size() != kLatentHeaderBytes + n * sizeof(float)) {
    throw ParseError("latent: payload size " + std::to_string(bytes.size() - kLatentHeaderBytes) +
                     " does not match header dims");
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kLatentHeaderBytes + 4 * i));
  }
  try {
    return Latent(shape, step, std::move(data));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("latent: ") + e.what());
  }
}

void write_latent_file(const std::filesystem::path& path, const Latent& latent) {
  const auto bytes = serialize(latent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Latent read_latent_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace chai::cache

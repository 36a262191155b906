#pragma once

// Binary ensemble container, version 1.0. All fields little-endian.
//
//   offset  size  field
//   0       8     magic "SWINGGP\0"
//   8       4     u32 format major (1)
//   12      4     u32 format minor (0)
//   16      8     u64 N (realizations)
//   24      8     u64 K (steps; K+1 time points)
//   32      8     f64 dt
//   40      8     variable order, ASCII "TWP" + 5 zero bytes (θ, ω, P'_m)
//   48      8     u64 master seed
//   56      48    f64 p_max, h_inertia, damping, p_m_mean, omega_b, omega_s
//   104     16    f64 sigma, lambda
//   120     24    f64 t_end, init_theta, init_omega
//   144     8     u64 init_pm_mode (0 = sample stationary, 1 = fixed)
//   152     8     f64 init_pm_value
//   160     ...   N*(K+1)*3 f64, realization-major: for n { for k { θ, ω, P'_m } }
//   end-8   8     u64 FNV-1a 64 checksum of every preceding byte

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "swinggp/ensemble.hpp"
#include "swinggp/errors.hpp"

namespace swinggp {

inline constexpr std::uint32_t kEnsembleFormatMajor = 1;
inline constexpr std::uint32_t kEnsembleFormatMinor = 0;
inline constexpr std::size_t kEnsembleHeaderBytes = 160;
inline constexpr char kEnsembleMagic[8] = {'S', 'W', 'I', 'N', 'G', 'G', 'P', '\0'};

namespace detail {

[[nodiscard]] inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

class ByteWriter {
public:
  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
  void reserve(std::size_t n) { buf_.reserve(n); }
  [[nodiscard]] std::vector<unsigned char>& bytes() { return buf_; }

private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
public:
  ByteReader(const std::vector<unsigned char>& buf, std::size_t pos) : buf_(buf), pos_(pos) {}
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void skip(std::size_t n) { pos_ += n; }
  [[nodiscard]] std::size_t pos() const { return pos_; }

private:
  const std::vector<unsigned char>& buf_;
  std::size_t pos_;
};

}  // namespace detail

/// Serialized bytes of `ens`, including the trailing checksum.
[[nodiscard]] inline std::vector<unsigned char> encode_ensemble(const Ensemble& ens) {
  const std::size_t n = ens.n_realizations();
  const std::size_t points = ens.n_times();
  detail::ByteWriter w;
  w.reserve(kEnsembleHeaderBytes + n * points * kNumVariables * 8 + 8);

  w.put_bytes(kEnsembleMagic, sizeof(kEnsembleMagic));
  w.put_u32(kEnsembleFormatMajor);
  w.put_u32(kEnsembleFormatMinor);
  w.put_u64(n);
  w.put_u64(ens.n_steps());
  w.put_f64(ens.dt());
  const char order[8] = {'T', 'W', 'P', 0, 0, 0, 0, 0};
  w.put_bytes(order, sizeof(order));
  w.put_u64(ens.master_seed());

  const GridParams& g = ens.grid();
  for (double v : {g.p_max, g.h_inertia, g.damping, g.p_m_mean, g.omega_b, g.omega_s}) w.put_f64(v);
  w.put_f64(ens.ou().sigma);
  w.put_f64(ens.ou().lambda);
  const SimConfig& s = ens.sim();
  w.put_f64(s.t_end);
  w.put_f64(s.init_theta);
  w.put_f64(s.init_omega);
  w.put_u64(static_cast<std::uint64_t>(s.init_pm_mode));
  w.put_f64(s.init_pm_value);

  const Eigen::MatrixXd& data = ens.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < points; ++k) {
      for (Variable v : kAllVariables) {
        w.put_f64(data(static_cast<Eigen::Index>(r), ens.column_index(v, k)));
      }
    }
  }
  auto& bytes = w.bytes();
  w.put_u64(detail::fnv1a64(bytes.data(), bytes.size()));
  return std::move(w.bytes());
}

[[nodiscard]] inline Ensemble decode_ensemble(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 16) throw ChecksumMismatch("ensemble file truncated");
  if (std::memcmp(bytes.data(), kEnsembleMagic, sizeof(kEnsembleMagic)) != 0) {
    throw IoError("not a swinggp ensemble file");
  }
  detail::ByteReader r(bytes, 8);
  const std::uint32_t major = r.u32();
  const std::uint32_t minor = r.u32();
  if (major != kEnsembleFormatMajor) {
    throw FormatVersionMismatch("ensemble format " + std::to_string(major) + "." +
                                std::to_string(minor) + " not supported (reader is " +
                                std::to_string(kEnsembleFormatMajor) + "." +
                                std::to_string(kEnsembleFormatMinor) + ")");
  }
  if (bytes.size() < kEnsembleHeaderBytes + 8) throw ChecksumMismatch("ensemble file truncated");

  const std::uint64_t n = r.u64();
  const std::uint64_t steps = r.u64();
  const std::size_t points = steps + 1;
  const std::size_t payload = n * points * kNumVariables * 8;
  if (bytes.size() != kEnsembleHeaderBytes + payload + 8) {
    throw ChecksumMismatch("ensemble file size does not match its header (truncated or padded)");
  }
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) {
    stored |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
  }
  if (stored != detail::fnv1a64(bytes.data(), bytes.size() - 8)) {
    throw ChecksumMismatch("ensemble file checksum mismatch");
  }

  SimConfig sim;
  sim.dt = r.f64();
  if (bytes[r.pos()] != 'T' || bytes[r.pos() + 1] != 'W' || bytes[r.pos() + 2] != 'P') {
    throw IoError("unsupported variable order in ensemble file");
  }
  r.skip(8);
  sim.seed = r.u64();
  GridParams g;
  g.p_max = r.f64();
  g.h_inertia = r.f64();
  g.damping = r.f64();
  g.p_m_mean = r.f64();
  g.omega_b = r.f64();
  g.omega_s = r.f64();
  OuParams ou;
  ou.sigma = r.f64();
  ou.lambda = r.f64();
  sim.t_end = r.f64();
  sim.init_theta = r.f64();
  sim.init_omega = r.f64();
  sim.init_pm_mode = static_cast<InitPmMode>(r.u64());
  sim.init_pm_value = r.f64();
  if (sim.steps() != steps) throw IoError("ensemble header: t_end / dt disagrees with K");

  Eigen::MatrixXd data(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(kNumVariables * points));
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t k = 0; k < points; ++k) {
      for (std::size_t v = 0; v < kNumVariables; ++v) {
        data(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(v * points + k)) = r.f64();
      }
    }
  }
  return Ensemble(g, ou, sim, std::move(data));
}

inline void save_ensemble(const Ensemble& ens, const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_ensemble(ens);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

[[nodiscard]] inline Ensemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed: " + path.string());
  return decode_ensemble(bytes);
}

/// Checksum stored in the trailing 8 bytes of an encoded ensemble.
[[nodiscard]] inline std::uint64_t ensemble_checksum(const Ensemble& ens) {
  const auto bytes = encode_ensemble(ens);
  return detail::fnv1a64(bytes.data(), bytes.size() - 8);
}

}  // namespace swinggp

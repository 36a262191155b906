#pragma once

#include <cstdint>
#include <random>

namespace swinggp {

/// Identifies one independent random stream: realization `index` under `master_seed`.
struct StreamId {
  std::uint64_t master_seed = 0;
  std::uint64_t index = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Standard-normal stream keyed by (master seed, realization index).
///
/// Each realization owns its engine, so draws never depend on how realizations
/// are scheduled across threads.
class NormalStream {
public:
  explicit NormalStream(StreamId id) : id_(id), engine_(seed_engine(id)) {}

  double operator()() { return dist_(engine_); }

  [[nodiscard]] StreamId id() const noexcept { return id_; }

private:
  static std::mt19937_64 seed_engine(StreamId id) {
    std::seed_seq seq{static_cast<std::uint32_t>(id.master_seed),
                      static_cast<std::uint32_t>(id.master_seed >> 32),
                      static_cast<std::uint32_t>(id.index),
                      static_cast<std::uint32_t>(id.index >> 32), 0x5eed5eedu};
    return std::mt19937_64(seq);
  }

  StreamId id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace swinggp

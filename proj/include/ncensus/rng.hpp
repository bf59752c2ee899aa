#pragma once

#include <array>
#include <cstdint>

namespace ncensus {

/// Philox4x32-10 block function: ten rounds, two-word key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based Gaussian stream. A (master_seed, stream_id) pair fully
/// determines the sequence of draws; distinct stream ids give independent
/// streams without any shared state.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed), stream_id_(stream_id) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Box-Muller, no rejection, so the counter advances
  /// deterministically).
  double gaussian() noexcept;

 private:
  void refill() noexcept;

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ncensus

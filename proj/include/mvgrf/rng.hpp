#pragma once

#include <array>
#include <cstdint>

namespace mvgrf {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Domain-separation tags so the same (seed, replicate) drives unrelated
/// streams in different constructions.
enum class StreamPurpose : std::uint64_t {
  spectral_noise = 1,
  convolution_noise = 2,
  markov_noise = 3,
  observations = 4,
};

/// Hashes (seed, replicate, component, purpose) into a 64-bit stream key.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replicate,
                         std::uint64_t component,
                         StreamPurpose purpose = StreamPurpose::spectral_noise);

/// Sequential view over one Philox stream. The state is just a block
/// counter, so a stream is fully determined by its key.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal via Box-Muller; both outputs of a pair are used.
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang (shape < 1 via the U^{1/a} boost).
  double gamma(double shape);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mvgrf

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace bmfa {

/// Seeded pseudo-random stream; one per chain and model, never shared.
///
/// Identical (seed, stream_id) pairs replay identical draws for the same
/// sequence of calls on one build.
class RandomStream {
public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Integer uniform on [lo, hi].
  int uniform_int(int lo, int hi);
  /// Gamma with mean shape / rate. Valid for any shape > 0.
  double gamma(double shape, double rate);
  /// log of a Gamma(shape, 1) variate; stays finite for shapes << 1.
  double log_gamma_variate(double shape);

  Eigen::VectorXd normal_vector(Eigen::Index n);

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Mixes a seed and a stream identifier into a well-spread 64-bit value.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t seed,
                                     std::uint64_t stream_id) noexcept;

} // namespace bmfa

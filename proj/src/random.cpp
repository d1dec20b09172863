#include "bmfa/random.hpp"

#include <cmath>
#include <limits>

#include "bmfa/errors.hpp"

namespace bmfa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  const std::uint64_t base = mix_seed(seed, stream_id);
  std::seed_seq seq{static_cast<std::uint32_t>(base),
                    static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(splitmix64(base)),
                    static_cast<std::uint32_t>(splitmix64(base) >> 32)};
  engine_.seed(seq);
}

double RandomStream::uniform() {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(engine_);
    if (u > 0.0 && u < 1.0) return u;
  }
}

double RandomStream::normal() { return normal_(engine_); }

int RandomStream::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(engine_);
}

double RandomStream::gamma(double shape, double rate) {
  if (!(shape > 0) || !(rate > 0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw Error(ErrorCode::NonPositiveParam,
                "gamma requires shape > 0 and rate > 0");
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  const double g = dist(engine_);
  if (g > 0.0) return g;
  // shape << 1 can underflow to zero; redraw on the log scale
  const double v = std::exp(log_gamma_variate(shape) - std::log(rate));
  return v > 0.0 ? v : std::numeric_limits<double>::min();
}

double RandomStream::log_gamma_variate(double shape) {
  if (!(shape > 0))
    throw Error(ErrorCode::NonPositiveParam, "gamma requires shape > 0");
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return std::log(dist(engine_));
  }
  // G(a) = G(a + 1) * U^(1/a)
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  const double g = dist(engine_);
  return std::log(g) + std::log(uniform()) / shape;
}

Eigen::VectorXd RandomStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

} // namespace bmfa

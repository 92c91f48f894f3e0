#include "swpic/core.hpp"

#include <cmath>
#include <numbers>

namespace swpic {

namespace {

void require_length(double L) {
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw DomainError("domain length must be finite and positive, got " + std::to_string(L));
  }
}

}  // namespace

double wrap_position(double q, double L) {
  require_length(L);
  if (!std::isfinite(q)) throw DomainError("cannot wrap a non-finite position");
  double r = std::fmod(q, L);
  if (r < 0.0) r += L;
  // q slightly below zero rounds to L after the shift
  if (r >= L) r = 0.0;
  return r;
}

double min_image(double dq, double L) {
  require_length(L);
  if (!std::isfinite(dq)) throw DomainError("cannot take the minimum image of a non-finite offset");
  double r = std::fmod(dq, L);
  const double half = 0.5 * L;
  if (r > half) r -= L;
  if (r <= -half) r += L;
  return r;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw DomainError("Rng::below requires n > 0");
  // rejection keeps the draw unbiased
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

Rng Rng::split() { return Rng(next_u64()); }

}  // namespace swpic

#include "condshap/rng.hpp"

#include <cmath>

namespace condshap {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::uint64_t name_salt(const char* text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const char* p = text; *p != '\0'; ++p) {
    hash ^= static_cast<unsigned char>(*p);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

void Rng::fill_normals(double* dst, std::ptrdiff_t n) {
  std::ptrdiff_t i = 0;
  for (; i + 1 < n; i += 2) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = kTwoPi * u2;
    dst[i] = radius * std::cos(angle);
    dst[i + 1] = radius * std::sin(angle);
  }
  if (i < n) dst[i] = normal();
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  // Reject draws from the tail that would bias the modulus.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t draw = next_u64();
  while (draw >= limit) draw = next_u64();
  return draw % n;
}

}  // namespace condshap

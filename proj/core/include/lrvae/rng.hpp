#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lrvae {

using Rng = std::mt19937_64;

/// Child seed for a named stream; distinct tags give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(base, tag, index));
}

/// FNV-1a, used for content fingerprints.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size);
  template <typename T>
  void update_value(const T& v) {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 14695981039346656037ULL;
};

}  // namespace lrvae

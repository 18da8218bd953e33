#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tpn2f {

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so draws are derived directly
/// from the 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::vector<double> uniform_vector(std::size_t n, double lo, double hi);
  std::vector<double> normal_vector(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

  std::string state() const;
  void set_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tpn2f

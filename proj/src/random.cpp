#include "tpn2f/random.hpp"

#include <cmath>
#include <sstream>

#include "tpn2f/error.hpp"

namespace tpn2f {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ParameterError("Rng::index needs a positive bound");
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

std::vector<double> Rng::uniform_vector(std::size_t n, double lo, double hi) {
  std::vector<double> out(n);
  for (auto& v : out) v = uniform(lo, hi);
  return out;
}

std::vector<double> Rng::normal_vector(std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = normal();
  return out;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
  os.precision(17);
  os << std::hexfloat << spare_;
  return os.str();
}

void Rng::set_state(const std::string& state) {
  std::istringstream is(state);
  int spare_flag = 0;
  is >> engine_ >> spare_flag;
  std::string spare_text;
  is >> spare_text;
  if (!is && !is.eof()) throw StateError("malformed RNG state");
  has_spare_ = spare_flag != 0;
  spare_ = spare_text.empty() ? 0.0 : std::strtod(spare_text.c_str(), nullptr);
}

}  // namespace tpn2f

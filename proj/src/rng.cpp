#include "driftwatch/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "driftwatch/errors.hpp"

namespace driftwatch {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::string Rng::save() const {
  std::ostringstream out;
  out << engine_ << ' ' << has_spare_ << ' ' << std::hexfloat << spare_;
  return out.str();
}

void Rng::restore(const std::string& text) {
  std::istringstream in(text);
  in >> engine_ >> has_spare_;
  std::string spare;
  in >> spare;
  if (!in && !in.eof()) throw InputError("corrupt generator state");
  spare_ = std::strtod(spare.c_str(), nullptr);
}

}  // namespace driftwatch

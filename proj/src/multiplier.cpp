#include "greenprocure/multiplier.hpp"

namespace greenprocure {

MultiplierFunction refine_multiplier(const MultiplierFunction& current, std::size_t level_cap) {
  const std::size_t level = current.level();
  if (2 * level > level_cap)
    throw std::runtime_error("refine_multiplier: level " + std::to_string(2 * level) +
                             " would exceed the cap " + std::to_string(level_cap));
  const auto& bp = current.breakpoints();
  std::vector<double> new_bp(2 * level + 1);
  std::vector<double> new_amp(2 * level);
  for (std::size_t i = 0; i < level; ++i) {
    new_bp[2 * i] = bp[i];
    new_bp[2 * i + 1] = 0.5 * (bp[i] + bp[i + 1]);
    new_amp[2 * i] = current.amplitudes()[i];
    new_amp[2 * i + 1] = current.amplitudes()[i];
  }
  new_bp[2 * level] = bp[level];
  return MultiplierFunction(std::move(new_bp), std::move(new_amp));
}

}  // namespace greenprocure

#include "misynth/cvae.hpp"

#include <iomanip>

namespace misynth {

void print_parameter_count(const ParameterCount& count, std::ostream& out) {
  out << std::left << std::setw(22) << "layer" << std::right << std::setw(10) << "weights"
      << std::setw(10) << "biases" << std::setw(10) << "total" << "\n";
  for (const auto& row : count.layers) {
    out << std::left << std::setw(22) << row.layer << std::right << std::setw(10) << row.weights
        << std::setw(10) << row.biases << std::setw(10) << row.total() << "\n";
  }
  out << std::left << std::setw(22) << "trainable total" << std::right << std::setw(30)
      << count.trainable << "\n";
  out << std::left << std::setw(22) << "bn running stats" << std::right << std::setw(30)
      << count.non_trainable_running_stats << " (non-trainable)\n";
}

Tensor<float> condition_tensor(const std::vector<Label>& labels) {
  Tensor<float> c(labels.size(), 1, 1, kNumClasses);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    c.at(n, 0, 0, static_cast<std::size_t>(labels[n])) = 1.0f;
  }
  return c;
}

}  // namespace misynth

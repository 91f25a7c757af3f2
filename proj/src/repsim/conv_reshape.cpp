#include "metadiv/repsim/conv_reshape.hpp"

#include "metadiv/error.hpp"

#include <algorithm>
#include <numeric>

namespace metadiv::repsim {

ActivationTensor::ActivationTensor(std::size_t m, std::size_t c, std::size_t h, std::size_t w)
    : ActivationTensor(m, c, h, w, std::vector<double>(m * c * h * w, 0.0)) {}

ActivationTensor::ActivationTensor(std::size_t m, std::size_t c, std::size_t h, std::size_t w,
                                   std::vector<double> data)
    : m_(m), c_(c), h_(h), w_(w), data_(std::move(data)) {
  if (m == 0 || c == 0 || h == 0 || w == 0) throw InvalidInput("activation tensor has a zero extent");
  if (data_.size() != m * c * h * w) throw InvalidInput("activation tensor data size mismatch");
}

LayerMatrix conv_layer_matrix(const ActivationTensor& t, ReshapeMode mode,
                              const SafetyPolicy& policy, RngStream& rng, std::string layer_name,
                              std::string source_model) {
  policy.validate();
  const std::size_t m = t.batch(), c = t.channels(), h = t.height(), w = t.width();
  if (mode == ReshapeMode::activations_as_features) {
    Matrix out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c * h * w));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>((ch * h + y) * w + x)) =
                t.at(i, ch, y, x);
    return make_layer_matrix(std::move(out), std::move(layer_name), std::move(source_model), mode);
  }
  if (mode != ReshapeMode::channels_as_features) {
    throw InvalidInput("conv_layer_matrix: mode must be channels or activations as features");
  }

  const std::size_t patches = m * h * w;
  const std::size_t target = policy.subsample_multiplier * c;
  std::vector<std::size_t> rows(patches);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (patches > target) {
    // Partial Fisher-Yates: the first `target` slots become a uniform sample.
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(patches - i));
      std::swap(rows[i], rows[j]);
    }
    rows.resize(target);
    std::sort(rows.begin(), rows.end());
  }

  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(c));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r] / (h * w);
    const std::size_t y = (rows[r] / w) % h;
    const std::size_t x = rows[r] % w;
    for (std::size_t ch = 0; ch < c; ++ch) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(ch)) = t.at(i, ch, y, x);
    }
  }
  return make_layer_matrix(std::move(out), std::move(layer_name), std::move(source_model), mode);
}

}  // namespace metadiv::repsim

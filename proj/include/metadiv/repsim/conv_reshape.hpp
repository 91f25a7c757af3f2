#pragma once

#include "metadiv/numerics/rng.hpp"
#include "metadiv/repsim/layer_matrix.hpp"

#include <cstddef>
#include <vector>

namespace metadiv::repsim {

/// Dense M x C x H x W activation tensor, row-major (NCHW).
class ActivationTensor {
 public:
  ActivationTensor(std::size_t m, std::size_t c, std::size_t h, std::size_t w);
  ActivationTensor(std::size_t m, std::size_t c, std::size_t h, std::size_t w,
                   std::vector<double> data);

  std::size_t batch() const { return m_; }
  std::size_t channels() const { return c_; }
  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }

  double& at(std::size_t m, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((m * c_ + c) * h_ + h) * w_ + w];
  }
  double at(std::size_t m, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((m * c_ + c) * h_ + h) * w_ + w];
  }

 private:
  std::size_t m_, c_, h_, w_;
  std::vector<double> data_;
};

/// channels_as_features: one row per (m, h, w) patch, C columns; when
/// M*H*W exceeds multiplier*C the rows are subsampled uniformly without
/// replacement down to multiplier*C (original order kept).
/// activations_as_features: M rows, C*H*W columns ordered (c, h, w).
LayerMatrix conv_layer_matrix(const ActivationTensor& activations, ReshapeMode mode,
                              const SafetyPolicy& policy, RngStream& rng,
                              std::string layer_name = {}, std::string source_model = {});

}  // namespace metadiv::repsim

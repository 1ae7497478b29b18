#pragma once

#include "json.hpp"

#include "gam/core.hpp"

namespace gam {

inline constexpr int kSchemaVersion = 1;

inline nlohmann::json config_to_json(const GamConfig& c) {
  return {{"lambda", c.lambda},
          {"radius", c.radius},
          {"n_centers", c.n_centers},
          {"k_neighbors", c.k_neighbors},
          {"epsilon", c.epsilon},
          {"use_distance", c.use_distance},
          {"use_gradient", c.use_gradient},
          {"mlp_hidden", c.mlp_hidden},
          {"seed", c.seed},
          {"normalize_distance", c.normalize_distance}};
}

}  // namespace gam

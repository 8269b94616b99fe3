#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "advkit/common.hpp"

namespace advkit {

// One video clip: T segment feature rows (T x D), an action label, and an
// optional adverb label. hidden_adverbs carry the synthetic generator's
// ground-truth co-occurrences; they are diagnostics only and must never feed
// training.
struct VideoClip {
  std::string clip_id;
  Eigen::MatrixXd features;  // T x D, every row finite
  ActionId action = -1;
  std::optional<AdverbId> adverb;
  std::vector<AdverbId> hidden_adverbs;
  std::string domain;

  int segments() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

}  // namespace advkit

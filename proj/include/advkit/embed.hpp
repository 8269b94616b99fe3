#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "advkit/clip.hpp"
#include "advkit/common.hpp"
#include "advkit/vocab.hpp"

namespace advkit {

// Attention over clip segments, queried by the action. Row-vector
// convention: keys = features * key_proj (T x Q), values = features *
// value_proj (T x E), scores = keys * query / sqrt(Q).
struct VisualEmbedder {
  Eigen::MatrixXd query_vectors;  // |A| x Q
  Eigen::MatrixXd key_proj;       // D x Q
  Eigen::MatrixXd value_proj;     // D x E

  int n_actions() const { return static_cast<int>(query_vectors.rows()); }
  int query_dim() const { return static_cast<int>(query_vectors.cols()); }
  int feature_dim() const { return static_cast<int>(key_proj.rows()); }
  int embed_dim() const { return static_cast<int>(value_proj.cols()); }
};

// Actions as embedding vectors, adverbs as per-adverb linear maps on them.
struct TextEmbedder {
  Eigen::MatrixXd action_embeddings;           // |A| x E
  std::vector<Eigen::MatrixXd> adverb_transforms;  // N matrices, E x E

  int n_actions() const { return static_cast<int>(action_embeddings.rows()); }
  int n_adverbs() const { return static_cast<int>(adverb_transforms.size()); }
  int embed_dim() const { return static_cast<int>(action_embeddings.cols()); }
};

// Forward cache kept for the backward pass; attention weights double as the
// diagnostic output.
struct VisualForward {
  Eigen::RowVectorXd output;     // 1 x E
  Eigen::VectorXd attention;     // T, sums to 1
  Eigen::MatrixXd keys;          // T x Q
  Eigen::MatrixXd values;        // T x E
};

VisualForward embed_video(const VisualEmbedder& f, const VideoClip& x, ActionId a);

Eigen::RowVectorXd embed_text(const TextEmbedder& g, ActionId a, AdverbId m);

// Warmup-phase view of g: the unmodified action embedding.
Eigen::RowVectorXd embed_action(const TextEmbedder& g, ActionId a);

// Cosine distance in [0, 2]. Zero-norm inputs are a degenerate-embedding
// diagnostic and throw NumericError.
double distance(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v);

// dist and its gradients wrt both arguments in one pass.
double distance_backward(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v,
                         Eigen::RowVectorXd& grad_u, Eigen::RowVectorXd& grad_v);

struct EmbedderInit {
  int n_actions = 0;
  int n_adverbs = 0;
  int feature_dim = 0;
  int embed_dim = 0;
  // Query dimension defaults to the embedding dimension.
  int query_dim = 0;
  double transform_noise = 0.01;
  uint64_t seed = 0;
};

// Seeded initialization: unit-vector queries and action embeddings, scaled
// Gaussian projections, adverb transforms = identity + small noise so early
// adverb predictions start near-uninformative.
void init_embedders(const EmbedderInit& init, VisualEmbedder& f, TextEmbedder& g);

// Optional hook: overwrite action embeddings with pretrained word vectors.
// File format: one line per action, "name v_0 v_1 ... v_{E-1}"; actions not
// present keep their seeded initialization.
int load_action_vectors(TextEmbedder& g, const ActionVocabulary& actions,
                        const std::string& path);

// Textual checkpoint container for both embedders: shape headers plus %.17g
// values, so a round-trip is bit-exact. config_fingerprint ties the file to
// the run that wrote it.
void write_embedders(std::ostream& out, const VisualEmbedder& f, const TextEmbedder& g);
void read_embedders(std::istream& in, VisualEmbedder& f, TextEmbedder& g);

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expect_name);

}  // namespace advkit

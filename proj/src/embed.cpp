#include "advkit/embed.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "advkit/rng.hpp"

namespace advkit {

VisualForward embed_video(const VisualEmbedder& f, const VideoClip& x, ActionId a) {
  if (a < 0 || a >= f.n_actions()) {
    throw DataError("embed_video: invalid action id " + std::to_string(a));
  }
  if (x.feature_dim() != f.feature_dim()) {
    throw DataError("embed_video: clip " + x.clip_id + " has feature dim " +
                    std::to_string(x.feature_dim()) + ", embedder expects " +
                    std::to_string(f.feature_dim()));
  }
  if (x.segments() < 1) {
    throw DataError("embed_video: clip " + x.clip_id + " has no segments");
  }
  VisualForward fwd;
  fwd.keys = x.features * f.key_proj;      // T x Q
  fwd.values = x.features * f.value_proj;  // T x E
  double scale = 1.0 / std::sqrt(static_cast<double>(f.query_dim()));
  Eigen::VectorXd scores = scale * (fwd.keys * f.query_vectors.row(a).transpose());
  // Stable softmax over segments.
  double zmax = scores.maxCoeff();
  fwd.attention = (scores.array() - zmax).exp();
  fwd.attention /= fwd.attention.sum();
  fwd.output = fwd.attention.transpose() * fwd.values;
  return fwd;
}

Eigen::RowVectorXd embed_text(const TextEmbedder& g, ActionId a, AdverbId m) {
  if (a < 0 || a >= g.n_actions()) {
    throw DataError("embed_text: invalid action id " + std::to_string(a));
  }
  if (m < 0 || m >= g.n_adverbs()) {
    throw DataError("embed_text: invalid adverb id " + std::to_string(m));
  }
  return g.action_embeddings.row(a) * g.adverb_transforms[m];
}

Eigen::RowVectorXd embed_action(const TextEmbedder& g, ActionId a) {
  if (a < 0 || a >= g.n_actions()) {
    throw DataError("embed_action: invalid action id " + std::to_string(a));
  }
  return g.action_embeddings.row(a);
}

double distance(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v) {
  if (u.size() != v.size()) {
    throw DataError("distance: dimension mismatch " + std::to_string(u.size()) +
                    " vs " + std::to_string(v.size()));
  }
  double nu = u.norm();
  double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw NumericError("distance: zero-norm embedding");
  }
  if (!std::isfinite(nu) || !std::isfinite(nv)) {
    throw NumericError("distance: non-finite embedding");
  }
  return 1.0 - u.dot(v) / (nu * nv);
}

double distance_backward(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v,
                         Eigen::RowVectorXd& grad_u, Eigen::RowVectorXd& grad_v) {
  if (u.size() != v.size()) {
    throw DataError("distance: dimension mismatch " + std::to_string(u.size()) +
                    " vs " + std::to_string(v.size()));
  }
  double nu = u.norm();
  double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw NumericError("distance: zero-norm embedding");
  }
  if (!std::isfinite(nu) || !std::isfinite(nv)) {
    throw NumericError("distance: non-finite embedding");
  }
  double s = u.dot(v);
  double c = s / (nu * nv);
  // d = 1 - cos; d/du cos = v/(|u||v|) - cos * u/|u|^2
  grad_u = -(v / (nu * nv) - (c / (nu * nu)) * u);
  grad_v = -(u / (nu * nv) - (c / (nv * nv)) * v);
  return 1.0 - c;
}

void init_embedders(const EmbedderInit& init, VisualEmbedder& f, TextEmbedder& g) {
  if (init.n_actions <= 0 || init.n_adverbs <= 0 || init.feature_dim <= 0 ||
      init.embed_dim <= 0) {
    throw ConfigError("init_embedders: all dimensions must be positive");
  }
  int q = init.query_dim > 0 ? init.query_dim : init.embed_dim;
  Rng rng(derive_seed(init.seed, 0x1bedu));

  auto unit_rows = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
      double n = m.row(i).norm();
      if (n > 0) m.row(i) /= n;
    }
    return m;
  };

  f.query_vectors = unit_rows(init.n_actions, q);
  double kscale = 1.0 / std::sqrt(static_cast<double>(init.feature_dim));
  f.key_proj.resize(init.feature_dim, q);
  for (int i = 0; i < f.key_proj.rows(); ++i)
    for (int j = 0; j < f.key_proj.cols(); ++j) f.key_proj(i, j) = kscale * rng.normal();
  f.value_proj.resize(init.feature_dim, init.embed_dim);
  for (int i = 0; i < f.value_proj.rows(); ++i)
    for (int j = 0; j < f.value_proj.cols(); ++j)
      f.value_proj(i, j) = kscale * rng.normal();

  g.action_embeddings = unit_rows(init.n_actions, init.embed_dim);
  g.adverb_transforms.assign(init.n_adverbs,
                             Eigen::MatrixXd::Identity(init.embed_dim, init.embed_dim));
  for (auto& w : g.adverb_transforms) {
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) += init.transform_noise * rng.normal();
  }
}

int load_action_vectors(TextEmbedder& g, const ActionVocabulary& actions,
                        const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open action vector file: " + path);
  }
  std::string line;
  int loaded = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    if (!actions.contains(name)) continue;
    ActionId a = actions.id(name);
    Eigen::RowVectorXd v(g.embed_dim());
    for (int i = 0; i < g.embed_dim(); ++i) {
      if (!(ls >> v(i))) {
        throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(g.embed_dim()) + " values for action '" +
                        name + "'");
      }
    }
    g.action_embeddings.row(a) = v;
    ++loaded;
  }
  return loaded;
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << name << " " << m.rows() << " " << m.cols() << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 < m.cols() ? " " : "");
    }
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expect_name) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> name >> rows >> cols)) {
    throw DataError("checkpoint: truncated matrix header, expected '" + expect_name + "'");
  }
  if (name != expect_name) {
    throw DataError("checkpoint: expected matrix '" + expect_name + "', found '" + name + "'");
  }
  if (rows < 0 || cols < 0) {
    throw DataError("checkpoint: bad shape for matrix '" + name + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw DataError("checkpoint: truncated matrix '" + name + "'");
      }
    }
  }
  return m;
}

void write_embedders(std::ostream& out, const VisualEmbedder& f, const TextEmbedder& g) {
  out << "embedders " << g.n_adverbs() << "\n";
  write_matrix(out, "query_vectors", f.query_vectors);
  write_matrix(out, "key_proj", f.key_proj);
  write_matrix(out, "value_proj", f.value_proj);
  write_matrix(out, "action_embeddings", g.action_embeddings);
  for (int m = 0; m < g.n_adverbs(); ++m) {
    write_matrix(out, "adverb_transform_" + std::to_string(m), g.adverb_transforms[m]);
  }
}

void read_embedders(std::istream& in, VisualEmbedder& f, TextEmbedder& g) {
  std::string tag;
  int n_adverbs = 0;
  if (!(in >> tag >> n_adverbs) || tag != "embedders" || n_adverbs < 0) {
    throw DataError("checkpoint: bad embedders header");
  }
  f.query_vectors = read_matrix(in, "query_vectors");
  f.key_proj = read_matrix(in, "key_proj");
  f.value_proj = read_matrix(in, "value_proj");
  g.action_embeddings = read_matrix(in, "action_embeddings");
  g.adverb_transforms.clear();
  g.adverb_transforms.reserve(n_adverbs);
  for (int m = 0; m < n_adverbs; ++m) {
    g.adverb_transforms.push_back(read_matrix(in, "adverb_transform_" + std::to_string(m)));
  }
}

}  // namespace advkit

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "advkit/embed.hpp"
#include "advkit/rng.hpp"

using namespace advkit;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

namespace {

void make_embedders(uint64_t seed, VisualEmbedder& f, TextEmbedder& g,
                    int n_actions = 3, int n_adverbs = 4, int feature_dim = 6,
                    int embed_dim = 5) {
  EmbedderInit init;
  init.n_actions = n_actions;
  init.n_adverbs = n_adverbs;
  init.feature_dim = feature_dim;
  init.embed_dim = embed_dim;
  init.seed = seed;
  init_embedders(init, f, g);
}

VideoClip random_clip(Rng& rng, int t, int d, ActionId action = 0) {
  VideoClip x;
  x.clip_id = "clip";
  x.action = action;
  x.features.resize(t, d);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < d; ++j) x.features(i, j) = rng.normal();
  return x;
}

// Attention computed the slow way: explicit per-segment scores, softmax by
// direct exponentiation, weighted sum of projected segment values.
RowVectorXd attention_oracle(const VisualEmbedder& f, const MatrixXd& features,
                             ActionId action) {
  const int t = static_cast<int>(features.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(f.query_dim()));
  std::vector<double> score(t);
  for (int i = 0; i < t; ++i) {
    RowVectorXd key = features.row(i) * f.key_proj;
    score[i] = key.dot(f.query_vectors.row(action)) * scale;
  }
  double max_score = score[0];
  for (double s : score) max_score = std::max(max_score, s);
  double z = 0.0;
  std::vector<double> alpha(t);
  for (int i = 0; i < t; ++i) {
    alpha[i] = std::exp(score[i] - max_score);
    z += alpha[i];
  }
  RowVectorXd out = RowVectorXd::Zero(f.embed_dim());
  for (int i = 0; i < t; ++i) out += (alpha[i] / z) * (features.row(i) * f.value_proj);
  return out;
}

}  // namespace

TEST_CASE("single-segment video ignores attention weighting") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(11, f, g);
  Rng rng(42);
  VideoClip x = random_clip(rng, 1, 6);
  VisualForward fwd = embed_video(f, x, 1);
  CHECK(fwd.attention.size() == 1);
  CHECK(fwd.attention(0) == doctest::Approx(1.0));
  RowVectorXd expect = x.features.row(0) * f.value_proj;
  CHECK((fwd.output - expect).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("identical segments collapse to the single-segment output") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(12, f, g);
  Rng rng(43);
  VideoClip one = random_clip(rng, 1, 6);
  VideoClip repeated = one;
  repeated.features.resize(4, 6);
  for (int i = 0; i < 4; ++i) repeated.features.row(i) = one.features.row(0);
  VisualForward single = embed_video(f, one, 0);
  VisualForward multi = embed_video(f, repeated, 0);
  for (int i = 0; i < 4; ++i) CHECK(multi.attention(i) == doctest::Approx(0.25));
  CHECK((multi.output - single.output).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("attention matches the brute-force oracle") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    VisualEmbedder f;
    TextEmbedder g;
    make_embedders(derive_seed(100, seed), f, g);
    Rng rng(derive_seed(200, seed));
    int t = 1 + static_cast<int>(rng.uniform_index(6));
    VideoClip x = random_clip(rng, t, 6);
    ActionId action = static_cast<ActionId>(rng.uniform_index(3));
    VisualForward fwd = embed_video(f, x, action);
    RowVectorXd expect = attention_oracle(f, x.features, action);
    CHECK((fwd.output - expect).norm() < 1e-12);
    double alpha_sum = 0.0;
    for (int i = 0; i < t; ++i) {
      CHECK(fwd.attention(i) >= 0.0);
      alpha_sum += fwd.attention(i);
    }
    CHECK(alpha_sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("segment order does not change the embedding") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(13, f, g);
  Rng rng(44);
  VideoClip x = random_clip(rng, 5, 6);
  VisualForward fwd = embed_video(f, x, 2);
  std::vector<int> perm = {3, 0, 4, 1, 2};
  VideoClip shuffled = x;
  for (int i = 0; i < 5; ++i) shuffled.features.row(i) = x.features.row(perm[i]);
  VisualForward fwd2 = embed_video(f, shuffled, 2);
  CHECK((fwd.output - fwd2.output).norm() < 1e-12);
}

TEST_CASE("softmax survives large score magnitudes") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(14, f, g);
  Rng rng(45);
  VideoClip x = random_clip(rng, 3, 6);
  x.features *= 1e4;
  VisualForward fwd = embed_video(f, x, 0);
  for (int i = 0; i < 3; ++i) CHECK(std::isfinite(fwd.attention(i)));
  for (int j = 0; j < fwd.output.cols(); ++j) CHECK(std::isfinite(fwd.output(j)));
}

TEST_CASE("text embedding is the action row through the adverb transform") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(15, f, g);
  for (ActionId a = 0; a < 3; ++a) {
    for (AdverbId m = 0; m < 4; ++m) {
      RowVectorXd got = embed_text(g, a, m);
      // Oracle: explicit dot products against each transform column.
      RowVectorXd expect(got.cols());
      for (int j = 0; j < got.cols(); ++j)
        expect(j) = g.action_embeddings.row(a).dot(g.adverb_transforms[m].col(j));
      CHECK((got - expect).norm() < 1e-12);
    }
  }
  RowVectorXd plain = embed_action(g, 1);
  CHECK((plain - g.action_embeddings.row(1)).norm() == 0.0);
}

TEST_CASE("cosine distance endpoints") {
  RowVectorXd u(3), v(3);
  u << 1.0, 0.0, 0.0;
  v << 2.0, 0.0, 0.0;
  CHECK(distance(u, v) == doctest::Approx(0.0).epsilon(1e-15));
  v << -3.0, 0.0, 0.0;
  CHECK(distance(u, v) == doctest::Approx(2.0).epsilon(1e-15));
  v << 0.0, 5.0, 0.0;
  CHECK(distance(u, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(distance(u, v) == distance(v, u));
}

TEST_CASE("scaling either argument leaves the distance unchanged") {
  Rng rng(46);
  for (int trial = 0; trial < 10; ++trial) {
    RowVectorXd u(4), v(4);
    for (int j = 0; j < 4; ++j) {
      u(j) = rng.normal();
      v(j) = rng.normal();
    }
    double d = distance(u, v);
    CHECK(d >= 0.0);
    CHECK(d <= 2.0 + 1e-15);
    CHECK(distance(3.7 * u, v) == doctest::Approx(d).epsilon(1e-12));
    CHECK(distance(u, 0.02 * v) == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("zero-norm vectors are a numeric failure") {
  RowVectorXd u = RowVectorXd::Zero(3);
  RowVectorXd v(3);
  v << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(distance(u, v), NumericError);
  CHECK_THROWS_AS(distance(v, u), NumericError);
}

TEST_CASE("distance gradient matches central differences") {
  Rng rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    RowVectorXd u(4), v(4);
    for (int j = 0; j < 4; ++j) {
      u(j) = rng.normal();
      v(j) = rng.normal();
    }
    RowVectorXd gu(4), gv(4);
    double d = distance_backward(u, v, gu, gv);
    CHECK(d == doctest::Approx(distance(u, v)).epsilon(1e-15));
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
      RowVectorXd up = u, um = u;
      up(j) += h;
      um(j) -= h;
      double fd = (distance(up, v) - distance(um, v)) / (2 * h);
      CHECK(gu(j) == doctest::Approx(fd).epsilon(1e-5));
      RowVectorXd vp = v, vm = v;
      vp(j) += h;
      vm(j) -= h;
      fd = (distance(u, vp) - distance(u, vm)) / (2 * h);
      CHECK(gv(j) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("initialization is seed-deterministic") {
  VisualEmbedder fa, fb, fc;
  TextEmbedder ga, gb, gc;
  make_embedders(77, fa, ga);
  make_embedders(77, fb, gb);
  make_embedders(78, fc, gc);
  CHECK(fa.query_vectors == fb.query_vectors);
  CHECK(fa.key_proj == fb.key_proj);
  CHECK(fa.value_proj == fb.value_proj);
  CHECK(ga.action_embeddings == gb.action_embeddings);
  CHECK(ga.adverb_transforms[2] == gb.adverb_transforms[2]);
  CHECK(fa.key_proj != fc.key_proj);
}

TEST_CASE("initial rows are unit length and transforms near identity") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(79, f, g);
  for (int a = 0; a < 3; ++a) {
    CHECK(f.query_vectors.row(a).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.action_embeddings.row(a).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int m = 0; m < 4; ++m) {
    MatrixXd off = g.adverb_transforms[m] - MatrixXd::Identity(5, 5);
    CHECK(off.cwiseAbs().maxCoeff() < 0.1);
    CHECK(off.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("embedder checkpoint round-trips bit for bit") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(80, f, g);
  // Perturb away from the tidy init values so the file carries full-precision
  // doubles over a wide range of magnitudes.
  Rng rng(81);
  for (int i = 0; i < f.key_proj.rows(); ++i)
    for (int j = 0; j < f.key_proj.cols(); ++j)
      f.key_proj(i, j) = rng.normal() * std::pow(10.0, 3.0 * rng.normal());
  std::stringstream buf;
  write_embedders(buf, f, g);
  VisualEmbedder f2;
  TextEmbedder g2;
  read_embedders(buf, f2, g2);
  CHECK(f2.query_vectors == f.query_vectors);
  CHECK(f2.key_proj == f.key_proj);
  CHECK(f2.value_proj == f.value_proj);
  CHECK(g2.action_embeddings == g.action_embeddings);
  REQUIRE(g2.adverb_transforms.size() == g.adverb_transforms.size());
  for (size_t m = 0; m < g.adverb_transforms.size(); ++m)
    CHECK(g2.adverb_transforms[m] == g.adverb_transforms[m]);
}

TEST_CASE("truncated checkpoint is rejected") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(86, f, g);
  std::stringstream buf;
  write_embedders(buf, f, g);
  std::string text = buf.str();
  std::stringstream cut(text.substr(0, text.size() / 2));
  VisualEmbedder f2;
  TextEmbedder g2;
  CHECK_THROWS_AS(read_embedders(cut, f2, g2), DataError);
}

TEST_CASE("action id out of range is rejected") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(82, f, g);
  Rng rng(83);
  VideoClip x = random_clip(rng, 2, 6);
  CHECK_THROWS_AS(embed_video(f, x, 3), DataError);
  CHECK_THROWS_AS(embed_video(f, x, -1), DataError);
  CHECK_THROWS_AS(embed_text(g, 0, 4), DataError);
  CHECK_THROWS_AS(embed_text(g, 3, 0), DataError);
}

TEST_CASE("feature dimension mismatch is rejected") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(84, f, g);
  Rng rng(85);
  VideoClip x = random_clip(rng, 2, 7);
  CHECK_THROWS_AS(embed_video(f, x, 0), DataError);
}

TEST_CASE("pretrained action vectors overwrite matching rows only") {
  VisualEmbedder f;
  TextEmbedder g;
  make_embedders(87, f, g);
  ActionVocabulary actions;
  actions.add("fold");
  actions.add("swim");
  actions.add("stir");
  Eigen::RowVectorXd before = g.action_embeddings.row(1);
  {
    std::ofstream out("action_vectors_test.txt");
    out << "# comment line\n";
    out << "fold 1 2 3 4 5\n";
    out << "unknownword 9 9 9 9 9\n";
    out << "stir 0.5 0.5 0.5 0.5 0.5\n";
  }
  int loaded = load_action_vectors(g, actions, "action_vectors_test.txt");
  CHECK(loaded == 2);
  CHECK(g.action_embeddings(0, 0) == 1.0);
  CHECK(g.action_embeddings(0, 4) == 5.0);
  CHECK(g.action_embeddings.row(1) == before);
  CHECK(g.action_embeddings(2, 2) == 0.5);
  std::remove("action_vectors_test.txt");
}

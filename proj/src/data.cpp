#include "advkit/data.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "advkit/fingerprint.hpp"
#include "advkit/rng.hpp"

namespace advkit {

namespace {

// Seed stream tags. Structural latents depend only on the config seed so a
// shifted-domain dataset shares them; clip draws also mix in the domain name.
constexpr uint64_t kStreamLatents = 0x57a7u;
constexpr uint64_t kStreamRanks = 0x21bfu;
constexpr uint64_t kStreamClips = 0xc119u;
constexpr uint64_t kStreamSeenShuffle = 0x5ee1u;
constexpr uint64_t kStreamUnseenAssign = 0xa550u;
constexpr uint64_t kStreamHoldoutShuffle = 0x7e57u;

constexpr double kTransformStrength = 0.35;
constexpr const char* kFeatureMagic = "ADVKITF1\n";

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) {
    s.insert(0, width - s.size(), '0');
  }
  return s;
}

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Rank lookup: rank[i] is the position of i in a seeded permutation, so
// which compositions sit at the head of the Zipf curve varies with the seed.
std::vector<int> ranks(int n, uint64_t seed) {
  std::vector<int> perm = permutation(n, seed);
  std::vector<int> r(n);
  for (int pos = 0; pos < n; ++pos) r[perm[pos]] = pos;
  return r;
}

// Rotation across consecutive dimension pairs by one shared angle.
Eigen::MatrixXd pairwise_rotation(int dim, double angle) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim);
  double c = std::cos(angle), s = std::sin(angle);
  for (int i = 0; i + 1 < dim; i += 2) {
    r(i, i) = c;
    r(i, i + 1) = -s;
    r(i + 1, i) = s;
    r(i + 1, i + 1) = c;
  }
  return r;
}

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<Composition> sorted_compositions(const std::vector<VideoClip>& clips) {
  std::set<Composition> s;
  for (const auto& c : clips) {
    if (c.adverb) s.insert({c.action, *c.adverb});
  }
  return std::vector<Composition>(s.begin(), s.end());
}

void require_labeled(const std::vector<VideoClip>& clips, const char* op) {
  for (const auto& c : clips) {
    if (!c.adverb) {
      throw DataError(std::string(op) + ": clip " + c.clip_id +
                      " has no adverb label");
    }
  }
}

// Largest-remainder allocation of `target` units over groups, each group
// capped at cap[i]. Ties break toward the lower group index.
std::vector<int> largest_remainder(const std::vector<double>& share,
                                   const std::vector<int>& cap, long target) {
  size_t n = share.size();
  std::vector<int> quota(n, 0);
  long assigned = 0;
  std::vector<std::pair<double, size_t>> rem;
  for (size_t i = 0; i < n; ++i) {
    int base = std::min(cap[i], static_cast<int>(std::floor(share[i])));
    quota[i] = base;
    assigned += base;
    rem.push_back({share[i] - std::floor(share[i]), i});
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  size_t cursor = 0;
  while (assigned < target) {
    bool progressed = false;
    for (size_t step = 0; step < n && assigned < target; ++step) {
      size_t i = rem[cursor % n].second;
      ++cursor;
      if (quota[i] < cap[i]) {
        ++quota[i];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;  // every group capped
  }
  while (assigned > target) {
    // Over-assignment can only come from the floor pass; trim from the
    // highest index down to stay deterministic.
    for (size_t i = n; i-- > 0 && assigned > target;) {
      if (quota[i] > 0) {
        --quota[i];
        --assigned;
      }
    }
  }
  return quota;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_actions <= 0 || n_adverb_pairs <= 0 || latent_dim <= 0 ||
      feature_dim <= 0 || segments <= 0 || clips <= 0) {
    throw ConfigError("generator: all counts and dimensions must be positive");
  }
  if (zipf_action < 0 || zipf_adverb < 0 || zipf_pair < 0) {
    throw ConfigError("generator: zipf exponents must be >= 0");
  }
  if (distractor_fraction < 0 || distractor_fraction >= 1) {
    throw ConfigError("generator: distractor_fraction must be in [0, 1)");
  }
  if (cooccur_max < 0) {
    throw ConfigError("generator: cooccur_max must be >= 0");
  }
  if (noise_sigma < 0) {
    throw ConfigError("generator: noise_sigma must be >= 0");
  }
  if (domain.empty()) {
    throw ConfigError("generator: domain name must be nonempty");
  }
}

Dataset generate(const GeneratorConfig& cfg, LatentTruth* truth) {
  cfg.validate();
  const int n_adverbs = 2 * cfg.n_adverb_pairs;

  Dataset data;
  for (int a = 0; a < cfg.n_actions; ++a) {
    data.vocab.actions.add("act" + std::to_string(a));
  }
  {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int p = 0; p < cfg.n_adverb_pairs; ++p) {
      std::string lo = "adv" + std::to_string(2 * p);
      std::string hi = "adv" + std::to_string(2 * p + 1);
      pairs.push_back({lo, hi});
      pairs.push_back({hi, lo});
    }
    data.vocab.adverbs = AdverbVocabulary::from_pairs(pairs);
  }

  // Structural latents: prototypes, mutually inverse pair transforms, and the
  // projection into feature space.
  Rng srng(derive_seed(cfg.seed, kStreamLatents));
  Eigen::MatrixXd prototypes(cfg.n_actions, cfg.latent_dim);
  for (int a = 0; a < cfg.n_actions; ++a) {
    for (int j = 0; j < cfg.latent_dim; ++j) prototypes(a, j) = srng.normal();
    prototypes.row(a).normalize();
  }
  std::vector<Eigen::MatrixXd> transforms(n_adverbs);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(cfg.latent_dim, cfg.latent_dim);
  for (int p = 0; p < cfg.n_adverb_pairs; ++p) {
    Eigen::MatrixXd t;
    double det = 0;
    for (int attempt = 0; attempt < 32; ++attempt) {
      t = eye + random_matrix(srng, cfg.latent_dim, cfg.latent_dim,
                              kTransformStrength / std::sqrt(cfg.latent_dim));
      det = t.determinant();
      if (std::abs(det) > 1e-6) break;
    }
    if (std::abs(det) <= 1e-6) {
      throw NumericError("generator: could not draw an invertible transform");
    }
    transforms[2 * p] = t;
    transforms[2 * p + 1] = t.inverse();
  }
  for (int i = 0; i < n_adverbs; ++i) {
    for (int j = i + 1; j < n_adverbs; ++j) {
      if ((transforms[i] - transforms[j]).norm() < 1e-6) {
        throw ConfigError(
            "generator: latent dimension " + std::to_string(cfg.latent_dim) +
            " cannot represent " + std::to_string(n_adverbs) +
            " distinct adverb transforms");
      }
    }
  }
  Eigen::MatrixXd projection =
      random_matrix(srng, cfg.latent_dim, cfg.feature_dim,
                    1.0 / std::sqrt(static_cast<double>(cfg.latent_dim)));
  Eigen::MatrixXd rotation;
  if (cfg.domain_shift) {
    rotation = pairwise_rotation(cfg.latent_dim, cfg.domain_shift->rotation_angle);
  }
  if (truth) {
    truth->prototypes = prototypes;
    truth->transforms = transforms;
    truth->projection = projection;
  }

  // Composition sampling weights: one Zipf law over the flattened table,
  // optionally skewed further per action and per adverb.
  const int table = cfg.n_actions * n_adverbs;
  std::vector<int> table_rank = ranks(table, derive_seed(cfg.seed, kStreamRanks));
  std::vector<int> action_rank =
      ranks(cfg.n_actions, derive_seed(cfg.seed, kStreamRanks + 1));
  std::vector<int> adverb_rank =
      ranks(n_adverbs, derive_seed(cfg.seed, kStreamRanks + 2));
  std::vector<double> cumulative(table);
  double acc = 0;
  for (int i = 0; i < table; ++i) {
    int a = i / n_adverbs;
    int m = i % n_adverbs;
    double w = std::pow(table_rank[i] + 1.0, -cfg.zipf_pair) *
               std::pow(action_rank[a] + 1.0, -cfg.zipf_action) *
               std::pow(adverb_rank[m] + 1.0, -cfg.zipf_adverb);
    acc += w;
    cumulative[i] = acc;
  }

  const uint64_t clip_base =
      derive_seed(derive_seed(cfg.seed, kStreamClips), fnv1a(cfg.domain));
  const int id_width =
      std::max(6, static_cast<int>(std::to_string(cfg.clips - 1).size()));
  const double bias = cfg.domain_shift ? cfg.domain_shift->feature_bias : 0.0;
  int n_distract = std::min(
      cfg.segments - 1,
      static_cast<int>(std::llround(cfg.distractor_fraction * cfg.segments)));

  data.clips.reserve(cfg.clips);
  for (int i = 0; i < cfg.clips; ++i) {
    Rng rng(derive_seed(clip_base, static_cast<uint64_t>(i)));
    int comp = static_cast<int>(rng.categorical(cumulative));
    ActionId action = comp / n_adverbs;
    AdverbId adverb = comp % n_adverbs;

    VideoClip clip;
    clip.clip_id = cfg.domain + "_" + zero_pad(i, id_width);
    clip.action = action;
    clip.adverb = adverb;
    clip.domain = cfg.domain;

    // Hidden co-occurring adverbs: one side of up to cooccur_max pairs other
    // than the primary pair, so an adverb never rides with its antonym.
    int primary_pair = data.vocab.adverbs.pair_of(adverb);
    std::vector<int> other_pairs;
    for (int p = 0; p < cfg.n_adverb_pairs; ++p) {
      if (p != primary_pair) other_pairs.push_back(p);
    }
    int n_hidden = static_cast<int>(rng.uniform_index(cfg.cooccur_max + 1));
    n_hidden = std::min<int>(n_hidden, other_pairs.size());
    rng.shuffle(other_pairs);
    for (int h = 0; h < n_hidden; ++h) {
      int side = static_cast<int>(rng.uniform_index(2));
      clip.hidden_adverbs.push_back(2 * other_pairs[h] + side);
    }
    std::sort(clip.hidden_adverbs.begin(), clip.hidden_adverbs.end());

    Eigen::RowVectorXd z = prototypes.row(action) * transforms[adverb];
    for (AdverbId h : clip.hidden_adverbs) z = z * transforms[h];
    if (cfg.domain_shift) z = z * rotation;
    Eigen::RowVectorXd signal = z * projection;

    std::vector<int> order(cfg.segments);
    for (int s = 0; s < cfg.segments; ++s) order[s] = s;
    rng.shuffle(order);
    std::vector<bool> distractor(cfg.segments, false);
    for (int d = 0; d < n_distract; ++d) distractor[order[d]] = true;

    clip.features.resize(cfg.segments, cfg.feature_dim);
    for (int s = 0; s < cfg.segments; ++s) {
      for (int j = 0; j < cfg.feature_dim; ++j) {
        double v = distractor[s] ? rng.normal()
                                 : signal(j) + cfg.noise_sigma * rng.normal();
        clip.features(s, j) = quantize(v + bias);
      }
    }
    data.clips.push_back(std::move(clip));
  }
  return data;
}

DatasetSplit split_seen(const Dataset& data, double label_fraction,
                        double test_fraction, uint64_t seed) {
  if (label_fraction <= 0 || label_fraction > 1) {
    throw ConfigError("split_seen: label fraction must be in (0, 1]");
  }
  if (test_fraction < 0 || test_fraction >= 1) {
    throw ConfigError("split_seen: test fraction must be in [0, 1)");
  }
  require_labeled(data.clips, "split_seen");
  if (data.clips.empty()) {
    throw DataError("split_seen: empty dataset");
  }

  // Group clip indices by composition, then shuffle within each group.
  std::map<Composition, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(data.clips.size()); ++i) {
    groups[{data.clips[i].action, *data.clips[i].adverb}].push_back(i);
  }
  Rng rng(derive_seed(seed, kStreamSeenShuffle));
  std::vector<Composition> comps;
  std::vector<std::vector<int>> members;
  for (auto& [comp, idx] : groups) {
    rng.shuffle(idx);
    comps.push_back(comp);
    members.push_back(idx);
  }
  const size_t n_comps = comps.size();

  // Test quota first: stratified, capped so every composition keeps at least
  // one training instance.
  long target_test =
      std::llround(test_fraction * static_cast<double>(data.clips.size()));
  std::vector<double> share(n_comps);
  std::vector<int> cap(n_comps);
  for (size_t c = 0; c < n_comps; ++c) {
    share[c] = test_fraction * members[c].size();
    cap[c] = static_cast<int>(members[c].size()) - 1;
  }
  std::vector<int> test_quota = largest_remainder(share, cap, target_test);

  long n_train = 0;
  for (size_t c = 0; c < n_comps; ++c) {
    n_train += members[c].size() - test_quota[c];
  }
  long target_labeled = std::llround(label_fraction * n_train);
  if (target_labeled < 1) {
    throw DataError("split_seen: label fraction " + std::to_string(label_fraction) +
                    " leaves no labeled instances");
  }
  for (size_t c = 0; c < n_comps; ++c) {
    int train_c = static_cast<int>(members[c].size()) - test_quota[c];
    share[c] = label_fraction * train_c;
    cap[c] = train_c;
  }
  std::vector<int> labeled_quota = largest_remainder(share, cap, target_labeled);

  // Every composition keeps one labeled instance where the budget allows:
  // move single units from the best-funded groups to starved ones.
  while (true) {
    size_t starved = n_comps;
    for (size_t c = 0; c < n_comps; ++c) {
      if (labeled_quota[c] == 0 && cap[c] > 0) {
        starved = c;
        break;
      }
    }
    if (starved == n_comps) break;
    size_t donor = n_comps;
    for (size_t c = 0; c < n_comps; ++c) {
      if (labeled_quota[c] >= 2 &&
          (donor == n_comps || labeled_quota[c] > labeled_quota[donor])) {
        donor = c;
      }
    }
    if (donor == n_comps) break;  // nothing to spare
    --labeled_quota[donor];
    ++labeled_quota[starved];
  }

  DatasetSplit split;
  split.vocab = data.vocab;
  std::set<Composition> labeled_comps;
  for (size_t c = 0; c < n_comps; ++c) {
    if (labeled_quota[c] > 0) labeled_comps.insert(comps[c]);
  }
  for (size_t c = 0; c < n_comps; ++c) {
    const auto& idx = members[c];
    int q_test = test_quota[c];
    int q_label = labeled_quota[c];
    for (size_t pos = 0; pos < idx.size(); ++pos) {
      const VideoClip& clip = data.clips[idx[pos]];
      if (static_cast<int>(pos) < q_test) {
        if (labeled_comps.count(comps[c])) {
          split.test.push_back(clip);
        } else {
          split.dropped_test_clips.push_back(clip.clip_id);
        }
      } else if (static_cast<int>(pos) < q_test + q_label) {
        split.labeled.push_back(clip);
      } else {
        VideoClip u = clip;
        u.adverb.reset();
        split.unlabeled.push_back(std::move(u));
      }
    }
  }
  std::sort(split.dropped_test_clips.begin(), split.dropped_test_clips.end());
  split.c_labeled = sorted_compositions(split.labeled);
  split.c_test = sorted_compositions(split.test);
  validate_split(split, SplitTask::seen);
  return split;
}

DatasetSplit split_unseen(const Dataset& data, uint64_t seed) {
  require_labeled(data.clips, "split_unseen");
  if (data.clips.empty()) {
    throw DataError("split_unseen: empty dataset");
  }
  const auto& adverbs = data.vocab.adverbs;

  // Units are (action, antonym pair); count instances per composition.
  std::map<Composition, std::vector<int>> by_comp;
  std::map<ActionId, std::set<int>> pairs_of_action;
  for (int i = 0; i < static_cast<int>(data.clips.size()); ++i) {
    const VideoClip& c = data.clips[i];
    by_comp[{c.action, *c.adverb}].push_back(i);
    pairs_of_action[c.action].insert(adverbs.pair_of(*c.adverb));
  }
  for (const auto& [action, pairs] : pairs_of_action) {
    if (pairs.size() < 2) {
      throw DataError("split_unseen: action '" + data.vocab.actions.name(action) +
                      "' has only " + std::to_string(pairs.size()) +
                      " antonym-pair composition(s); cannot cover both halves");
    }
  }

  auto adverb_present = [&](const std::set<std::pair<ActionId, int>>& units,
                            AdverbId m) {
    for (const auto& [action, pair] : units) {
      if (pair == adverbs.pair_of(m) && by_comp.count({action, m})) return true;
    }
    return false;
  };

  std::set<std::pair<ActionId, int>> half1, half2;
  bool covered = false;
  std::string uncovered;
  for (int attempt = 0; attempt < 100 && !covered; ++attempt) {
    Rng rng(derive_seed(seed, kStreamUnseenAssign + attempt));
    half1.clear();
    half2.clear();
    for (const auto& [action, pair_set] : pairs_of_action) {
      std::vector<int> pairs(pair_set.begin(), pair_set.end());
      rng.shuffle(pairs);
      size_t nh1 = (pairs.size() + 1) / 2;
      for (size_t p = 0; p < pairs.size(); ++p) {
        (p < nh1 ? half1 : half2).insert({action, pairs[p]});
      }
    }
    covered = true;
    for (AdverbId m = 0; m < adverbs.size() && covered; ++m) {
      if (!adverb_present(half1, m)) {
        covered = false;
        uncovered = "adverb '" + adverbs.name(m) + "' missing from the labeled half";
      } else if (!adverb_present(half2, m)) {
        covered = false;
        uncovered = "adverb '" + adverbs.name(m) + "' missing from the held-out half";
      }
    }
  }
  if (!covered) {
    throw DataError("split_unseen: no pair assignment covers every adverb: " +
                    uncovered);
  }

  DatasetSplit split;
  split.vocab = data.vocab;
  std::set<Composition> heldout_comps;
  std::vector<int> heldout_clips;
  for (const auto& [comp, idx] : by_comp) {
    bool in_half1 = half1.count({comp.first, adverbs.pair_of(comp.second)}) > 0;
    if (in_half1) {
      for (int i : idx) split.labeled.push_back(data.clips[i]);
    } else {
      heldout_comps.insert(comp);
      for (int i : idx) heldout_clips.push_back(i);
    }
  }
  Rng hrng(derive_seed(seed, kStreamHoldoutShuffle));
  hrng.shuffle(heldout_clips);
  size_t n_test = heldout_clips.size() / 2;
  for (size_t pos = 0; pos < heldout_clips.size(); ++pos) {
    const VideoClip& clip = data.clips[heldout_clips[pos]];
    if (pos < n_test) {
      split.test.push_back(clip);
    } else {
      VideoClip u = clip;
      u.adverb.reset();
      split.unlabeled.push_back(std::move(u));
    }
  }
  // Clip order independent of the shuffle for byte-stable serialization.
  auto by_id = [](const VideoClip& a, const VideoClip& b) {
    return a.clip_id < b.clip_id;
  };
  std::sort(split.test.begin(), split.test.end(), by_id);
  std::sort(split.unlabeled.begin(), split.unlabeled.end(), by_id);
  split.c_labeled = sorted_compositions(split.labeled);
  split.c_test = sorted_compositions(split.test);
  split.c_heldout.assign(heldout_comps.begin(), heldout_comps.end());
  validate_split(split, SplitTask::unseen);
  return split;
}

DatasetSplit split_domain(const Dataset& source, const Dataset& target,
                          uint64_t seed) {
  if (!(source.vocab == target.vocab)) {
    throw DataError("split_domain: source and target vocabularies differ");
  }
  require_labeled(source.clips, "split_domain");
  require_labeled(target.clips, "split_domain");

  DatasetSplit split;
  split.vocab = source.vocab;
  split.labeled = source.clips;
  std::vector<int> order = permutation(static_cast<int>(target.clips.size()),
                                       derive_seed(seed, kStreamHoldoutShuffle));
  size_t n_test = target.clips.size() / 2;
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const VideoClip& clip = target.clips[order[pos]];
    if (pos < n_test) {
      split.test.push_back(clip);
    } else {
      VideoClip u = clip;
      u.adverb.reset();
      split.unlabeled.push_back(std::move(u));
    }
  }
  auto by_id = [](const VideoClip& a, const VideoClip& b) {
    return a.clip_id < b.clip_id;
  };
  std::sort(split.test.begin(), split.test.end(), by_id);
  std::sort(split.unlabeled.begin(), split.unlabeled.end(), by_id);
  split.c_labeled = sorted_compositions(split.labeled);
  split.c_test = sorted_compositions(split.test);
  validate_split(split, SplitTask::domain);
  return split;
}

void validate_split(const DatasetSplit& split, SplitTask task) {
  std::set<std::string> ids;
  auto check_ids = [&](const std::vector<VideoClip>& clips, const char* part) {
    for (const auto& c : clips) {
      if (!ids.insert(c.clip_id).second) {
        throw DataError("split: clip " + c.clip_id + " appears twice (" + part + ")");
      }
    }
  };
  check_ids(split.labeled, "labeled");
  check_ids(split.unlabeled, "unlabeled");
  check_ids(split.test, "test");
  for (const auto& c : split.labeled) {
    if (!c.adverb) throw DataError("split: labeled clip " + c.clip_id + " unlabeled");
  }
  for (const auto& c : split.unlabeled) {
    if (c.adverb) {
      throw DataError("split: unlabeled clip " + c.clip_id + " carries a label");
    }
  }
  for (const auto& c : split.test) {
    if (!c.adverb) throw DataError("split: test clip " + c.clip_id + " unlabeled");
  }
  if (split.c_labeled != sorted_compositions(split.labeled) ||
      split.c_test != sorted_compositions(split.test)) {
    throw DataError("split: stored composition sets disagree with the clips");
  }

  std::set<Composition> labeled_set(split.c_labeled.begin(), split.c_labeled.end());
  if (task == SplitTask::seen) {
    for (const auto& comp : split.c_test) {
      if (!labeled_set.count(comp)) {
        throw DataError("split: test composition outside the labeled set");
      }
    }
  } else if (task == SplitTask::unseen) {
    std::set<Composition> heldout(split.c_heldout.begin(), split.c_heldout.end());
    for (const auto& comp : split.c_test) {
      if (labeled_set.count(comp)) {
        throw DataError("split: unseen-task test composition is also labeled");
      }
      if (!heldout.count(comp)) {
        throw DataError("split: test composition outside the held-out half");
      }
    }
    std::set<ActionId> actions_l, actions_h;
    std::set<AdverbId> adverbs_l, adverbs_h;
    for (const auto& [a, m] : labeled_set) {
      actions_l.insert(a);
      adverbs_l.insert(m);
    }
    for (const auto& [a, m] : heldout) {
      actions_h.insert(a);
      adverbs_h.insert(m);
    }
    for (ActionId a = 0; a < split.vocab.actions.size(); ++a) {
      if (actions_l.count(a) != 1 || actions_h.count(a) != 1) {
        throw DataError("split: action '" + split.vocab.actions.name(a) +
                        "' not covered in both halves");
      }
    }
    for (AdverbId m = 0; m < split.vocab.adverbs.size(); ++m) {
      if (adverbs_l.count(m) != 1 || adverbs_h.count(m) != 1) {
        throw DataError("split: adverb '" + split.vocab.adverbs.name(m) +
                        "' not covered in both halves");
      }
    }
  }
}

std::vector<std::pair<Composition, long>> composition_counts(
    const std::vector<VideoClip>& clips) {
  std::map<Composition, long> counts;
  for (const auto& c : clips) {
    if (c.adverb) ++counts[{c.action, *c.adverb}];
  }
  return {counts.begin(), counts.end()};
}

namespace {

void write_features(std::ostream& out, const std::vector<const VideoClip*>& clips) {
  out.write(kFeatureMagic, 9);
  for (const VideoClip* c : clips) {
    for (Eigen::Index i = 0; i < c->features.rows(); ++i) {
      for (Eigen::Index j = 0; j < c->features.cols(); ++j) {
        float v = static_cast<float>(c->features(i, j));
        out.write(reinterpret_cast<const char*>(&v), sizeof(float));
      }
    }
  }
}

struct ManifestRow {
  std::string clip_id, action, adverb, hidden, domain;
  uint64_t offset = 0;
  int rows = 0, cols = 0;
};

void write_manifest(std::ostream& out, const std::vector<const VideoClip*>& clips,
                    const Vocabularies& vocab, uint64_t& offset) {
  for (const VideoClip* c : clips) {
    out << c->clip_id << '\t' << vocab.actions.name(c->action) << '\t';
    out << (c->adverb ? vocab.adverbs.name(*c->adverb) : "-") << '\t';
    if (c->hidden_adverbs.empty()) {
      out << '-';
    } else {
      for (size_t h = 0; h < c->hidden_adverbs.size(); ++h) {
        out << (h ? "," : "") << vocab.adverbs.name(c->hidden_adverbs[h]);
      }
    }
    out << '\t' << (c->domain.empty() ? "-" : c->domain) << '\t' << offset << '\t'
        << c->features.rows() << '\t' << c->features.cols() << '\n';
    offset += static_cast<uint64_t>(c->features.size()) * sizeof(float);
  }
}

std::vector<VideoClip> read_manifest(const std::string& manifest_path,
                                     const std::string& blob_path,
                                     const Vocabularies& vocab) {
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("cannot open manifest: " + manifest_path);
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw DataError("cannot open feature blob: " + blob_path);
  char magic[9];
  blob.read(magic, 9);
  if (blob.gcount() != 9 || std::string(magic, 9) != kFeatureMagic) {
    throw DataError("feature blob has a bad header: " + blob_path);
  }

  std::vector<VideoClip> clips;
  std::string line;
  int lineno = 0;
  while (std::getline(mf, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestRow row;
    if (!(std::getline(ls, row.clip_id, '\t') && std::getline(ls, row.action, '\t') &&
          std::getline(ls, row.adverb, '\t') && std::getline(ls, row.hidden, '\t') &&
          std::getline(ls, row.domain, '\t') && (ls >> row.offset) &&
          (ls >> row.rows) && (ls >> row.cols))) {
      throw DataError(manifest_path + ":" + std::to_string(lineno) +
                      ": malformed manifest row");
    }
    if (row.rows <= 0 || row.cols <= 0) {
      throw DataError(manifest_path + ":" + std::to_string(lineno) + ": bad shape");
    }
    VideoClip clip;
    clip.clip_id = row.clip_id;
    clip.action = vocab.actions.id(row.action);
    if (row.adverb != "-") clip.adverb = vocab.adverbs.id(row.adverb);
    if (row.hidden != "-") {
      std::istringstream hs(row.hidden);
      std::string name;
      while (std::getline(hs, name, ',')) {
        clip.hidden_adverbs.push_back(vocab.adverbs.id(name));
      }
    }
    if (row.domain != "-") clip.domain = row.domain;
    clip.features.resize(row.rows, row.cols);
    blob.seekg(9 + static_cast<std::streamoff>(row.offset));
    std::vector<float> buf(static_cast<size_t>(row.rows) * row.cols);
    blob.read(reinterpret_cast<char*>(buf.data()), buf.size() * sizeof(float));
    if (static_cast<size_t>(blob.gcount()) != buf.size() * sizeof(float)) {
      throw DataError(manifest_path + ":" + std::to_string(lineno) +
                      ": feature blob truncated for clip " + clip.clip_id);
    }
    for (int i = 0; i < row.rows; ++i) {
      for (int j = 0; j < row.cols; ++j) {
        clip.features(i, j) =
            static_cast<double>(buf[static_cast<size_t>(i) * row.cols + j]);
      }
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::vector<const VideoClip*> pointers(const std::vector<VideoClip>& clips) {
  std::vector<const VideoClip*> p;
  p.reserve(clips.size());
  for (const auto& c : clips) p.push_back(&c);
  return p;
}

void write_compositions(std::ostream& out, const char* tag,
                        const std::vector<Composition>& comps) {
  out << tag << ' ' << comps.size() << '\n';
  for (const auto& [a, m] : comps) out << a << ' ' << m << '\n';
}

std::vector<Composition> read_compositions(std::istream& in, const char* tag,
                                           const std::string& origin) {
  std::string name;
  size_t n = 0;
  if (!(in >> name >> n) || name != tag) {
    throw DataError(origin + ": expected '" + tag + "' section");
  }
  std::vector<Composition> comps(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(in >> comps[i].first >> comps[i].second)) {
      throw DataError(origin + ": truncated '" + tag + "' section");
    }
  }
  return comps;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_vocabularies(data.vocab, dir + "/vocab.txt");
  auto ptrs = pointers(data.clips);
  std::ofstream mf(dir + "/manifest.tsv");
  if (!mf) throw DataError("cannot write manifest in " + dir);
  uint64_t offset = 0;
  write_manifest(mf, ptrs, data.vocab, offset);
  std::ofstream blob(dir + "/features.bin", std::ios::binary);
  if (!blob) throw DataError("cannot write feature blob in " + dir);
  write_features(blob, ptrs);
}

Dataset load_dataset(const std::string& dir) {
  Dataset data;
  data.vocab = load_vocabularies(dir + "/vocab.txt");
  data.clips = read_manifest(dir + "/manifest.tsv", dir + "/features.bin", data.vocab);
  return data;
}

void save_split(const DatasetSplit& split, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_vocabularies(split.vocab, dir + "/vocab.txt");
  std::vector<const VideoClip*> all = pointers(split.labeled);
  {
    auto u = pointers(split.unlabeled);
    all.insert(all.end(), u.begin(), u.end());
    auto t = pointers(split.test);
    all.insert(all.end(), t.begin(), t.end());
  }
  uint64_t offset = 0;
  {
    std::ofstream mf(dir + "/labeled.tsv");
    if (!mf) throw DataError("cannot write labeled manifest in " + dir);
    write_manifest(mf, pointers(split.labeled), split.vocab, offset);
  }
  {
    std::ofstream mf(dir + "/unlabeled.tsv");
    if (!mf) throw DataError("cannot write unlabeled manifest in " + dir);
    write_manifest(mf, pointers(split.unlabeled), split.vocab, offset);
  }
  {
    std::ofstream mf(dir + "/test.tsv");
    if (!mf) throw DataError("cannot write test manifest in " + dir);
    write_manifest(mf, pointers(split.test), split.vocab, offset);
  }
  std::ofstream blob(dir + "/features.bin", std::ios::binary);
  if (!blob) throw DataError("cannot write feature blob in " + dir);
  write_features(blob, all);

  std::ofstream info(dir + "/split_info.txt");
  if (!info) throw DataError("cannot write split info in " + dir);
  write_compositions(info, "c_labeled", split.c_labeled);
  write_compositions(info, "c_test", split.c_test);
  write_compositions(info, "c_heldout", split.c_heldout);
  info << "dropped " << split.dropped_test_clips.size() << '\n';
  for (const auto& id : split.dropped_test_clips) info << id << '\n';
}

DatasetSplit load_split(const std::string& dir) {
  DatasetSplit split;
  split.vocab = load_vocabularies(dir + "/vocab.txt");
  const std::string blob = dir + "/features.bin";
  split.labeled = read_manifest(dir + "/labeled.tsv", blob, split.vocab);
  split.unlabeled = read_manifest(dir + "/unlabeled.tsv", blob, split.vocab);
  split.test = read_manifest(dir + "/test.tsv", blob, split.vocab);

  const std::string info_path = dir + "/split_info.txt";
  std::ifstream info(info_path);
  if (!info) throw DataError("cannot open " + info_path);
  split.c_labeled = read_compositions(info, "c_labeled", info_path);
  split.c_test = read_compositions(info, "c_test", info_path);
  split.c_heldout = read_compositions(info, "c_heldout", info_path);
  std::string tag;
  size_t n = 0;
  if (!(info >> tag >> n) || tag != "dropped") {
    throw DataError(info_path + ": expected 'dropped' section");
  }
  for (size_t i = 0; i < n; ++i) {
    std::string id;
    if (!(info >> id)) throw DataError(info_path + ": truncated dropped list");
    split.dropped_test_clips.push_back(id);
  }
  return split;
}

}  // namespace advkit

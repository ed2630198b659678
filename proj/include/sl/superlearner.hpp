#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sl/common.hpp"
#include "sl/dataset.hpp"
#include "sl/folds.hpp"
#include "sl/learners.hpp"
#include "sl/meta.hpp"
#include "sl/screens.hpp"

namespace sl {

struct Candidate {
  ScreenSpec screen;
  LearnerSpec learner;

  std::string name() const { return screen.name() + "+" + learner.name(); }
};

// Screen-major ordering: all learners under the first screen, then the
// second, and so on, so weight vectors are interpretable.
struct CandidateLibrary {
  std::vector<Candidate> candidates;

  static CandidateLibrary cross(const std::vector<ScreenSpec>& screens,
                                const std::vector<LearnerSpec>& learners) {
    require(!screens.empty() && !learners.empty(),
            "candidate library: need at least one screen and one learner");
    CandidateLibrary lib;
    lib.candidates.reserve(screens.size() * learners.size());
    for (const ScreenSpec& s : screens)
      for (const LearnerSpec& l : learners) lib.candidates.push_back({s, l});
    return lib;
  }

  std::size_t size() const { return candidates.size(); }
};

struct CandidateFit {
  FeatureSubset subset;
  std::shared_ptr<const Model> model;
  bool fallback = false;  // fit failed; model is the outcome-mean constant
};

// Fitted ensemble: simplex weights over the candidate library plus every
// candidate refit on the full data.
struct SLModel {
  CandidateLibrary library;
  std::vector<double> weights;       // >= 0, sum 1
  std::vector<CandidateFit> fitted;  // aligned with library
  OutcomeKind outcome_kind = OutcomeKind::Continuous;
  std::size_t p = 0;
  MetaInfo meta_info;
  std::vector<std::string> warnings;
};

namespace sl_detail {

// Learners grouped so that one grown model serves several tuning values:
// forests are grown once at the smallest node size, boosted trees once per
// shrinkage at the largest stage count. Split search does not depend on
// the stopping size and boosting is stagewise, so truncated evaluation
// reproduces the individually-fit models' law exactly.
struct LearnerGroupFits {
  std::map<int, std::shared_ptr<const ForestFit>> forest;             // keyed by grown mns
  std::map<double, std::shared_ptr<const BoostFit>> boost;            // keyed by shrinkage
  std::shared_ptr<const Model> lasso;
  std::shared_ptr<const Model> mars;
};

inline std::shared_ptr<const Model> fit_in_group(const Dataset& train,
                                                 const LearnerSpec& spec, Rng fit_rng,
                                                 LearnerGroupFits& group,
                                                 const std::vector<LearnerSpec>& siblings) {
  switch (spec.kind) {
    case LearnerKind::Lasso: {
      if (!group.lasso)
        group.lasso = std::shared_ptr<const Model>(
            std::make_shared<LassoModel>(fit_lasso(train, 10, fit_rng.fork("lasso"))));
      return group.lasso;
    }
    case LearnerKind::Mars: {
      if (!group.mars)
        group.mars = std::shared_ptr<const Model>(std::make_shared<MarsModel>(fit_mars(train)));
      return group.mars;
    }
    case LearnerKind::RandomForest: {
      int grow_mns = spec.min_node_size;
      for (const LearnerSpec& s : siblings)
        if (s.kind == LearnerKind::RandomForest) grow_mns = std::min(grow_mns, s.min_node_size);
      auto it = group.forest.find(grow_mns);
      if (it == group.forest.end()) {
        ForestConfig cfg;
        cfg.n_trees = 1000;
        cfg.min_node_size = grow_mns;
        it = group.forest
                 .emplace(grow_mns, grow_forest(train.x, train.y, train.outcome_kind, cfg,
                                                fit_rng.fork("forest")))
                 .first;
      }
      return std::make_shared<ForestModel>(it->second, spec.min_node_size);
    }
    case LearnerKind::GradBoost: {
      int grow_trees = spec.n_trees;
      for (const LearnerSpec& s : siblings)
        if (s.kind == LearnerKind::GradBoost && s.shrinkage == spec.shrinkage)
          grow_trees = std::max(grow_trees, s.n_trees);
      auto it = group.boost.find(spec.shrinkage);
      if (it == group.boost.end()) {
        GradBoostConfig cfg;
        cfg.n_trees = grow_trees;
        cfg.shrinkage = spec.shrinkage;
        it = group.boost.emplace(spec.shrinkage, grow_boost(train.x, train.y,
                                                            train.outcome_kind, cfg))
                 .first;
      }
      return std::make_shared<BoostModel>(it->second, spec.n_trees);
    }
  }
  throw Error("fit_in_group: unreachable");
}

// Screens refit per training set, with family-level statistics shared
// between screens that differ only in their threshold.
class ScreenCache {
 public:
  ScreenCache(const Dataset& train, Rng rng) : train_(train), rng_(rng) {}

  const FeatureSubset& get(const ScreenSpec& spec) {
    const std::string key = spec.name();
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    std::vector<std::size_t> keep;
    const std::size_t p = train_.n_cols();
    switch (spec.kind) {
      case ScreenKind::AllVars:
        return cache_.emplace(key, all_features(p)).first->second;
      case ScreenKind::UnivarCorP: {
        const std::vector<double>& pv = pearson_p();
        for (std::size_t j = 0; j < p; ++j)
          if (pv[j] <= spec.p_threshold) keep.push_back(j);
        break;
      }
      case ScreenKind::RankCorTopK: {
        if (static_cast<std::size_t>(spec.k) >= p)
          return cache_.emplace(key, all_features(p)).first->second;
        spearman();
        keep = screen_detail::top_k_by(spearman_p_, spec.k, true, &abs_spearman_r_);
        break;
      }
      case ScreenKind::RFImportanceTopK: {
        if (static_cast<std::size_t>(spec.k) >= p)
          return cache_.emplace(key, all_features(p)).first->second;
        keep = screen_detail::top_k_by(rf_importance(), spec.k, false, nullptr);
        break;
      }
      case ScreenKind::LassoNonzero:
        keep = screen_detail::lasso_nonzero_set(train_, rng_.fork("screen-lasso"));
        break;
    }
    if (keep.empty()) keep = screen_detail::fallback_columns(train_);
    return cache_.emplace(key, make_feature_subset(std::move(keep), p)).first->second;
  }

 private:
  const std::vector<double>& pearson_p() {
    if (pearson_p_.empty()) pearson_p_ = screen_detail::pearson_pvalues(train_);
    return pearson_p_;
  }

  void spearman() {
    if (!spearman_p_.empty()) return;
    const std::size_t p = train_.n_cols();
    spearman_p_.resize(p);
    abs_spearman_r_.resize(p);
    const std::vector<double> ry = midranks({train_.y.data(), train_.y.size()});
    for (std::size_t j = 0; j < p; ++j) {
      const std::vector<double> rx = midranks(train_.x.col_span(j));
      spearman_p_[j] = pearson_cor_test_pvalue(rx, ry);
      abs_spearman_r_[j] = std::fabs(pearson_cor(rx, ry));
    }
  }

  const std::vector<double>& rf_importance() {
    if (rf_importance_.empty())
      rf_importance_ = screen_detail::rf_screen_importance(train_, rng_.fork("screen-rf"));
    return rf_importance_;
  }

  const Dataset& train_;
  Rng rng_;
  std::map<std::string, FeatureSubset> cache_;
  std::vector<double> pearson_p_;
  std::vector<double> spearman_p_;
  std::vector<double> abs_spearman_r_;
  std::vector<double> rf_importance_;
};

inline Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
  Matrix x(rows.size(), d.n_cols());
  std::vector<double> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    y[r] = d.y[rows[r]];
    for (std::size_t j = 0; j < d.n_cols(); ++j) x(r, j) = d.x(rows[r], j);
  }
  return Dataset{std::move(x), std::move(y), d.outcome_kind};
}

// Unique screens in candidate order, with the learners attached to each.
struct ScreenGroup {
  ScreenSpec screen;
  std::vector<std::size_t> candidate_idx;
  std::vector<LearnerSpec> learners;
};

inline std::vector<ScreenGroup> group_by_screen(const CandidateLibrary& lib) {
  std::vector<ScreenGroup> groups;
  for (std::size_t c = 0; c < lib.size(); ++c) {
    const Candidate& cand = lib.candidates[c];
    ScreenGroup* g = nullptr;
    for (ScreenGroup& existing : groups)
      if (existing.screen == cand.screen) g = &existing;
    if (!g) {
      groups.push_back({cand.screen, {}, {}});
      g = &groups.back();
    }
    g->candidate_idx.push_back(c);
    g->learners.push_back(cand.learner);
  }
  return groups;
}

}  // namespace sl_detail

// n x |library| matrix of held-out predictions: entry (i, c) comes from a
// model whose screen and learner were both fit without fold(i)'s rows.
// A failed candidate fit fills its fold entries with the training-fold
// outcome mean and adds a warning rather than aborting the run.
inline Matrix cv_predictions(const Dataset& d, const CandidateLibrary& lib,
                             const FoldAssignment& folds, Rng rng,
                             std::vector<std::string>* warnings = nullptr) {
  require(d.n_rows() == folds.fold_of.size(), "cv_predictions: fold assignment size mismatch");
  const std::size_t n = d.n_rows();
  Matrix z(n, lib.size());
  const std::vector<sl_detail::ScreenGroup> groups = sl_detail::group_by_screen(lib);

  for (int v = 0; v < folds.n_folds; ++v) {
    const std::vector<std::size_t> train_rows = folds.rows_not_in_fold(v);
    const std::vector<std::size_t> test_rows = folds.rows_in_fold(v);
    require(!train_rows.empty() && !test_rows.empty(), "cv_predictions: empty fold");
    const Dataset train = sl_detail::take_rows(d, train_rows);
    const double train_mean = mean_of({train.y.data(), train.y.size()});

    Rng fold_rng = rng.fork(static_cast<std::uint64_t>(v));
    sl_detail::ScreenCache screens(train, fold_rng.fork("screens"));

    for (const sl_detail::ScreenGroup& group : groups) {
      sl_detail::LearnerGroupFits fits;
      FeatureSubset subset;
      bool screen_failed = false;
      std::string screen_error;
      try {
        subset = screens.get(group.screen);
      } catch (const std::exception& e) {
        screen_failed = true;
        screen_error = e.what();
      }

      Dataset train_sub;
      Matrix test_sub;
      if (!screen_failed) {
        train_sub = subset_columns(train, subset);
        Matrix test_x(test_rows.size(), subset.size());
        for (std::size_t k = 0; k < subset.size(); ++k)
          for (std::size_t r = 0; r < test_rows.size(); ++r)
            test_x(r, k) = d.x(test_rows[r], subset.indices[k]);
        test_sub = std::move(test_x);
      }

      for (std::size_t gi = 0; gi < group.candidate_idx.size(); ++gi) {
        const std::size_t c = group.candidate_idx[gi];
        const LearnerSpec& learner = group.learners[gi];
        std::vector<double> pred;
        std::string error;
        if (screen_failed) {
          error = screen_error;
        } else {
          try {
            Rng fit_rng = fold_rng.fork(fnv1a64("fit:" + group.screen.name()));
            const std::shared_ptr<const Model> model =
                sl_detail::fit_in_group(train_sub, learner, fit_rng, fits, group.learners);
            pred = model->predict(test_sub);
          } catch (const std::exception& e) {
            error = e.what();
          }
        }
        if (pred.empty()) {
          pred.assign(test_rows.size(), train_mean);
          if (warnings)
            warnings->push_back("fold " + std::to_string(v) + ", candidate " +
                                lib.candidates[c].name() + ": " + error +
                                " (mean fallback used)");
        }
        for (std::size_t r = 0; r < test_rows.size(); ++r) z(test_rows[r], c) = pred[r];
      }
    }
  }
  return z;
}

// The Super Learner: builds the screen x learner candidate library, gets
// cross-validated predictions, solves for convex ensemble weights (NNLS
// loss for continuous outcomes, log-likelihood loss for binary ones) and
// refits every candidate on the full data.
inline SLModel fit_superlearner(const Dataset& d, const std::vector<ScreenSpec>& screens,
                                const std::vector<LearnerSpec>& learners, int v, Rng rng) {
  require(d.n_rows() >= 40, "fit_superlearner: need at least 40 rows");
  require(v >= 2, "fit_superlearner: need at least 2 folds");

  SLModel model;
  model.library = CandidateLibrary::cross(screens, learners);
  model.outcome_kind = d.outcome_kind;
  model.p = d.n_cols();

  const bool binary = d.outcome_kind == OutcomeKind::Binary;
  const FoldAssignment folds =
      make_folds(d.n_rows(), v, binary ? &d.y : nullptr, rng.fork("folds"));

  const Matrix z = cv_predictions(d, model.library, folds, rng.fork("cv"), &model.warnings);

  model.weights = binary ? meta_nll(z, {d.y.data(), d.y.size()}, &model.meta_info)
                         : meta_nnls(z, {d.y.data(), d.y.size()}, &model.meta_info);

  // Full-data refit of every candidate, sharing grown models per screen.
  const std::vector<sl_detail::ScreenGroup> groups = sl_detail::group_by_screen(model.library);
  Rng full_rng = rng.fork("full");
  sl_detail::ScreenCache screen_cache(d, full_rng.fork("screens"));
  const double full_mean = mean_of({d.y.data(), d.y.size()});
  model.fitted.resize(model.library.size());

  for (const sl_detail::ScreenGroup& group : groups) {
    sl_detail::LearnerGroupFits fits;
    FeatureSubset subset;
    bool screen_failed = false;
    std::string screen_error;
    try {
      subset = screen_cache.get(group.screen);
    } catch (const std::exception& e) {
      screen_failed = true;
      screen_error = e.what();
    }
    Dataset train_sub;
    if (!screen_failed) train_sub = subset_columns(d, subset);

    for (std::size_t gi = 0; gi < group.candidate_idx.size(); ++gi) {
      const std::size_t c = group.candidate_idx[gi];
      CandidateFit& slot = model.fitted[c];
      std::string error = screen_error;
      if (!screen_failed) {
        slot.subset = subset;
        try {
          Rng fit_rng = full_rng.fork(fnv1a64("fit:" + group.screen.name()));
          slot.model =
              sl_detail::fit_in_group(train_sub, group.learners[gi], fit_rng, fits, group.learners);
        } catch (const std::exception& e) {
          error = e.what();
        }
      }
      if (!slot.model) {
        slot.subset = all_features(d.n_cols());
        slot.model = std::make_shared<ConstantModel>(full_mean, d.n_cols());
        slot.fallback = true;
        model.warnings.push_back("full refit, candidate " + model.library.candidates[c].name() +
                                 ": " + error + " (mean fallback used)");
      }
    }
  }
  return model;
}

// Convex combination of the candidate predictions, each candidate seeing
// its own screen's columns. Binary output is clipped to [0,1].
inline std::vector<double> predict_sl(const SLModel& m, const Matrix& x) {
  require(x.cols() == m.p, "predict_sl: input has " + std::to_string(x.cols()) +
                               " columns, model expects " + std::to_string(m.p));
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t c = 0; c < m.library.size(); ++c) {
    const double w = m.weights[c];
    if (w == 0.0) continue;
    const Matrix x_sub = subset_matrix_columns(x, m.fitted[c].subset);
    const std::vector<double> pred = m.fitted[c].model->predict(x_sub);
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] += w * pred[i];
  }
  if (m.outcome_kind == OutcomeKind::Binary)
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace sl

#include "ctxkm/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ctxkm/checkpoint.hpp"
#include "ctxkm/context_learning.hpp"
#include "ctxkm/metrics.hpp"

namespace ctxkm {
namespace fs = std::filesystem;

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io, "cannot open '" + path.string() + "' for writing");
  return os;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) fail(errc::config, "io.output_dir is not set");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(errc::io, "cannot create output directory '" + dir + "': " + ec.message());
}

Eigen::VectorXd concept_costs(const RunConfig& cfg, const std::vector<std::string>& concepts) {
  Eigen::VectorXd costs = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(concepts.size()),
                                                    cfg.svm_cost);
  for (const auto& [name, value] : cfg.svm_cost_per_concept) {
    const auto it = std::find(concepts.begin(), concepts.end(), name);
    if (it == concepts.end())
      fail(errc::config, "learn.svm_cost." + name + ": no such concept in the labels");
    costs[it - concepts.begin()] = value;
  }
  return costs;
}

void write_training_log(const fs::path& path, const std::vector<OuterLogRow>& log) {
  auto os = open_out(path);
  os << "outer_iter,E,svm_objective,hinge_sum,backtrack_halvings\n";
  for (const auto& row : log)
    os << row.outer_iter << ',' << fmt_g17(row.objective) << ',' << fmt_g17(row.svm_objective)
       << ',' << fmt_g17(row.hinge_sum) << ',' << row.backtrack_halvings << '\n';
}

void write_train_outputs(const RunConfig& cfg, const TrainState& st, int raw_dim) {
  ensure_dir(cfg.output_dir);
  const fs::path out(cfg.output_dir);
  Checkpoint cp;
  cp.grid = cfg.grid;
  cp.mode = cfg.map_mode;
  cp.hi_levels = cfg.map_mode == Phi0Mode::hi ? cfg.hi_levels : 0;
  cp.raw_dim = raw_dim;
  cp.ctx = st.ctx;
  cp.model = st.model;
  cp.objective_history = st.objective_history;
  cp.outer_iter = st.outer_iter;
  cp.converged = st.converged;
  save_checkpoint((out / "checkpoint.ctxc").string(), cp);
  write_training_log(out / "training_log.csv", st.log);
  auto cfg_os = open_out(out / "effective_config.txt");
  write_effective_config(cfg_os, cfg);
}

// Predictions CSV layout shared by cmd_predict (writer) and cmd_eval (reader).
constexpr const char* kPredictionsHeader = "image_id,concept,score,present";

struct Predictions {
  std::vector<std::string> image_ids;
  std::vector<std::string> concepts;
  Eigen::MatrixXd scores;  // N x K
};

Predictions read_predictions(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(errc::io, "cannot open predictions file '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || trim(line) != kPredictionsHeader)
    fail(errc::format, std::string("predictions file must start with header '") +
                           kPredictionsHeader + "'");
  std::vector<std::string> image_ids, concepts;
  std::unordered_map<std::string, int> image_row, concept_col;
  struct Entry {
    int row, col;
    double score;
  };
  std::vector<Entry> entries;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::stringstream ss(t);
    std::string id, concept, score_str, present_str;
    if (!std::getline(ss, id, ',') || !std::getline(ss, concept, ',') ||
        !std::getline(ss, score_str, ',') || !std::getline(ss, present_str))
      fail(errc::format, "predictions line " + std::to_string(line_no) + ": expected 4 fields");
    double score;
    try {
      std::size_t pos = 0;
      score = std::stod(score_str, &pos);
      if (pos != score_str.size()) throw std::invalid_argument(score_str);
    } catch (const std::exception&) {
      fail(errc::value, "predictions line " + std::to_string(line_no) + ": bad score");
    }
    auto [iit, inew] = image_row.try_emplace(id, static_cast<int>(image_ids.size()));
    if (inew) image_ids.push_back(id);
    auto [cit, cnew] = concept_col.try_emplace(concept, static_cast<int>(concepts.size()));
    if (cnew) concepts.push_back(concept);
    entries.push_back({iit->second, cit->second, score});
  }
  if (entries.empty()) fail(errc::shape, "predictions file contains no rows");
  Predictions pred;
  pred.image_ids = std::move(image_ids);
  pred.concepts = std::move(concepts);
  pred.scores.resize(static_cast<Eigen::Index>(pred.image_ids.size()),
                     static_cast<Eigen::Index>(pred.concepts.size()));
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(pred.scores.rows(), pred.scores.cols());
  for (const auto& e : entries) {
    if (seen(e.row, e.col))
      fail(errc::format, "duplicate prediction for image '" + pred.image_ids[e.row] +
                             "', concept '" + pred.concepts[e.col] + "'");
    seen(e.row, e.col) = 1;
    pred.scores(e.row, e.col) = e.score;
  }
  if (seen.minCoeff() == 0)
    fail(errc::shape, "predictions do not cover every (image, concept) pair");
  return pred;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  auto os = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << fmt_g17(m(r, c));
    }
    os << '\n';
  }
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.features_path.empty()) fail(errc::config, "io.features is not set");
  if (cfg.labels_path.empty()) fail(errc::config, "io.labels is not set");

  const FeatureFile raw = read_feature_file(cfg.features_path);
  if (raw.rows != cfg.grid.rows || raw.cols != cfg.grid.cols)
    fail(errc::shape, "feature file grid does not match configured grid");
  if (raw.mode != cfg.map_mode)
    fail(errc::config, "feature file mode '" + to_string(raw.mode) +
                           "' does not match map.mode '" + to_string(cfg.map_mode) + "'");
  if (raw.images.empty()) fail(errc::shape, "feature file contains no images");

  const LabelMatrix labels = load_labels(cfg.labels_path).aligned_to(raw.image_ids());
  labels.validate();

  std::vector<ImageFeatures> images;
  images.reserve(raw.images.size());
  for (const auto& img : raw.images)
    images.push_back({img.image_id, apply_phi0(img.cells, raw.mode, raw.hi_levels)});

  const ContextStack init = make_handcrafted_context(cfg.grid, cfg.gamma, cfg.depth);
  LearnOptions opt;
  opt.eta = cfg.eta;
  opt.inner_steps = cfg.inner_steps;
  opt.max_outer = cfg.max_outer;
  opt.tol = cfg.tol;
  opt.augment_bias = cfg.augment_bias;
  const Eigen::VectorXd costs = concept_costs(cfg, labels.concepts);

  try {
    const TrainState st = alternate_optimize(images, labels, init, costs, opt);
    write_train_outputs(cfg, st, raw.raw_dim);
    std::cout << "train: E=" << fmt_g17(st.objective_history.back())
              << " outer_iters=" << st.outer_iter
              << " converged=" << (st.converged ? "yes" : "no") << " checkpoint="
              << (fs::path(cfg.output_dir) / "checkpoint.ctxc").string() << "\n";
    return kExitOk;
  } catch (const DivergenceError& e) {
    write_train_outputs(cfg, *e.last_finite, raw.raw_dim);
    std::cerr << "train: diverged (" << e.what() << "); wrote last finite state\n";
    return kExitDivergence;
  }
}

int cmd_predict(const std::string& checkpoint_path, const std::string& features_path,
                const std::string& output_csv) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  const FeatureFile raw = read_feature_file(features_path);
  if (raw.rows != cp.grid.rows || raw.cols != cp.grid.cols)
    fail(errc::shape, "feature file grid does not match checkpoint grid");
  if (raw.mode != cp.mode)
    fail(errc::config, "feature file mode does not match checkpoint mode");
  if (!raw.images.empty() && raw.raw_dim != cp.raw_dim)
    fail(errc::shape, "feature dimension " + std::to_string(raw.raw_dim) +
                          " does not match checkpoint dimension " + std::to_string(cp.raw_dim));

  auto os = open_out(output_csv);
  os << kPredictionsHeader << '\n';
  for (const auto& img : raw.images) {
    const ImageFeatures feats{img.image_id, apply_phi0(img.cells, raw.mode, raw.hi_levels)};
    const MapStack maps = forward_map(feats, cp.ctx, false);
    const Eigen::VectorXd scores = score_one(cp.model, maps.pooled);
    for (Eigen::Index k = 0; k < scores.size(); ++k)
      os << img.image_id << ',' << cp.model.concepts[static_cast<std::size_t>(k)] << ','
         << fmt_g17(scores[k]) << ',' << (scores[k] > 0.0 ? 1 : 0) << '\n';
  }
  if (!os) fail(errc::io, "write failed for '" + output_csv + "'");
  return kExitOk;
}

int cmd_eval(const std::string& predictions_path, const std::string& labels_path,
             const std::string& output_dir) {
  const Predictions pred = read_predictions(predictions_path);
  const LabelMatrix all_labels = load_labels(labels_path);

  LabelMatrix truth = all_labels.aligned_to(pred.image_ids);
  // Reorder truth columns to the prediction concept order.
  Eigen::MatrixXi y(truth.y.rows(), static_cast<Eigen::Index>(pred.concepts.size()));
  for (std::size_t k = 0; k < pred.concepts.size(); ++k) {
    const auto it = std::find(truth.concepts.begin(), truth.concepts.end(), pred.concepts[k]);
    if (it == truth.concepts.end())
      fail(errc::shape, "labels file has no concept '" + pred.concepts[k] + "'");
    y.col(static_cast<Eigen::Index>(k)) = truth.y.col(it - truth.concepts.begin());
  }
  truth.concepts = pred.concepts;
  truth.y = std::move(y);

  const EvalReport report = evaluate(pred.scores, truth);
  ensure_dir(output_dir);
  const fs::path out(output_dir);
  {
    auto os = open_out(out / "report.csv");
    write_report_csv(os, report);
  }
  {
    auto os = open_out(out / "report.json");
    write_report_json(os, report);
  }
  std::cout << "eval: MFS=" << report.mfs << " MFC=" << report.mfc << " MAP=" << report.map
            << "\n";
  return kExitOk;
}

int cmd_export_context(const std::string& checkpoint_path, const std::string& output_json) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  auto os = open_out(output_json);
  os << context_to_json(cp.ctx).dump(2) << '\n';
  return kExitOk;
}

int cmd_gram(const RunConfig& cfg, const std::string& features_path,
             const std::string& output_dir, bool force) {
  cfg.validate();
  const std::vector<ImageFeatures> images = load_features(features_path, cfg.grid, cfg.map_mode);
  if (images.empty()) fail(errc::shape, "feature file contains no images");
  const int n = cfg.grid.cell_count();
  const Eigen::Index total = static_cast<Eigen::Index>(n) * images.size();
  if (total > 2000 && !force)
    fail(errc::config, "gram: " + std::to_string(total) +
                           " cells exceeds the 2000-cell guard; pass --force to override");

  const ContextStack ctx = make_handcrafted_context(cfg.grid, cfg.gamma, cfg.depth);
  maybe_warn_contraction(ctx);
  const Eigen::Index base_dim = images.front().cells.rows();
  Eigen::MatrixXd cells(base_dim, total);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].cells.rows() != base_dim)
      fail(errc::shape, "feature dimensions differ across images");
    cells.middleCols(static_cast<Eigen::Index>(i) * n, n) = images[i].cells;
  }
  const Eigen::MatrixXd S = cells.transpose() * cells;
  const Eigen::MatrixXd K = gram_fixed_point(S, ctx, static_cast<int>(images.size()));

  const std::int64_t top_dim = map_dim(static_cast<int>(base_dim), cfg.grid.sectors, cfg.depth);
  Eigen::MatrixXd tops(top_dim, total);
  for (std::size_t i = 0; i < images.size(); ++i)
    tops.middleCols(static_cast<Eigen::Index>(i) * n, n) = forward_map(images[i], ctx, false).top();
  const Eigen::MatrixXd M = tops.transpose() * tops;

  const Eigen::MatrixXd residual = (K - M).cwiseAbs();
  const double k_scale = K.cwiseAbs().maxCoeff();
  const double rel_residual = residual.maxCoeff() / (k_scale > 0.0 ? k_scale : 1.0);

  ensure_dir(output_dir);
  const fs::path out(output_dir);
  write_matrix_csv(out / "gram.csv", K);
  write_matrix_csv(out / "residual.csv", residual);
  {
    auto os = open_out(out / "residual_summary.txt");
    os << "cells = " << total << '\n';
    os << "max_abs_k = " << fmt_g17(k_scale) << '\n';
    os << "max_abs_residual = " << fmt_g17(residual.maxCoeff()) << '\n';
    os << "max_relative_residual = " << fmt_g17(rel_residual) << '\n';
  }
  std::cout << "gram: cells=" << total << " max_relative_residual=" << fmt_g17(rel_residual)
            << "\n";
  if (rel_residual > 1e-8) {
    std::cerr << "gram: self-check failed; the map and gram kernel routes disagree\n";
    return kExitDivergence;
  }
  return kExitOk;
}

int cmd_gen_synthetic(const RunConfig& cfg) {
  cfg.validate();
  SyntheticOptions opt;
  opt.dim = cfg.synth_dim;
  opt.noise = cfg.synth_noise;
  opt.mode = cfg.map_mode;
  opt.hi_levels = cfg.hi_levels;
  const SyntheticData data = gen_synthetic(cfg.grid, cfg.synth_images, cfg.seed, opt);

  fs::path features_path = cfg.features_path.empty()
                               ? fs::path(cfg.output_dir) / "synthetic_features.ctxf"
                               : fs::path(cfg.features_path);
  fs::path labels_path = cfg.labels_path.empty()
                             ? fs::path(cfg.output_dir) / "synthetic_labels.csv"
                             : fs::path(cfg.labels_path);
  if (cfg.features_path.empty() || cfg.labels_path.empty()) ensure_dir(cfg.output_dir);
  for (const auto& p : {features_path, labels_path})
    if (p.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(p.parent_path(), ec);
    }
  save_features(features_path.string(), data.features);
  save_labels(labels_path.string(), data.labels);
  std::cout << "gen-synthetic: images=" << cfg.synth_images << " grid=" << cfg.grid.rows << "x"
            << cfg.grid.cols << " features=" << features_path.string()
            << " labels=" << labels_path.string() << "\n";
  return kExitOk;
}

}  // namespace ctxkm

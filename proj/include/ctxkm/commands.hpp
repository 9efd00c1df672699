#pragma once

#include <string>

#include "ctxkm/config.hpp"

namespace ctxkm {

// Process exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;       // config / data / format problems
inline constexpr int kExitDivergence = 3;  // numerical failure

// Trains (or, with learn.inner_steps = 0, runs the fixed-context pipeline)
// and writes checkpoint.ctxc, training_log.csv and effective_config.txt into
// io.output_dir. Returns kExitDivergence after writing the last finite state
// when the objective blows up.
int cmd_train(const RunConfig& cfg);

// Scores every image in the feature file against a checkpoint and writes
// `image_id,concept,score,present` rows.
int cmd_predict(const std::string& checkpoint_path, const std::string& features_path,
                const std::string& output_csv);

// Evaluates a predictions CSV against a labels CSV; writes report.csv and
// report.json into output_dir.
int cmd_eval(const std::string& predictions_path, const std::string& labels_path,
             const std::string& output_dir);

// Dumps the (learned) context of a checkpoint as JSON edge lists.
int cmd_export_context(const std::string& checkpoint_path, const std::string& output_json);

// Debug oracle: runs the gram fixed-point recursion on the context-free
// similarities of a (small) feature file, writes K and the map residual, and
// fails when the two kernel routes disagree.
int cmd_gram(const RunConfig& cfg, const std::string& features_path,
             const std::string& output_dir, bool force);

// Writes a synthetic two-class arrangement dataset to io.features/io.labels.
int cmd_gen_synthetic(const RunConfig& cfg);

}  // namespace ctxkm

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "ctxkm/commands.hpp"
#include "ctxkm/config.hpp"

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  ctxkm::RunConfig resolve() const {
    ctxkm::RunConfig cfg = config_path.empty() ? ctxkm::RunConfig{}
                                               : ctxkm::parse_config_file(config_path);
    for (const auto& [key, value] : overrides) ctxkm::apply_config_value(cfg, key, value);
    return cfg;
  }
};

// Registers --config plus one flag per config key (same dotted names as the
// config file), collected in command-line order.
void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "config file (key = value lines)");
  for (const auto& key : ctxkm::config_keys()) {
    cmd->add_option_function<std::string>(
           "--" + key,
           [&args, key](const std::string& value) { args.overrides.emplace_back(key, value); },
           "override config key " + key)
        ->type_name("VALUE");
  }
  cmd->add_option_function<std::vector<std::string>>(
         "--set",
         [&args](const std::vector<std::string>& pairs) {
           for (const auto& pair : pairs) {
             const auto eq = pair.find('=');
             if (eq == std::string::npos)
               throw CLI::ValidationError("--set expects KEY=VALUE, got '" + pair + "'");
             args.overrides.emplace_back(pair.substr(0, eq), pair.substr(eq + 1));
           }
         },
         "override any config key (KEY=VALUE; e.g. learn.svm_cost.sky=4)")
      ->type_name("KEY=VALUE");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware deep kernel maps for multi-label image annotation"};
  app.require_subcommand(1);

  ConfigArgs train_cfg;
  auto* train = app.add_subcommand("train", "train SVMs and (optionally) the spatial context");
  add_config_options(train, train_cfg);

  std::string predict_checkpoint, predict_features, predict_output;
  auto* predict = app.add_subcommand("predict", "score images against a checkpoint");
  predict->add_option("--checkpoint", predict_checkpoint, "checkpoint file")->required();
  predict->add_option("--features", predict_features, "feature file")->required();
  predict->add_option("--output", predict_output, "output predictions CSV")->required();

  std::string eval_predictions, eval_labels, eval_output;
  auto* eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
  eval->add_option("--predictions", eval_predictions, "predictions CSV")->required();
  eval->add_option("--labels", eval_labels, "labels CSV")->required();
  eval->add_option("--output", eval_output, "output directory")->required();

  std::string export_checkpoint, export_output;
  auto* export_ctx = app.add_subcommand("export-context", "dump a checkpoint's context as JSON");
  export_ctx->add_option("--checkpoint", export_checkpoint, "checkpoint file")->required();
  export_ctx->add_option("--output", export_output, "output JSON file")->required();

  ConfigArgs gram_cfg;
  std::string gram_features, gram_output;
  bool gram_force = false;
  auto* gram = app.add_subcommand("gram", "debug: gram fixed-point oracle and map residual");
  add_config_options(gram, gram_cfg);
  gram->add_option("--features", gram_features, "feature file")->required();
  gram->add_option("--output", gram_output, "output directory")->required();
  gram->add_flag("--force", gram_force, "skip the small-input guard");

  ConfigArgs gen_cfg;
  auto* gen = app.add_subcommand("gen-synthetic", "generate the synthetic arrangement dataset");
  add_config_options(gen, gen_cfg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return ctxkm::cmd_train(train_cfg.resolve());
    if (predict->parsed())
      return ctxkm::cmd_predict(predict_checkpoint, predict_features, predict_output);
    if (eval->parsed()) return ctxkm::cmd_eval(eval_predictions, eval_labels, eval_output);
    if (export_ctx->parsed()) return ctxkm::cmd_export_context(export_checkpoint, export_output);
    if (gram->parsed())
      return ctxkm::cmd_gram(gram_cfg.resolve(), gram_features, gram_output, gram_force);
    if (gen->parsed()) return ctxkm::cmd_gen_synthetic(gen_cfg.resolve());
  } catch (const ctxkm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ctxkm::errc::divergence ? ctxkm::kExitDivergence : ctxkm::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return ctxkm::kExitUsage;
}

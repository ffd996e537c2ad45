#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bqr/error.hpp"
#include "commands.hpp"
#include "settings.hpp"

namespace {

using nlohmann::json;
namespace cli = bqr::cli;

constexpr int kValidationExit = 2;
constexpr int kRuntimeExit = 3;

// Flags write straight into an override document that is merged over the
// config file, so a flag always wins.
class Overrides {
 public:
  explicit Overrides(CLI::App* app) : app_(app) {}

  template <class T>
  Overrides& add(const std::string& flag, const std::string& pointer, const std::string& help) {
    app_->add_option_function<T>(
        flag, [this, pointer](const T& v) { doc_[json::json_pointer(pointer)] = v; }, help);
    return *this;
  }

  template <class T>
  Overrides& list(const std::string& flag, const std::string& pointer, const std::string& help) {
    app_->add_option_function<std::vector<T>>(
            flag, [this, pointer](const std::vector<T>& v) { doc_[json::json_pointer(pointer)] = v; },
            help)
        ->delimiter(',');
    return *this;
  }

  // Accepts a number or a keyword.
  Overrides& number_or_word(const std::string& flag, const std::string& pointer,
                            const std::string& help) {
    app_->add_option_function<std::string>(
        flag,
        [this, pointer](const std::string& v) {
          try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used == v.size()) {
              doc_[json::json_pointer(pointer)] = x;
              return;
            }
          } catch (const std::exception&) {
          }
          doc_[json::json_pointer(pointer)] = v;
        },
        help);
    return *this;
  }

  const json& doc() const { return doc_; }

 private:
  CLI::App* app_;
  json doc_ = json::object();
};

void add_data_flags(Overrides& o) {
  o.add<std::string>("--id", "/dataset/source", "Generator D1..D6 or blobs")
      .add<std::size_t>("--n", "/dataset/n", "Rows to generate")
      .add<std::uint64_t>("--seed", "/dataset/seed", "Generator seed")
      .number_or_word("--threshold", "/dataset/threshold",
                      "Latent threshold: number, median, pNN, none or auto")
      .add<std::string>("--label-column", "/dataset/label_column", "CSV label/target column")
      .add<std::string>("--latent-column", "/dataset/latent_column", "CSV latent column")
      .add<std::string>("--delimiter", "/dataset/delimiter", "CSV delimiter")
      .add<std::size_t>("--dims", "/dataset/dims", "blobs: feature count")
      .add<double>("--separation", "/dataset/separation", "blobs: centre distance")
      .add<double>("--spread", "/dataset/spread", "blobs: noise sd")
      .add<std::uint64_t>("--split-seed", "/split/seed", "Train/test split seed")
      .add<double>("--train-fraction", "/split/train_fraction", "Share of rows used for training")
      .add<std::size_t>("--n-train", "/split/n_train", "Training rows (overrides the fraction)");
}

void add_model_flags(Overrides& o) {
  o.list<std::size_t>("--widths", "/model/trunk_widths", "Trunk layer widths, e.g. 64,64")
      .list<double>("--grid", "/model/grid", "Quantile levels, e.g. 0.1,0.5,0.9")
      .add<double>("--lambda", "/model/lambda", "Crossing penalty weight")
      .add<std::string>("--loss", "/model/loss", "bqr or bce")
      .add<std::uint64_t>("--init-seed", "/model/init_seed", "Weight initialization seed")
      .number_or_word("--lr", "/train/lr", "Fixed step size or lalr")
      .add<int>("--epochs", "/train/epochs", "Training epochs")
      .add<int>("--batch-size", "/train/batch_size", "Minibatch size")
      .add<std::uint64_t>("--train-seed", "/train/seed", "Shuffling seed")
      .add<double>("--kz-floor", "/train/kz_floor", "Lower bound on k_z")
      .add<double>("--eta-cap", "/train/eta_cap", "Upper bound on the adaptive step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary quantile regression for ReLU networks"};
  app.require_subcommand(1);

  std::optional<std::filesystem::path> config;
  cli::Paths paths;

  struct Command {
    CLI::App* app;
    Overrides overrides;
    int (*run)(const cli::Settings&, const cli::Paths&);
  };
  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& help, auto run) -> Command& {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.push_back(std::make_unique<Command>(Command{sub, Overrides(sub), run}));
    sub->add_option("--config", config, "JSON config file; flags override it");
    return *commands.back();
  };

  auto& simulate = make("simulate", "Generate a simulated dataset as CSV", cli::cmd_simulate);
  add_data_flags(simulate.overrides);
  simulate.app->add_option("--out", paths.out, "Output CSV");

  auto& train = make("train", "Train a network; writes checkpoint and trace", cli::cmd_train);
  train.app->add_option("--csv", paths.input, "Read data from a CSV file");
  add_data_flags(train.overrides);
  add_model_flags(train.overrides);
  train.app->add_option("--out", paths.out, "Output directory");

  auto& evaluate = make("evaluate", "Coverage, delta report and summary", cli::cmd_evaluate);
  evaluate.app->add_option("--checkpoint", paths.checkpoint, "Checkpoint JSON")->required();
  evaluate.app->add_option("--csv", paths.input, "Read data from a CSV file");
  evaluate.app->add_option("--split", paths.split, "test, train or all");
  add_data_flags(evaluate.overrides);
  evaluate.app->add_option("--out", paths.out, "Output directory");

  auto& sweep = make("noise-sweep", "BCE vs BQR accuracy under label noise", cli::cmd_noise_sweep);
  sweep.app->add_option("--csv", paths.input, "Read data from a CSV file");
  add_data_flags(sweep.overrides);
  add_model_flags(sweep.overrides);
  sweep.overrides.list<double>("--fractions", "/noise/fractions", "Flip fractions, e.g. 0,0.2,0.4")
      .add<std::uint64_t>("--noise-seed", "/noise/seed", "Label flip seed");
  sweep.app->add_option("--out", paths.out, "Output CSV");

  auto& bench = make("lalr-bench", "Epochs to target: fixed vs adaptive step", cli::cmd_lalr_bench);
  bench.app->add_option("--csv", paths.input, "Read data from a CSV file");
  add_data_flags(bench.overrides);
  add_model_flags(bench.overrides);
  bench.overrides.add<double>("--target", "/bench/target", "Target training accuracy");
  bench.app->add_option("--out", paths.out, "Output directory");

  auto& smooth = make("smooth", "Smoothed quantile export per input row", cli::cmd_smooth);
  smooth.app->add_option("--checkpoint", paths.checkpoint, "Checkpoint JSON")->required();
  smooth.app->add_option("--input", paths.input, "CSV of feature rows")->required();
  smooth.overrides.add<double>("--bandwidth", "/smooth/bandwidth", "Kernel bandwidth h")
      .add<double>("--pi-level", "/smooth/pi_level", "Interval level: 0.5 gives [Q(.25), Q(.75)]")
      .add<std::string>("--delimiter", "/dataset/delimiter", "CSV delimiter");
  smooth.app->add_option("--out", paths.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  }

  for (auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    json overrides = cmd->overrides.doc();
    // --csv is shorthand for the csv source.
    if (cmd->run != cli::cmd_smooth && !paths.input.empty()) {
      overrides["dataset"]["source"] = "csv";
      overrides["dataset"]["csv"] = paths.input.string();
    }
    try {
      const cli::Settings settings = cli::resolve(config, overrides);
      return cmd->run(settings, paths);
    } catch (const cli::ValidationError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kValidationExit;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kRuntimeExit;
    }
  }
  return kValidationExit;
}

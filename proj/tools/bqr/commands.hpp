#pragma once

#include <filesystem>

#include "settings.hpp"

namespace bqr::cli {

struct Paths {
  std::filesystem::path out;
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::string split = "test";  ///< evaluate: test, train or all
};

int cmd_simulate(const Settings& s, const Paths& p);
int cmd_train(const Settings& s, const Paths& p);
int cmd_evaluate(const Settings& s, const Paths& p);
int cmd_noise_sweep(const Settings& s, const Paths& p);
int cmd_lalr_bench(const Settings& s, const Paths& p);
int cmd_smooth(const Settings& s, const Paths& p);

}  // namespace bqr::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nhdp/global_inference.hpp"
#include "nhdp/hyperparameters.hpp"
#include "nhdp/local_inference.hpp"
#include "nhdp/tree.hpp"

namespace nhdp::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfigOrIo = 2, kCompatibility = 3, kNumeric = 4 };

/// Every setting of every command. Defaults are the large-corpus settings:
/// truncation (20, 10, 5), alpha = 5, beta = 1, gamma = (1/3, 2/3),
/// lambda0 = 0.1, greedy threshold 1e-3, local L1 tolerance 1e-2.
struct RunConfig {
  Truncation truncation{{20, 10, 5}};
  bool truncation_given = false;  // set explicitly on the command line or in the config file
  bool include_root = false;
  Hyperparameters hyper;
  StepSchedule schedule;
  LocalConfig local;
  KMeansInitConfig init;
  int init_docs = 10000;
  int minibatch_size = 500;
  std::int64_t steps = 0;
  int metrics_every = 20;
  int checkpoint_every = 20;
  double observed_fraction = 0.9;
  std::uint64_t seed = 1;
  int threads = 0;

  std::filesystem::path corpus;
  std::filesystem::path vocab;
  std::string format = "counts";  // counts | text
  std::filesystem::path heldout;
  std::filesystem::path checkpoint;
  std::filesystem::path resume;
  std::filesystem::path output = ".";
  std::filesystem::path debug_dump;

  int sample_docs = 1000;
  int sample_words = 100;
  int sample_vocab = 1000;
  int top_k = 10;

  void validate() const;  // throws ConfigError
};

/// Parses arguments (argv[0] is the program name), runs the command and
/// maps failures to exit codes: 2 config or IO, 3 compatibility, 4 numeric.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nhdp::cli

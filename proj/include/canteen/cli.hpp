#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "canteen/agents_sim.hpp"
#include "canteen/game_model.hpp"

namespace canteen::cli {

enum class Subcommand { kAnalyze, kEpistemic, kSimulate, kServe, kReplay, kHelp };

struct Options {
  std::optional<ArrivalTime> tmin;  // default depends on the subcommand
  std::optional<ArrivalTime> tmax;
  int rounds = 10;
  double endowment = 10.0;
  std::uint64_t seed = 1;
  Policy policy1 = Policy::mixed_guess(ArrivalTime::clock(8, 50), 0.5);
  Policy policy2 = Policy::mixed_guess(ArrivalTime::clock(8, 50), 0.5);
  long sessions = 1000;
  int trials = 0;  // analyze: randomized ordinal models to test
  int chain = 10;  // epistemic: longest message chain
  std::string out_dir;
  std::string host = "127.0.0.1";
  int port = 8000;
  std::string log_file;  // replay
  bool pretty = false;
};

struct Command {
  Subcommand subcommand = Subcommand::kHelp;
  Options options;
  std::string help;  // usage text for kHelp

  TimeRange range() const;
};

// Bad arguments; what() is the message to show, exit code is 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// argv[0] is the program name. CANTEEN_SEED, when set, overrides --seed.
Command parse(const std::vector<std::string>& argv);
Command parse(int argc, const char* const* argv);

// Runs a command, writing machine output to `out` and diagnostics to `err`.
// Returns the process exit code.
int execute(const Command& command, std::ostream& out, std::ostream& err);

// Runs parse + execute with usage errors mapped to exit code 2.
int main(int argc, const char* const* argv);

}  // namespace canteen::cli

#include "canteen/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "canteen/epistemic.hpp"
#include "canteen/server.hpp"
#include "canteen/session_service.hpp"
#include "canteen/strategy_analysis.hpp"

namespace canteen::cli {

TimeRange Command::range() const {
  const bool live = subcommand == Subcommand::kSimulate || subcommand == Subcommand::kServe;
  const auto fallback = live ? TimeRange::live_default() : TimeRange::analysis_default();
  return TimeRange(options.tmin.value_or(fallback.tmin()),
                   options.tmax.value_or(fallback.tmax()));
}

namespace {

std::string time_check(const std::string& text) {
  try {
    ArrivalTime::parse(text);
    return {};
  } catch (const std::exception& e) {
    return e.what();
  }
}

std::string policy_check(const std::string& text) {
  try {
    Policy::parse(text);
    return {};
  } catch (const std::exception& e) {
    return e.what();
  }
}

void add_range(CLI::App* app, std::string& tmin, std::string& tmax) {
  app->add_option("--tmin", tmin, "Earliest arrival, H:MM")->check(CLI::Validator(time_check, "H:MM"));
  app->add_option("--tmax", tmax, "Latest arrival, H:MM")->check(CLI::Validator(time_check, "H:MM"));
}

// A table written to stdout and, with --out, to DIR/<name>.csv.
struct Table {
  std::string name;
  std::string csv;
};

int emit(const Options& opt, const std::vector<Table>& tables, std::ostream& out,
         std::ostream& err) {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i > 0) out << '\n';
    out << tables[i].csv;
  }
  if (opt.out_dir.empty()) return 0;
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) {
    err << "error: cannot create " << opt.out_dir << ": " << ec.message() << '\n';
    return 1;
  }
  for (const auto& t : tables) {
    const auto path = std::filesystem::path(opt.out_dir) / (t.name + ".csv");
    std::ofstream f(path, std::ios::binary);
    f << t.csv;
    if (!f) {
      err << "error: cannot write " << path.string() << '\n';
      return 1;
    }
  }
  return 0;
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  // Avoid "-0.0000" so identical runs stay byte-identical across signs of zero.
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string class_label(const Strategy& s) {
  const auto c = classify(s);
  if (!c.is_cutoff) return "other";
  if (c.all_office(s.range())) return "all_office";
  if (c.cutoff > s.range().tmax()) return "all_canteen";
  return "cutoff:" + c.cutoff.str();
}

// One character per grid time: C, O, or - where the profile is undefined.
std::string actions_string(const TimeRange& range, ProfileBits bits, int player) {
  const auto k = range.grid_size();
  std::string s;
  for (std::size_t i = 0; i < k; ++i) {
    const auto bit = std::uint32_t{1} << (static_cast<std::size_t>(player) * k + i);
    s += !(bits.defined & bit) ? '-' : (bits.canteen & bit) ? 'C' : 'O';
  }
  return s;
}

const char* flag(bool b) { return b ? "true" : "false"; }

int run_analyze(const Command& c, std::ostream& out, std::ostream& err) {
  const auto& opt = c.options;
  const auto range = c.range();
  const UtilityModel model = ConcreteUtility{};

  std::ostringstream eu;
  eu << "strategy,eu_per_round,expected_balance\n";
  std::vector<std::pair<std::string, double>> eu_rows;
  auto add_eu = [&](const Strategy& s) {
    const double v = expected_utility(StrategyProfile::symmetric(s), range, model);
    eu_rows.emplace_back(class_label(s), v);
    eu << eu_rows.back().first << ',' << fixed(v, 4) << ','
       << fixed(opt.endowment + v, 2) << '\n';
  };
  add_eu(Strategy::all_office(range));
  for (auto t : range.times()) add_eu(Strategy::with_cutoff(range, t + 5));

  const auto report = pareto_front(range, model);
  std::ostringstream fronts;
  fronts << "scope,player1,player2,class\n";
  for (int i = 0; i < 2; ++i) {
    for (const auto& bits : report.components[i].front) {
      const auto p = unpack(range, bits);
      const auto l1 = class_label(p.s1);
      fronts << "component" << i + 1 << ',' << actions_string(range, bits, 0) << ','
             << actions_string(range, bits, 1) << ','
             << (l1 == class_label(p.s2) ? l1 : "other") << '\n';
    }
  }
  for (const auto& p : report.front) {
    const auto bits = pack(p);
    const auto l1 = class_label(p.s1);
    fronts << "full," << actions_string(range, bits, 0) << ','
           << actions_string(range, bits, 1) << ','
           << (l1 == class_label(p.s2) ? l1 : "other") << '\n';
  }

  std::ostringstream flags;
  flags << "check,value\n";
  for (int i = 0; i < 2; ++i) {
    const auto& comp = report.components[i];
    const std::string pre = "component" + std::to_string(i + 1) + ".";
    flags << pre << "pairs," << comp.pairs.size() << '\n'
          << pre << "no_late_canteen," << flag(comp.no_late_canteen) << '\n'
          << pre << "no_office_before_canteen," << flag(comp.no_office_before_canteen) << '\n'
          << pre << "two_candidates," << flag(comp.two_candidates) << '\n'
          << pre << "contains_all_office," << flag(comp.contains_all_office) << '\n'
          << pre << "contains_canteen_before_nine,"
          << flag(comp.contains_canteen_before_nine) << '\n';
  }
  const bool front_all_office =
      report.front.size() == 1 &&
      report.front[0] == StrategyProfile::symmetric(Strategy::all_office(range));
  flags << "full.no_late_canteen," << flag(report.no_late_canteen) << '\n'
        << "full.no_office_before_canteen," << flag(report.no_office_before_canteen) << '\n'
        << "full.two_candidates," << flag(report.two_candidates) << '\n'
        << "full.decomposition_ok," << flag(report.decomposition_ok) << '\n'
        << "full.front_is_all_office," << flag(front_all_office) << '\n'
        << "full.best_eu," << fixed(report.best_eu, 4) << '\n';

  std::vector<Table> tables{{"eu_table", eu.str()}, {"fronts", fronts.str()},
                            {"flags", flags.str()}};

  int two_candidates = 0;
  if (opt.trials > 0) {
    std::mt19937_64 rng(opt.seed);
    int screens = 0;
    int decomposed = 0;
    for (int i = 0; i < opt.trials; ++i) {
      const auto r = pareto_front(range, random_abstract_utility(rng, range));
      two_candidates += r.components[0].two_candidates && r.components[1].two_candidates;
      screens += r.no_late_canteen && r.no_office_before_canteen;
      decomposed += r.decomposition_ok;
    }
    std::ostringstream trials;
    trials << "trials,two_candidates,screens_hold,decomposition_ok\n"
           << opt.trials << ',' << two_candidates << ',' << screens << ','
           << decomposed << '\n';
    tables.push_back({"random_models", trials.str()});
  }

  const int rc = emit(opt, tables, out, err);
  if (opt.pretty) {
    out << "\nRange " << range.tmin().str() << "-" << range.tmax().str() << ", "
        << arrival_pairs(range).size() << " arrival pairs, certainty 0.99\n";
    out << "Expected penalty per round (symmetric strategies):\n";
    for (const auto& [name, v] : eu_rows) {
      char line[128];
      std::snprintf(line, sizeof line, "  %-14s %9.4f   balance after one round %6.2f\n",
                    name.c_str(), v, opt.endowment + v);
      out << line;
    }
    out << "Pareto front: "
        << (front_all_office ? "all office only" : "see fronts table") << '\n';
    out << "Front screens: no late canteen " << flag(report.no_late_canteen)
        << ", no office-before-canteen " << flag(report.no_office_before_canteen)
        << ", two candidates per component " << flag(report.two_candidates) << '\n';
    out << "Component enumeration matches full enumeration: "
        << flag(report.decomposition_ok) << '\n';
    if (opt.trials > 0) {
      out << "Random ordinal models with front inside {all office, cut-off 8:55}: "
          << two_candidates << "/" << opt.trials << '\n';
    }
  }
  return rc;
}

int run_epistemic(const Command& c, std::ostream& out, std::ostream& err) {
  const auto& opt = c.options;
  const auto model = build_model(c.range());
  std::ostringstream labels;
  labels << "arrival_time,label\n";
  for (auto t : model.range.times()) {
    labels << t.str() << ',' << knowledge_label(model, t).str() << '\n';
  }
  const bool ck_empty =
      common_knowledge(model.kripke, model.both_before_nine()).count() == 0;

  std::ostringstream chain;
  chain << "messages,depth,common_knowledge_empty\n";
  for (int k = 0; k <= opt.chain; ++k) {
    const auto m = message_chain_model(k);
    chain << k << ',' << m.depth << ','
          << flag(common_knowledge(m.kripke, m.first_delivered).count() == 0) << '\n';
  }
  const int rc = emit(opt, {{"knowledge_labels", labels.str()}, {"message_chain", chain.str()}},
                      out, err);
  if (opt.pretty) {
    out << "\nWhat a player arriving at each time knows about \"both arrive before 9:00\":\n";
    for (auto t : model.range.times()) {
      out << "  " << t.str() << "  " << knowledge_label(model, t).str() << '\n';
    }
    out << "Common knowledge of \"both before 9:00\" holds nowhere: " << flag(ck_empty)
        << '\n';
  }
  return rc;
}

int run_simulate(const Command& c, std::ostream& out, std::ostream& err) {
  const auto& opt = c.options;
  SessionConfig cfg;
  cfg.range = c.range();
  cfg.max_rounds = opt.rounds;
  cfg.endowment = opt.endowment;
  cfg.seed = opt.seed;
  const auto stats = run_monte_carlo(cfg, opt.policy1, opt.policy2, opt.sessions);
  const int rc = emit(opt,
                      {{"summary", summary_csv(stats)},
                       {"pair_outcomes", pair_outcomes_csv(stats)}},
                      out, err);
  if (opt.pretty) {
    out << "\n" << opt.sessions << " sessions of up to " << opt.rounds << " rounds, "
        << opt.policy1.str() << " vs " << opt.policy2.str() << '\n'
        << "  rounds played (mean) " << fixed(stats.rounds_played_avg, 2) << '\n'
        << "  sessions ending in ruin " << fixed(100 * stats.ruin_rate, 2) << "%\n"
        << "  endowment retained " << fixed(100 * stats.payoff_retained, 2) << "%\n";
  }
  return rc;
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int run_serve(const Command& c, std::ostream& out, std::ostream& err) {
  const auto& opt = c.options;
  SessionService service;
  ServerOptions so;
  so.host = opt.host;
  so.http_port = opt.port;
  so.stream_port = opt.port == 0 ? 0 : opt.port + 1;
  Server server(service, so);
  try {
    server.start();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  out << "http " << opt.host << ':' << server.http_port() << '\n'
      << "stream " << opt.host << ':' << server.stream_port() << '\n'
      << std::flush;
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int run_replay(const Command& c, std::ostream& out, std::ostream& err) {
  const auto& opt = c.options;
  std::ifstream f(opt.log_file, std::ios::binary);
  if (!f) {
    err << "error: cannot read " << opt.log_file << '\n';
    return 1;
  }
  std::ostringstream text;
  text << f.rdbuf();
  const auto diffs = replay_log(text.str(), opt.endowment);
  for (const auto& d : diffs) out << d << '\n';
  if (opt.pretty || !diffs.empty()) {
    err << (diffs.empty() ? "replay ok" : "replay found differences: ")
        << (diffs.empty() ? "" : std::to_string(diffs.size())) << '\n';
  }
  return diffs.empty() ? 0 : 1;
}

}  // namespace

Command parse(const std::vector<std::string>& argv) {
  CLI::App app{"Canteen dilemma workbench", argv.empty() ? "canteen" : argv[0]};
  app.require_subcommand(0, 1);
  Command cmd;
  auto& o = cmd.options;
  std::string tmin, tmax, policy1, policy2;

  auto* analyze = app.add_subcommand("analyze", "Pareto fronts, expected penalties and front screens");
  add_range(analyze, tmin, tmax);
  analyze->add_option("--endowment", o.endowment, "Starting balance in dollars");
  analyze->add_option("--trials", o.trials, "Random ordinal payoff models to test")
      ->check(CLI::Range(0, 100000));
  analyze->add_option("--seed", o.seed, "Seed for the random models");

  auto* epistemic = app.add_subcommand("epistemic", "Knowledge labels and message-chain depths");
  add_range(epistemic, tmin, tmax);
  epistemic->add_option("--chain", o.chain, "Longest message chain")->check(CLI::Range(0, 64));

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sessions between two policies");
  add_range(simulate, tmin, tmax);
  simulate->add_option("--rounds", o.rounds, "Rounds per session")->check(CLI::PositiveNumber);
  simulate->add_option("--endowment", o.endowment, "Starting balance in dollars")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", o.seed, "Master seed");
  simulate->add_option("--sessions", o.sessions, "Number of sessions")->check(CLI::PositiveNumber);
  simulate->add_option("--policy1", policy1, "Seat 1 policy")
      ->check(CLI::Validator(policy_check, "POLICY"));
  simulate->add_option("--policy2", policy2, "Seat 2 policy")
      ->check(CLI::Validator(policy_check, "POLICY"));

  auto* serve = app.add_subcommand("serve", "Host live sessions");
  serve->add_option("--port", o.port, "HTTP port; the stream transport uses port+1")
      ->check(CLI::Range(0, 65534));
  serve->add_option("--host", o.host, "Listen address");

  auto* replay = app.add_subcommand("replay", "Verify an exported JSONL session log");
  replay->add_option("log", o.log_file, "Log file")->required();
  replay->add_option("--endowment", o.endowment, "Starting balance in dollars");

  for (auto* sub : {analyze, epistemic, simulate, replay}) {
    sub->add_option("--out", o.out_dir, "Also write each table to DIR/<table>.csv");
    sub->add_flag("--pretty", o.pretty, "Append human-readable text");
  }

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    cmd.subcommand = Subcommand::kHelp;
    cmd.help = app.help();
    return cmd;
  } catch (const CLI::CallForAllHelp&) {
    cmd.subcommand = Subcommand::kHelp;
    cmd.help = app.help("", CLI::AppFormatMode::All);
    return cmd;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (analyze->parsed()) cmd.subcommand = Subcommand::kAnalyze;
  else if (epistemic->parsed()) cmd.subcommand = Subcommand::kEpistemic;
  else if (simulate->parsed()) cmd.subcommand = Subcommand::kSimulate;
  else if (serve->parsed()) cmd.subcommand = Subcommand::kServe;
  else if (replay->parsed()) cmd.subcommand = Subcommand::kReplay;
  else {
    cmd.help = app.help();
    return cmd;
  }

  if (!tmin.empty()) o.tmin = ArrivalTime::parse(tmin);
  if (!tmax.empty()) o.tmax = ArrivalTime::parse(tmax);
  if (!policy1.empty()) o.policy1 = Policy::parse(policy1);
  if (!policy2.empty()) o.policy2 = Policy::parse(policy2);
  if (const char* env = std::getenv("CANTEEN_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      o.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("CANTEEN_SEED is not an unsigned integer: ") + env);
    }
  }
  try {
    cmd.range();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return cmd;
}

Command parse(int argc, const char* const* argv) {
  return parse(std::vector<std::string>(argv, argv + argc));
}

int execute(const Command& command, std::ostream& out, std::ostream& err) {
  try {
    switch (command.subcommand) {
      case Subcommand::kAnalyze: return run_analyze(command, out, err);
      case Subcommand::kEpistemic: return run_epistemic(command, out, err);
      case Subcommand::kSimulate: return run_simulate(command, out, err);
      case Subcommand::kServe: return run_serve(command, out, err);
      case Subcommand::kReplay: return run_replay(command, out, err);
      case Subcommand::kHelp: out << command.help; return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int main(int argc, const char* const* argv) {
  Command cmd;
  try {
    cmd = parse(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }
  return execute(cmd, std::cout, std::cerr);
}

}  // namespace canteen::cli

// solar: generate, validate, segment, inspect and evaluate SOLAR datasets.
//
// Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O or protocol error.

#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "solar/solar.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SOLAR_SEED")) {
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("SOLAR_SEED is not an unsigned integer");
  }
  throw UsageError("--seed is required (or set SOLAR_SEED)");
}

solar::Task resolve_task(const std::string& name) {
  try {
    return solar::parse_task(name);
  } catch (const solar::TaskError& e) {
    throw UsageError(e.what());
  }
}

int dataset_error_exit(const solar::DatasetError& e) {
  return e.kind() == solar::DatasetError::Kind::IoFailure ? kExitIo : kExitValidation;
}

// --------------------------------------------------------------------------

struct GenerateArgs {
  std::string task;
  std::size_t problems = 500;
  std::size_t per_problem = 10;
  std::size_t gold = 1;
  std::optional<std::uint64_t> seed;
  std::string out;
  int max_h = 10;
  int max_w = 10;
  int demos = 3;
  std::size_t horizon = 5;
  int nonoptimal_len = 10;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  bool allow_quarantine = false;
};

int cmd_generate(const GenerateArgs& a) {
  const solar::Task task = resolve_task(a.task);
  if (a.gold > a.per_problem) throw UsageError("--gold exceeds --per-problem");
  if (a.horizon < 1) throw UsageError("--horizon must be at least 1");
  solar::TaskParams params;
  params.max_dims = {a.max_h, a.max_w};
  params.demos_per_problem = a.demos;
  params.nonoptimal_len = a.nonoptimal_len;
  params.rng_seed = resolve_seed(a.seed);
  const solar::GenerateOptions opts{a.problems, a.per_problem, a.gold, a.jobs};

  const auto t0 = std::chrono::steady_clock::now();
  solar::Dataset ds;
  try {
    ds = solar::make_dataset(task, params, opts, a.horizon);
  } catch (const solar::TaskError& e) {
    throw UsageError(e.what());
  }
  const solar::SolarFileSet files = solar::write_dataset(ds, a.out);
  const solar::Dataset written = solar::read_dataset(a.out);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto& c = written.manifest.counts;
  std::cout << "episodes: " << c.episodes << "\n"
            << "gold: " << c.gold << "\n"
            << "segments: " << c.segments << "\n"
            << "quarantined: " << c.quarantined << "\n"
            << "digest: " << written.manifest.digest << "\n"
            << "manifest: " << files.manifest.string() << "\n";
  std::cout << "# elapsed_s: " << std::fixed << std::setprecision(3) << elapsed << "\n";
  if (c.quarantined > 0 && !a.allow_quarantine) {
    std::cerr << "error: " << c.quarantined << " planned episodes were quarantined (see " << solar::kQuarantineFile
              << ")\n";
    return kExitValidation;
  }
  return kExitOk;
}

// --------------------------------------------------------------------------

struct ValidateArgs {
  std::string data;
  std::string report;
};

int cmd_validate(const ValidateArgs& a) {
  solar::Dataset ds;
  try {
    ds = solar::read_dataset(a.data);
  } catch (const solar::DatasetError& e) {
    std::cout << "status: unreadable\n" << "error: " << e.what() << "\n";
    return dataset_error_exit(e);
  }
  const solar::VerifyReport report = solar::verify_full(ds);
  std::cout << "episodes_checked: " << report.episodes_checked << "\n"
            << "segments_checked: " << report.segments_checked << "\n"
            << "violations: " << report.violations.size() << "\n";
  for (const auto& v : report.violations) std::cout << "violation " << v.trajectory_id << ": " << v.message << "\n";
  if (!a.report.empty()) {
    solar::codec::Json j = solar::codec::Json::object();
    j["episodes_checked"] = report.episodes_checked;
    j["segments_checked"] = report.segments_checked;
    solar::codec::Json vs = solar::codec::Json::array();
    for (const auto& v : report.violations) {
      solar::codec::Json jv = solar::codec::Json::object();
      jv["trajectory_id"] = v.trajectory_id;
      jv["message"] = v.message;
      vs.push_back(std::move(jv));
    }
    j["violations"] = std::move(vs);
    solar::io::write_file(a.report, j.dump() + "\n");
  }
  return report.ok() ? kExitOk : kExitValidation;
}

// --------------------------------------------------------------------------

struct SegmentArgs {
  std::string data;
  long long horizon = 5;
  std::string out;
};

int cmd_segment(const SegmentArgs& a) {
  if (a.horizon < 1) throw UsageError("--horizon must be at least 1");
  solar::Dataset ds = solar::read_dataset(a.data);
  ds.manifest.params.horizon = static_cast<std::size_t>(a.horizon);
  ds.segments = solar::segment_dataset(ds.episodes, ds.manifest.params.horizon, ds.manifest.params.max_dims);
  solar::write_dataset(ds, a.out);
  const solar::Dataset written = solar::read_dataset(a.out);
  std::cout << "episodes: " << written.manifest.counts.episodes << "\n"
            << "segments: " << written.manifest.counts.segments << "\n"
            << "horizon: " << written.manifest.params.horizon << "\n"
            << "digest: " << written.manifest.digest << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------

struct InspectArgs {
  std::string data;
  std::string episode;
  std::optional<std::size_t> step;
};

int cmd_inspect(const InspectArgs& a) {
  const solar::Dataset ds = solar::read_dataset(a.data);
  for (const auto& ep : ds.episodes) {
    if (ep.trajectory_id != a.episode) continue;
    if (a.step && *a.step >= ep.steps.size()) {
      throw UsageError("--step " + std::to_string(*a.step) + " out of range (episode has " +
                       std::to_string(ep.steps.size()) + " steps)");
    }
    solar::render_episode(std::cout, ep, a.step);
    return kExitOk;
  }
  std::cerr << "error: no episode with id '" << a.episode << "'\n";
  return kExitValidation;
}

// --------------------------------------------------------------------------

struct EvalArgs {
  std::string task = "mirror";
  std::string agent;
  std::size_t problems = 100;
  int repeats = 5;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> train_seed;
  int max_steps = 20;
  int max_h = 10;
  int max_w = 10;
  int demos = 3;
  int timeout_ms = 30000;
  std::string report;
  std::string transcript;
};

int cmd_eval(const EvalArgs& a) {
  const solar::Task task = resolve_task(a.task);
  const std::uint64_t seed = resolve_seed(a.seed);
  if (a.repeats < 1) throw UsageError("--repeats must be at least 1");
  if (a.max_steps < 1) throw UsageError("--max-steps must be at least 1");
  if (a.problems < 1) throw UsageError("--problems must be at least 1");
  solar::TaskParams params;
  params.max_dims = {a.max_h, a.max_w};
  params.demos_per_problem = a.demos;

  solar::EvalSet set;
  try {
    set = solar::make_eval_set(task, seed, a.problems, params, a.train_seed);
  } catch (const solar::SeedCollision& e) {
    throw UsageError(e.what());
  }
  solar::HarnessOptions opts;
  opts.max_steps = a.max_steps;
  opts.config = params.env_config();
  solar::AgentFactory factory;
  try {
    factory = solar::make_agent_factory(a.agent, task, seed, params.max_dims, std::chrono::milliseconds(a.timeout_ms));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto t0 = std::chrono::steady_clock::now();
  const solar::Evaluation ev = solar::evaluate(factory, set, a.repeats, opts);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const solar::Metrics& m = ev.metrics;
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "task: " << solar::task_name(task) << "\n"
            << "problems: " << set.problems.size() << "\n"
            << "repeats: " << m.repeats << "\n"
            << "max_steps: " << a.max_steps << "\n"
            << "reach_rate: " << m.reach_rate << " +/- " << m.reach_half_width << "\n"
            << "submit_rate: " << m.submit_rate << " +/- " << m.submit_half_width << "\n"
            << "ci_method: " << solar::Metrics::kCiMethod << "\n";
  std::cout << "# elapsed_s: " << std::setprecision(3) << elapsed << "\n";

  if (!a.report.empty()) {
    solar::codec::Json j = solar::codec::Json::object();
    j["task"] = solar::task_name(task);
    j["seed"] = seed;
    j["problems"] = set.problems.size();
    j["repeats"] = m.repeats;
    j["max_steps"] = a.max_steps;
    j["reach_rate"] = m.reach_rate;
    j["submit_rate"] = m.submit_rate;
    j["reach_per_repeat"] = m.reach_per_repeat;
    j["submit_per_repeat"] = m.submit_per_repeat;
    j["reach_ci96_half_width"] = m.reach_half_width;
    j["submit_ci96_half_width"] = m.submit_half_width;
    j["ci_method"] = solar::Metrics::kCiMethod;
    solar::io::write_file(a.report, j.dump() + "\n");
  }
  if (!a.transcript.empty()) {
    std::string text;
    for (const auto& repeat : ev.outcomes) {
      for (const auto& o : repeat) {
        for (const auto& line : o.transcript) text += line + "\n";
      }
    }
    solar::io::write_file(a.transcript, text);
  }
  return kExitOk;
}

// --------------------------------------------------------------------------

struct AgentArgs {
  std::string builtin = "oracle";
  std::string task = "mirror";
  std::uint64_t seed = 0;
  int max_h = 10;
  int max_w = 10;
  std::optional<int> listen;
};

int cmd_agent(const AgentArgs& a) {
  const solar::Task task = resolve_task(a.task);
  std::unique_ptr<solar::Policy> policy;
  if (a.builtin == "oracle") {
    policy = std::make_unique<solar::OraclePolicy>(task);
  } else if (a.builtin == "random") {
    policy = std::make_unique<solar::RandomPolicy>(a.seed, solar::Dims{a.max_h, a.max_w});
  } else {
    throw UsageError("unknown builtin agent '" + a.builtin + "'");
  }
  if (a.listen) {
    solar::TcpPolicyServer server(*a.listen);
    std::cerr << "listening on 127.0.0.1:" << server.port() << "\n";
    for (;;) server.serve_one(*policy);
  }
  std::ios::sync_with_stdio(false);
  solar::serve_policy(*policy, std::cin, std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"SOLAR dataset generator, validator and evaluation harness"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Synthesize a dataset for one task");
  g->add_option("--task", gen.task, "mirror | diagonal")->required();
  g->add_option("--problems", gen.problems, "Number of problems");
  g->add_option("--per-problem", gen.per_problem, "Episodes per problem");
  g->add_option("--gold", gen.gold, "Gold-standard episodes per problem");
  g->add_option("--seed", gen.seed, "Run seed (falls back to SOLAR_SEED)");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--max-h", gen.max_h, "Maximum grid height");
  g->add_option("--max-w", gen.max_w, "Maximum grid width");
  g->add_option("--demos", gen.demos, "Demonstration pairs per problem");
  g->add_option("--horizon", gen.horizon, "Segment horizon H");
  g->add_option("--nonoptimal-len", gen.nonoptimal_len, "Target non-optimal episode length");
  g->add_option("--jobs", gen.jobs, "Worker threads");
  g->add_flag("--allow-quarantine", gen.allow_quarantine, "Exit 0 even if some plans were quarantined");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Re-verify every episode and segment of a dataset");
  v->add_option("--data", val.data, "Dataset directory")->required();
  v->add_option("--report", val.report, "Write a JSON report here");

  SegmentArgs seg;
  auto* s = app.add_subcommand("segment", "Re-segment a dataset with a new horizon");
  s->add_option("--data", seg.data, "Input dataset directory")->required();
  s->add_option("--horizon", seg.horizon, "Segment horizon H (>= 1)");
  s->add_option("--out", seg.out, "Output dataset directory")->required();

  InspectArgs ins;
  auto* i = app.add_subcommand("inspect", "Render an episode as character grids");
  i->add_option("--data", ins.data, "Dataset directory")->required();
  i->add_option("--episode", ins.episode, "Trajectory id")->required();
  i->add_option("--step", ins.step, "Render only this step");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate an agent on a fresh evaluation set");
  e->add_option("--task", ev.task, "mirror | diagonal");
  e->add_option("--agent", ev.agent, "oracle | random | tcp:HOST:PORT | command line")->required();
  e->add_option("--problems", ev.problems, "Evaluation problems");
  e->add_option("--repeats", ev.repeats, "Repeats");
  e->add_option("--seed", ev.seed, "Evaluation seed (falls back to SOLAR_SEED)");
  e->add_option("--train-seed", ev.train_seed, "Training seed; evaluation refuses to reuse it");
  e->add_option("--max-steps", ev.max_steps, "Step cap per episode");
  e->add_option("--max-h", ev.max_h, "Maximum grid height");
  e->add_option("--max-w", ev.max_w, "Maximum grid width");
  e->add_option("--demos", ev.demos, "Demonstration pairs per problem");
  e->add_option("--timeout-ms", ev.timeout_ms, "Per-message agent timeout");
  e->add_option("--report", ev.report, "Write a JSON metrics report here");
  e->add_option("--transcript", ev.transcript, "Write all protocol lines here");

  AgentArgs ag;
  auto* a = app.add_subcommand("agent", "Run a built-in agent over stdio or TCP");
  a->add_option("--builtin", ag.builtin, "oracle | random");
  a->add_option("--task", ag.task, "mirror | diagonal");
  a->add_option("--seed", ag.seed, "Seed for the random agent");
  a->add_option("--max-h", ag.max_h, "Maximum grid height");
  a->add_option("--max-w", ag.max_w, "Maximum grid width");
  a->add_option("--listen", ag.listen, "Serve on this TCP port instead of stdio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& pe) {
    app.exit(pe);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*v) return cmd_validate(val);
    if (*s) return cmd_segment(seg);
    if (*i) return cmd_inspect(ins);
    if (*e) return cmd_eval(ev);
    if (*a) return cmd_agent(ag);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const solar::DatasetError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return dataset_error_exit(err);
  } catch (const solar::AgentError& err) {
    std::cerr << "agent error: " << err.what() << "\n";
    return kExitIo;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

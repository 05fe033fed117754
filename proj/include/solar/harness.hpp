#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "solar/agents.hpp"
#include "solar/env.hpp"
#include "solar/grid_maker.hpp"
#include "solar/protocol.hpp"
#include "solar/transport.hpp"

namespace solar {

struct EvalSet {
  Task task = Task::Mirror;
  std::uint64_t seed = 0;
  TaskParams params;
  std::vector<ProblemInstance> problems;
};

class SeedCollision : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// n problems from the task's generator under `seed`. Refuses the training seed.
inline EvalSet make_eval_set(Task task, std::uint64_t seed, std::size_t n, TaskParams params = {},
                             std::optional<std::uint64_t> training_seed = std::nullopt) {
  if (n < 1) throw std::invalid_argument("eval set needs at least one problem");
  if (training_seed && *training_seed == seed) {
    throw SeedCollision("evaluation seed " + std::to_string(seed) + " equals the training seed");
  }
  params.rng_seed = seed;
  EvalSet set{task, seed, params, {}};
  set.problems.reserve(n);
  for (std::size_t i = 0; i < n; ++i) set.problems.push_back(make_problem(task, params, i));
  return set;
}

struct HarnessOptions {
  int max_steps = 20;
  EnvConfig config{};
};

struct EpisodeOutcome {
  std::string episode_id;
  /// current == answer at some timestep, including t = 0.
  bool reached_answer = false;
  /// Submit executed while current == answer.
  bool submitted_correct = false;
  int steps_taken = 0;
  /// Empty on normal termination; otherwise why the episode ended early or failed.
  std::string failure;
  /// Every exchanged line, "> " for env to agent and "< " for agent to env.
  std::vector<std::string> transcript;
  std::vector<Action> actions;
};

/// One evaluation episode: init, then state/action/result until termination or
/// the step cap, then end.
inline EpisodeOutcome run_episode(AgentSession& agent, const ProblemInstance& problem, const HarnessOptions& opts,
                                  const std::string& episode_id) {
  if (opts.max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
  EpisodeOutcome out;
  out.episode_id = episode_id;
  auto send = [&](const msg::Message& m) {
    std::string line = msg::encode(m);
    out.transcript.push_back("> " + line);
    agent.send(line);
  };

  Env env(problem.test_input, problem.test_output, opts.config);
  send(msg::Init{episode_id, problem.demonstrations, problem.test_input, opts.max_steps});
  out.reached_answer = env.state().current == env.answer();

  bool terminated = false;
  for (int t = 0; t < opts.max_steps && !terminated; ++t) {
    send(msg::State{t, env.state().current, env.state().clipboard});
    const std::string reply = agent.receive();
    out.transcript.push_back("< " + reply);
    const msg::Message m = msg::decode(reply);
    const auto* act = std::get_if<msg::ActionMsg>(&m);
    if (!act) throw AgentError(AgentError::Kind::Protocol, "expected an action message, got '" + reply + "'");
    out.actions.push_back(act->action);
    ++out.steps_taken;
    if (auto bad = env.validate(act->action)) {
      out.failure = "invalid action: " + bad->detail;
      send(msg::Result{0.0, true, bad->detail});
      terminated = true;
      break;
    }
    const StepResult r = env.step(act->action);
    if (env.state().current == env.answer()) out.reached_answer = true;
    if (act->action.op == Op::Submit && r.reward == 1.0) out.submitted_correct = true;
    send(msg::Result{r.reward, r.terminated, std::nullopt});
    terminated = r.terminated;
  }
  if (!terminated) out.failure = "step cap reached";
  send(msg::End{});
  return out;
}

/// z for a two-sided 96% normal interval, i.e. the 0.98 quantile of N(0,1).
inline constexpr double kZ96 = 2.0537489106318225;

struct Metrics {
  double reach_rate = 0.0;
  double submit_rate = 0.0;
  std::vector<double> reach_per_repeat;
  std::vector<double> submit_per_repeat;
  double reach_half_width = 0.0;
  double submit_half_width = 0.0;
  int repeats = 0;
  static constexpr const char* kCiMethod =
      "96% normal approximation over repeat means: z * s / sqrt(n), z = 2.0537, s = sample std; 0 when repeats = 1";
};

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Half-width of the 96% normal-approximation interval of the mean; 0 for n < 2.
inline double ci96_half_width(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return kZ96 * sd / std::sqrt(static_cast<double>(v.size()));
}

/// Builds a fresh agent session for a repeat.
using AgentFactory = std::function<std::unique_ptr<AgentSession>(int repeat)>;

struct Evaluation {
  Metrics metrics;
  /// outcomes[repeat][problem]
  std::vector<std::vector<EpisodeOutcome>> outcomes;
};

inline std::string eval_episode_id(const EvalSet& set, int repeat, std::size_t problem) {
  return task_name(set.task) + "_eval_" + std::to_string(repeat) + "_" + std::to_string(problem);
}

inline Evaluation evaluate(const AgentFactory& factory, const EvalSet& set, int repeats, const HarnessOptions& opts = {}) {
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  Evaluation ev;
  ev.metrics.repeats = repeats;
  for (int r = 0; r < repeats; ++r) {
    std::unique_ptr<AgentSession> session = factory(r);
    std::vector<EpisodeOutcome> outcomes;
    std::size_t reached = 0;
    std::size_t submitted = 0;
    for (std::size_t i = 0; i < set.problems.size(); ++i) {
      const std::string id = eval_episode_id(set, r, i);
      try {
        outcomes.push_back(run_episode(*session, set.problems[i], opts, id));
      } catch (const AgentError& e) {
        throw AgentError(e.kind(), "repeat " + std::to_string(r) + ", episode " + id + ": " + e.what());
      }
      reached += outcomes.back().reached_answer ? 1 : 0;
      submitted += outcomes.back().submitted_correct ? 1 : 0;
    }
    const double n = static_cast<double>(set.problems.size());
    ev.metrics.reach_per_repeat.push_back(static_cast<double>(reached) / n);
    ev.metrics.submit_per_repeat.push_back(static_cast<double>(submitted) / n);
    ev.outcomes.push_back(std::move(outcomes));
  }
  ev.metrics.reach_rate = mean_of(ev.metrics.reach_per_repeat);
  ev.metrics.submit_rate = mean_of(ev.metrics.submit_per_repeat);
  ev.metrics.reach_half_width = ci96_half_width(ev.metrics.reach_per_repeat);
  ev.metrics.submit_half_width = ci96_half_width(ev.metrics.submit_per_repeat);
  return ev;
}

/// Agent spec: "oracle", "random", "tcp:HOST:PORT", or a command line to spawn.
/// Built-in random agents are seeded per repeat from `seed`.
inline AgentFactory make_agent_factory(const std::string& spec, Task task, std::uint64_t seed, Dims max_dims,
                                       std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
  if (spec == "oracle") {
    return [task](int) { return std::make_unique<InProcessSession>(std::make_unique<OraclePolicy>(task)); };
  }
  if (spec == "random") {
    return [seed, max_dims](int repeat) {
      return std::make_unique<InProcessSession>(
          std::make_unique<RandomPolicy>(derive_seed(seed, static_cast<std::uint64_t>(repeat)), max_dims));
    };
  }
  if (spec.rfind("tcp:", 0) == 0) {
    const auto colon = spec.rfind(':');
    if (colon <= 4 || colon + 1 >= spec.size()) throw std::invalid_argument("agent spec must be tcp:HOST:PORT");
    const std::string host = spec.substr(4, colon - 4);
    const int port = std::stoi(spec.substr(colon + 1));
    return [host, port, timeout](int) { return std::make_unique<TcpSession>(host, port, timeout); };
  }
  return [spec, timeout](int) { return std::make_unique<SubprocessSession>(spec, timeout); };
}

}  // namespace solar

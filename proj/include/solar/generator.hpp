#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "solar/env.hpp"
#include "solar/grid.hpp"
#include "solar/grid_maker.hpp"

namespace solar {

/// One transition record: the state before the action, the action, and what the
/// environment returned for it.
struct Step {
  Grid current;
  std::optional<Grid> clipboard;
  Action action;
  double reward = 0.0;
  bool terminated = false;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Episode {
  std::string trajectory_id;
  std::string task;
  std::size_t problem_index = 0;
  std::size_t episode_index = 0;
  TrajectoryKind kind = TrajectoryKind::GoldStandard;
  std::vector<DemoPair> demonstrations;
  Grid test_input;
  Grid test_output;
  std::vector<Step> steps;

  bool gold() const { return kind == TrajectoryKind::GoldStandard; }

  std::vector<Action> actions() const {
    std::vector<Action> out;
    out.reserve(steps.size());
    for (const Step& s : steps) out.push_back(s.action);
    return out;
  }

  friend bool operator==(const Episode&, const Episode&) = default;
};

struct QuarantineRecord {
  PlannedEpisode planned;
  std::string reason;
  std::optional<std::size_t> failed_step;
  std::string task;
  std::size_t problem_index = 0;
  std::size_t episode_index = 0;

  friend bool operator==(const QuarantineRecord& a, const QuarantineRecord& b) {
    return a.planned.trajectory_id == b.planned.trajectory_id && a.planned.problem == b.planned.problem &&
           a.planned.operations == b.planned.operations && a.planned.selections == b.planned.selections &&
           a.planned.kind == b.planned.kind && a.reason == b.reason && a.failed_step == b.failed_step &&
           a.task == b.task && a.problem_index == b.problem_index && a.episode_index == b.episode_index;
  }
};

/// A planned episode plus the indices it was generated under.
struct PlannedItem {
  PlannedEpisode planned;
  Task task = Task::Mirror;
  std::size_t problem_index = 0;
  std::size_t episode_index = 0;
};

struct GenerationResult {
  std::vector<Episode> episodes;
  std::vector<QuarantineRecord> quarantine;
};

struct GenerateOptions {
  std::size_t n_problems = 500;
  std::size_t episodes_per_problem = 10;
  std::size_t gold_per_problem = 1;
  unsigned jobs = 1;
};

/// Replays one planned episode through the environment and either builds the
/// stored episode or explains why it was rejected.
inline std::variant<Episode, QuarantineRecord> assemble_episode(const PlannedItem& item, const EnvConfig& config) {
  const PlannedEpisode& plan = item.planned;
  auto reject = [&](std::string reason, std::optional<std::size_t> at) {
    return QuarantineRecord{plan, std::move(reason), at, task_name(item.task), item.problem_index, item.episode_index};
  };

  if (plan.operations.size() != plan.selections.size()) {
    return reject("operations and selections differ in length", std::nullopt);
  }
  Episode ep;
  ep.trajectory_id = plan.trajectory_id;
  ep.task = task_name(item.task);
  ep.problem_index = item.problem_index;
  ep.episode_index = item.episode_index;
  ep.kind = plan.kind;
  ep.demonstrations = plan.problem.demonstrations;
  ep.test_input = plan.problem.test_input;
  ep.test_output = plan.problem.test_output;

  EnvState state;
  try {
    state = reset(plan.problem.test_input, plan.problem.test_output, config);
  } catch (const EnvError& e) {
    return reject(e.what(), std::nullopt);
  }
  const std::vector<Action> actions = plan.actions();
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (state.terminated) return reject("action after termination", t);
    if (auto bad = validate_action(state, actions[t])) return reject(bad->detail, t);
    StepResult r = step(state, actions[t], plan.problem.test_output);
    ep.steps.push_back({state.current, state.clipboard, actions[t], r.reward, r.terminated});
    state = std::move(r.next_state);
  }
  if (ep.steps.empty() || !ep.steps.back().terminated) {
    return reject("episode does not end in termination", std::nullopt);
  }
  if (is_gold_id(plan.trajectory_id) && state.current != plan.problem.test_output) {
    return reject("gold-standard final grid differs from test output", ep.steps.size() - 1);
  }
  return ep;
}

/// Validates planned items in order; output order matches input order.
inline GenerationResult assemble(const std::vector<PlannedItem>& items, const EnvConfig& config) {
  GenerationResult out;
  for (const PlannedItem& item : items) {
    auto r = assemble_episode(item, config);
    if (auto* ep = std::get_if<Episode>(&r)) {
      out.episodes.push_back(std::move(*ep));
    } else {
      out.quarantine.push_back(std::get<QuarantineRecord>(std::move(r)));
    }
  }
  return out;
}

/// Problem `index` with its gold and non-optimal plans.
inline std::vector<PlannedItem> plan_problem(Task task, const TaskParams& params, const GenerateOptions& opts,
                                             std::size_t index) {
  const ProblemInstance problem = make_problem(task, params, index);
  const std::uint64_t seed = problem_seed(params.rng_seed, index);
  std::vector<PlannedItem> items;
  items.reserve(opts.episodes_per_problem);
  for (std::size_t e = 0; e < opts.episodes_per_problem; ++e) {
    const TrajectoryKind kind = e < opts.gold_per_problem ? TrajectoryKind::GoldStandard : TrajectoryKind::NonOptimal;
    std::string id = make_trajectory_id(task, index, e, kind);
    PlannedEpisode plan = kind == TrajectoryKind::GoldStandard
                              ? plan_gold(task, problem, std::move(id))
                              : plan_nonoptimal(task, problem, episode_seed(seed, e), params, std::move(id));
    items.push_back({std::move(plan), task, index, e});
  }
  return items;
}

/// Full generation. Work is split across `jobs` threads by problem index and
/// merged in (problem, episode) order, so output does not depend on jobs.
inline GenerationResult generate(Task task, const TaskParams& params, const GenerateOptions& opts) {
  if (opts.gold_per_problem > opts.episodes_per_problem) {
    throw std::invalid_argument("gold_per_problem exceeds episodes_per_problem");
  }
  const EnvConfig config = params.env_config();
  std::vector<GenerationResult> per_problem(opts.n_problems);
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(opts.n_problems)));
  std::vector<std::exception_ptr> errors(jobs);
  auto work = [&](unsigned job) {
    try {
      for (std::size_t i = job; i < opts.n_problems; i += jobs) {
        per_problem[i] = assemble(plan_problem(task, params, opts, i), config);
      }
    } catch (...) {
      errors[job] = std::current_exception();
    }
  };
  if (jobs <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(work, j);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  GenerationResult out;
  for (auto& r : per_problem) {
    std::move(r.episodes.begin(), r.episodes.end(), std::back_inserter(out.episodes));
    std::move(r.quarantine.begin(), r.quarantine.end(), std::back_inserter(out.quarantine));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation.

struct SegmentState {
  Grid input;
  Grid current;
  std::optional<Grid> clipboard;

  friend bool operator==(const SegmentState&, const SegmentState&) = default;
};

/// Fixed-horizon slice of one episode. Entries past the episode end are padding:
/// op None, zero selection, every grid MaxH x MaxW of color 10, reward 0, terminated.
struct Segment {
  std::string trajectory_id;
  std::size_t start_t = 0;
  std::vector<SegmentState> states;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<bool> terminateds;

  std::size_t horizon() const { return actions.size(); }

  friend bool operator==(const Segment&, const Segment&) = default;
};

inline SegmentState padding_state(Dims pad) {
  Grid fill(pad.rows, pad.cols, kPadColor);
  return {fill, fill, fill};
}

inline std::vector<Segment> segment_episode(const Episode& ep, std::size_t horizon, Dims pad) {
  std::vector<Segment> out;
  const SegmentState padded = padding_state(pad);
  for (std::size_t start = 0; start < ep.steps.size(); start += horizon) {
    Segment seg;
    seg.trajectory_id = ep.trajectory_id;
    seg.start_t = start;
    for (std::size_t k = 0; k < horizon; ++k) {
      const std::size_t t = start + k;
      if (t < ep.steps.size()) {
        const Step& s = ep.steps[t];
        seg.states.push_back({ep.test_input, s.current, s.clipboard});
        seg.actions.push_back(s.action);
        seg.rewards.push_back(s.reward);
        seg.terminateds.push_back(s.terminated);
      } else {
        seg.states.push_back(padded);
        seg.actions.push_back(none_action());
        seg.rewards.push_back(0.0);
        seg.terminateds.push_back(true);
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

/// ceil(len / H) non-overlapping segments per episode, in episode order.
inline std::vector<Segment> segment_dataset(const std::vector<Episode>& episodes, std::size_t horizon,
                                            Dims pad = {10, 10}) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  std::vector<Segment> out;
  for (const Episode& ep : episodes) {
    auto segs = segment_episode(ep, horizon, pad);
    std::move(segs.begin(), segs.end(), std::back_inserter(out));
  }
  return out;
}

/// Concatenates an episode's segments and drops padding entries. Transition
/// records come back exactly; the input grid is taken from the first entry.
inline std::vector<Step> reconstruct_steps(const std::vector<Segment>& segments) {
  std::vector<Step> steps;
  for (const Segment& seg : segments) {
    for (std::size_t k = 0; k < seg.actions.size(); ++k) {
      if (seg.actions[k].op == Op::None) continue;
      steps.push_back({seg.states[k].current, seg.states[k].clipboard, seg.actions[k], seg.rewards[k],
                       static_cast<bool>(seg.terminateds[k])});
    }
  }
  return steps;
}

// ---------------------------------------------------------------------------
// Verification.

struct Violation {
  std::string trajectory_id;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct VerifyReport {
  std::vector<Violation> violations;
  std::size_t episodes_checked = 0;
  std::size_t segments_checked = 0;

  bool ok() const { return violations.empty(); }
};

/// Dataset-level expectations, usually taken from the manifest.
struct DatasetExpectations {
  std::optional<std::size_t> problems;
  std::size_t episodes_per_problem = 0;
  std::size_t gold_per_problem = 0;
  EnvConfig config{};
};

namespace detail {

inline void check_episode(const Episode& ep, const EnvConfig& config, std::vector<std::string>& problems) {
  auto flag = [&](std::string msg) { problems.push_back(std::move(msg)); };

  Task task;
  try {
    task = parse_task(ep.task);
  } catch (const TaskError&) {
    flag("unknown task '" + ep.task + "'");
    return;
  }
  const std::string expected_id = make_trajectory_id(task, ep.problem_index, ep.episode_index, ep.kind);
  if (ep.trajectory_id != expected_id) flag("trajectory id does not match its indices and kind");

  ProblemInstance problem{"", ep.demonstrations, ep.test_input, ep.test_output};
  if (auto bad = check_problem(task, problem)) flag(*bad);

  if (ep.steps.empty()) {
    flag("episode has no steps");
    return;
  }
  for (std::size_t t = 0; t + 1 < ep.steps.size(); ++t) {
    if (ep.steps[t].terminated) flag("terminated flag set before the last step at t=" + std::to_string(t));
  }
  if (!ep.steps.back().terminated) flag("last step is not terminated");
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const double r = ep.steps[t].reward;
    if (r != 0.0 && r != 1.0) flag("reward outside {0,1} at t=" + std::to_string(t));
  }

  EnvState state;
  try {
    state = reset(ep.test_input, ep.test_output, config);
  } catch (const EnvError& e) {
    flag(std::string("reset failed: ") + e.what());
    return;
  }
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const Step& s = ep.steps[t];
    const std::string at = " at t=" + std::to_string(t);
    if (s.current != state.current) flag("stored current grid differs from replay" + at);
    if (s.clipboard != state.clipboard) flag("stored clipboard differs from replay" + at);
    if (auto bad = validate_action(state, s.action)) {
      flag("action cannot be performed" + at + ": " + bad->detail);
      return;
    }
    StepResult r = step(state, s.action, ep.test_output);
    if (r.reward != s.reward) flag("stored reward differs from replay" + at);
    if (r.terminated != s.terminated) flag("stored terminated flag differs from replay" + at);
    state = std::move(r.next_state);
    if (state.terminated && t + 1 < ep.steps.size()) {
      flag("replay terminates early" + at);
      return;
    }
  }
  if (ep.gold()) {
    if (state.current != ep.test_output) flag("gold-standard final grid differs from test output");
    if (ep.steps.back().reward != 1.0) flag("gold-standard final reward is not 1");
  }
  if (ep.gold() != is_gold_id(ep.trajectory_id)) flag("kind disagrees with trajectory id");
}

}  // namespace detail

/// Replays one stored episode and re-checks it. All findings for the episode are
/// joined into a single violation.
inline void verify_episode(const Episode& ep, const EnvConfig& config, std::vector<Violation>& out) {
  std::vector<std::string> problems;
  detail::check_episode(ep, config, problems);
  if (problems.empty()) return;
  std::string joined = problems.front();
  for (std::size_t i = 1; i < problems.size(); ++i) joined += "; " + problems[i];
  out.push_back({ep.trajectory_id, std::move(joined)});
}

/// Re-runs every check done at generation time, plus dataset-level composition
/// checks when expectations are given.
inline VerifyReport verify_dataset(const std::vector<Episode>& episodes,
                                   const std::optional<DatasetExpectations>& expect = std::nullopt) {
  VerifyReport report;
  const EnvConfig config = expect ? expect->config : EnvConfig{};
  std::map<std::string, int> seen;
  for (const Episode& ep : episodes) {
    ++report.episodes_checked;
    if (seen[ep.trajectory_id]++ > 0) report.violations.push_back({ep.trajectory_id, "duplicate trajectory id"});
    verify_episode(ep, config, report.violations);
  }
  if (expect) {
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_problem;
    for (const Episode& ep : episodes) {
      auto& [total, gold] = per_problem[ep.problem_index];
      ++total;
      if (ep.gold()) ++gold;
    }
    if (expect->problems && per_problem.size() != *expect->problems) {
      report.violations.push_back({"dataset", "covers " + std::to_string(per_problem.size()) + " problems, expected " +
                                                  std::to_string(*expect->problems)});
    }
    for (const auto& [index, counts] : per_problem) {
      const std::string id = "problem_" + std::to_string(index);
      if (counts.first != expect->episodes_per_problem) {
        report.violations.push_back({id, "has " + std::to_string(counts.first) + " episodes, expected " +
                                              std::to_string(expect->episodes_per_problem)});
      }
      if (counts.second != expect->gold_per_problem) {
        report.violations.push_back({id, "has " + std::to_string(counts.second) + " gold episodes, expected " +
                                              std::to_string(expect->gold_per_problem)});
      }
    }
  }
  return report;
}

/// Checks that segments are exactly the segmentation of the episodes.
inline void verify_segments(const std::vector<Episode>& episodes, const std::vector<Segment>& segments,
                            std::size_t horizon, Dims pad, VerifyReport& report) {
  std::size_t next = 0;
  for (const Episode& ep : episodes) {
    for (const Segment& expected : segment_episode(ep, horizon, pad)) {
      if (next >= segments.size()) {
        report.violations.push_back({ep.trajectory_id, "missing segment at start_t=" + std::to_string(expected.start_t)});
        continue;
      }
      ++report.segments_checked;
      if (segments[next] != expected) {
        report.violations.push_back(
            {ep.trajectory_id, "segment at start_t=" + std::to_string(expected.start_t) + " differs from episode"});
      }
      ++next;
    }
  }
  for (; next < segments.size(); ++next) {
    report.violations.push_back({segments[next].trajectory_id, "segment without a matching episode"});
  }
}

}  // namespace solar

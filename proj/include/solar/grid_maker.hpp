#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "solar/env.hpp"
#include "solar/grid.hpp"
#include "solar/rng.hpp"

namespace solar {

enum class Task { Mirror, Diagonal };

inline std::string task_name(Task t) { return t == Task::Mirror ? "mirror" : "diagonal"; }

class TaskError : public std::runtime_error {
 public:
  enum class Kind { TaskUnknown, DimsTooSmall, PlacementFailure, NoValidActionAvailable };

  TaskError(Kind kind, const std::string& detail) : std::runtime_error(detail), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline Task parse_task(const std::string& name) {
  if (name == "mirror") return Task::Mirror;
  if (name == "diagonal") return Task::Diagonal;
  throw TaskError(TaskError::Kind::TaskUnknown, "unknown task '" + name + "'");
}

struct DemoPair {
  Grid input;
  Grid output;

  friend bool operator==(const DemoPair&, const DemoPair&) = default;
};

struct ProblemInstance {
  std::string problem_id;
  std::vector<DemoPair> demonstrations;
  Grid test_input;
  Grid test_output;

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

enum class TrajectoryKind { GoldStandard, NonOptimal };

inline constexpr const char* kGoldTag = "gold-standard";
inline constexpr const char* kNonOptimalTag = "non-optimal";

inline const char* kind_tag(TrajectoryKind k) { return k == TrajectoryKind::GoldStandard ? kGoldTag : kNonOptimalTag; }

inline bool is_gold_id(const std::string& trajectory_id) {
  return trajectory_id.find(kGoldTag) != std::string::npos;
}

/// "{task}_{problem_index}_{episode_index}_{gold-standard|non-optimal}"
inline std::string make_trajectory_id(Task task, std::size_t problem_index, std::size_t episode_index,
                                      TrajectoryKind kind) {
  return task_name(task) + "_" + std::to_string(problem_index) + "_" + std::to_string(episode_index) + "_" +
         kind_tag(kind);
}

struct PlannedEpisode {
  std::string trajectory_id;
  ProblemInstance problem;
  std::vector<Op> operations;
  std::vector<Selection> selections;
  TrajectoryKind kind = TrajectoryKind::GoldStandard;

  std::vector<Action> actions() const {
    std::vector<Action> out;
    out.reserve(operations.size());
    for (std::size_t i = 0; i < operations.size() && i < selections.size(); ++i) {
      out.push_back({operations[i], selections[i]});
    }
    return out;
  }

  void push(const Action& a) {
    operations.push_back(a.op);
    selections.push_back(a.sel);
  }
};

struct TaskParams {
  Dims max_dims{10, 10};
  int demos_per_problem = 3;
  /// Target non-optimal length; actual length is uniform in len +/- jitter.
  int nonoptimal_len = 10;
  int nonoptimal_jitter = 2;
  std::uint64_t rng_seed = 0;

  EnvConfig env_config() const { return EnvConfig{max_dims, 1}; }
};

/// Seed of problem `index` under a run seed.
inline std::uint64_t problem_seed(std::uint64_t run_seed, std::size_t index) { return derive_seed(run_seed, index); }

/// Seed of the non-optimal walk for episode `episode_index` of a problem.
inline std::uint64_t episode_seed(std::uint64_t problem_seed_value, std::size_t episode_index) {
  return derive_seed(derive_seed(problem_seed_value, 1), episode_index);
}

inline Grid random_grid(Rng& rng, int rows, int cols) {
  std::vector<Cell> cells(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (auto& c : cells) c = static_cast<Cell>(rng.below(10));
  return Grid(rows, cols, std::move(cells));
}

// ---------------------------------------------------------------------------
// Mirror task: output is flip_vertical(input) stacked on top of input.

inline Grid mirror_rule(const Grid& input) {
  return stack_vertical(transform_region(input, input.whole(), RegionTransform::FlipV), input);
}

inline ProblemInstance mirror_make_problem(std::uint64_t seed, const TaskParams& params) {
  if (params.max_dims.rows < 2 || params.max_dims.cols < 1) {
    throw TaskError(TaskError::Kind::DimsTooSmall, "mirror task needs at least 2 rows");
  }
  Rng rng(seed);
  auto make_pair = [&] {
    const int r = rng.range(1, params.max_dims.rows / 2);
    const int c = rng.range(1, params.max_dims.cols);
    Grid in = random_grid(rng, r, c);
    Grid out = mirror_rule(in);
    return DemoPair{std::move(in), std::move(out)};
  };
  ProblemInstance p;
  for (int i = 0; i < params.demos_per_problem; ++i) p.demonstrations.push_back(make_pair());
  DemoPair test = make_pair();
  p.test_input = std::move(test.input);
  p.test_output = std::move(test.output);
  return p;
}

/// ResizeGrid to double height, CopyO upper half, Paste lower half, FlipV upper half, Submit.
inline std::vector<Action> mirror_gold_actions(const Grid& input) {
  const int r = input.rows();
  const int c = input.cols();
  const Selection upper{0, 0, r - 1, c - 1};
  const Selection lower{r, 0, r - 1, c - 1};
  return {
      {Op::ResizeGrid, {0, 0, 2 * r - 1, c - 1}},
      {Op::CopyO, upper},
      {Op::Paste, lower},
      {Op::FlipV, upper},
      submit_action(),
  };
}

inline PlannedEpisode mirror_gold_trajectory(const ProblemInstance& problem, std::string trajectory_id = {}) {
  PlannedEpisode ep;
  ep.trajectory_id = std::move(trajectory_id);
  ep.problem = problem;
  ep.kind = TrajectoryKind::GoldStandard;
  for (const Action& a : mirror_gold_actions(problem.test_input)) ep.push(a);
  return ep;
}

/// Random-walk selection options on the current grid. Halves have floor(rows/2)
/// rows each and are absent on a single-row grid.
struct HalfOptions {
  std::optional<Selection> upper;
  std::optional<Selection> lower;
  Selection whole;

  explicit HalfOptions(const Grid& g) : whole(g.whole()) {
    const int half = g.rows() / 2;
    if (half > 0) {
      upper = Selection{0, 0, half - 1, g.cols() - 1};
      lower = Selection{g.rows() - half, 0, half - 1, g.cols() - 1};
    }
  }
};

inline PlannedEpisode mirror_nonoptimal_trajectory(const ProblemInstance& problem, std::uint64_t seed,
                                                   const TaskParams& params, std::string trajectory_id = {}) {
  Rng rng(seed);
  const std::vector<Action> gold = mirror_gold_actions(problem.test_input);
  const int branch = rng.range(0, static_cast<int>(gold.size()) - 1);
  int total = rng.range(params.nonoptimal_len - params.nonoptimal_jitter,
                        params.nonoptimal_len + params.nonoptimal_jitter);
  total = std::max(total, branch + 2);

  PlannedEpisode ep;
  ep.trajectory_id = std::move(trajectory_id);
  ep.problem = problem;
  ep.kind = TrajectoryKind::NonOptimal;

  Env env(problem.test_input, problem.test_output, params.env_config());
  for (int i = 0; i < branch; ++i) {
    env.step(gold[static_cast<std::size_t>(i)]);
    ep.push(gold[static_cast<std::size_t>(i)]);
  }

  static constexpr std::array<Op, 5> kRandomOps{Op::FlipV, Op::FlipH, Op::Rotate90, Op::Rotate270, Op::CopyO};
  int remaining = total - 1 - branch;
  while (remaining > 0) {
    const HalfOptions halves(env.state().current);
    std::optional<Action> chosen;
    for (int attempt = 0; attempt < 10000 && !chosen; ++attempt) {
      const Op op = rng.pick(kRandomOps);
      const bool three_way = op == Op::FlipV || op == Op::FlipH;
      const int option = rng.range(0, three_way ? 2 : 1);
      const std::optional<Selection> sel = option == 0 ? halves.upper : option == 1 ? halves.lower
                                                                                    : std::optional(halves.whole);
      if (!sel) continue;
      if (op == Op::CopyO && remaining < 2) continue;
      const Action candidate{op, *sel};
      if (env.validate(candidate)) continue;
      chosen = candidate;
    }
    if (!chosen) {
      throw TaskError(TaskError::Kind::NoValidActionAvailable,
                      "no valid random action on " + std::to_string(env.state().current.rows()) + "x" +
                          std::to_string(env.state().current.cols()) + " grid");
    }
    env.step(*chosen);
    ep.push(*chosen);
    --remaining;
    if (chosen->op == Op::CopyO) {
      const Selection other = chosen->sel == *halves.upper ? *halves.lower : *halves.upper;
      const Action paste{Op::Paste, other};
      env.step(paste);
      ep.push(paste);
      --remaining;
    }
  }
  ep.push(submit_action());
  return ep;
}

// ---------------------------------------------------------------------------
// Diagonal task: from the top-left corner of one square a diagonal of its color
// runs up-left to the edge; from the bottom-right corner of the other square a
// diagonal of its color runs down-right to the edge.

struct DiagonalRoles {
  int up_left_color = 0;
  int down_right_color = 0;

  friend bool operator==(const DiagonalRoles&, const DiagonalRoles&) = default;
};

using CellPos = std::pair<int, int>;

/// Cells strictly up-left of (row, col), nearest first.
inline std::vector<CellPos> up_left_walk(int row, int col) {
  std::vector<CellPos> out;
  for (int r = row - 1, c = col - 1; r >= 0 && c >= 0; --r, --c) out.emplace_back(r, c);
  return out;
}

/// Cells strictly down-right of (row, col) inside dims, nearest first.
inline std::vector<CellPos> down_right_walk(Dims dims, int row, int col) {
  std::vector<CellPos> out;
  for (int r = row + 1, c = col + 1; r < dims.rows && c < dims.cols; ++r, ++c) out.emplace_back(r, c);
  return out;
}

/// Bounding box of all cells with the given color.
inline std::optional<Selection> find_color_box(const Grid& g, int color) {
  int top = g.rows(), left = g.cols(), bottom = -1, right = -1;
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      if (g.at(r, c) != color) continue;
      top = std::min(top, r);
      left = std::min(left, c);
      bottom = std::max(bottom, r);
      right = std::max(right, c);
    }
  }
  if (bottom < 0) return std::nullopt;
  return Selection{top, left, bottom - top, right - left};
}

struct DiagonalPlan {
  std::vector<CellPos> up_left_cells;
  std::vector<CellPos> down_right_cells;
};

inline DiagonalPlan diagonal_plan(const Grid& input, const DiagonalRoles& roles) {
  const auto a = find_color_box(input, roles.up_left_color);
  const auto b = find_color_box(input, roles.down_right_color);
  if (!a || !b) throw TaskError(TaskError::Kind::PlacementFailure, "diagonal squares not found in input");
  return {up_left_walk(a->x, a->y), down_right_walk(input.dims(), b->bottom(), b->right())};
}

inline Grid apply_diagonal_rule(const Grid& input, const DiagonalRoles& roles) {
  const DiagonalPlan plan = diagonal_plan(input, roles);
  Grid out = input;
  for (auto [r, c] : plan.up_left_cells) out.at(r, c) = static_cast<Cell>(roles.up_left_color);
  for (auto [r, c] : plan.down_right_cells) out.at(r, c) = static_cast<Cell>(roles.down_right_color);
  return out;
}

/// One Color(c) action per diagonal cell, up-left diagonal first, then Submit.
inline std::vector<Action> diagonal_gold_actions(const Grid& input, const DiagonalRoles& roles) {
  const DiagonalPlan plan = diagonal_plan(input, roles);
  std::vector<Action> out;
  for (auto [r, c] : plan.up_left_cells) out.push_back({color_op(roles.up_left_color), {r, c, 0, 0}});
  for (auto [r, c] : plan.down_right_cells) out.push_back({color_op(roles.down_right_color), {r, c, 0, 0}});
  out.push_back(submit_action());
  return out;
}

/// Reads the color roles off the demonstrations: a color whose added cells sit
/// above its square walks up-left.
inline DiagonalRoles infer_diagonal_roles(const std::vector<DemoPair>& demos) {
  std::optional<int> up_left;
  std::optional<int> down_right;
  for (const auto& d : demos) {
    if (d.input.dims() != d.output.dims()) continue;
    for (int r = 0; r < d.input.rows(); ++r) {
      for (int c = 0; c < d.input.cols(); ++c) {
        const int color = d.output.at(r, c);
        if (color == d.input.at(r, c)) continue;
        const auto box = find_color_box(d.input, color);
        if (!box) continue;
        if (r < box->x) {
          up_left = color;
        } else if (r > box->bottom()) {
          down_right = color;
        }
      }
    }
  }
  if (!up_left || !down_right || *up_left == *down_right) {
    throw TaskError(TaskError::Kind::PlacementFailure, "demonstrations do not determine diagonal roles");
  }
  return {*up_left, *down_right};
}

struct SquareSpec {
  int row = 0;
  int col = 0;
  int size = 1;

  Selection box() const { return {row, col, size - 1, size - 1}; }
};

namespace detail {

inline bool box_has(const Selection& s, CellPos p) {
  return p.first >= s.x && p.first <= s.bottom() && p.second >= s.y && p.second <= s.right();
}

inline bool boxes_overlap(const Selection& a, const Selection& b) {
  return a.x <= b.bottom() && b.x <= a.bottom() && a.y <= b.right() && b.y <= a.right();
}

}  // namespace detail

/// Places two squares so that neither diagonal crosses a square or the other diagonal.
/// With `need_both_walks`, both diagonals must be non-empty so the pair shows the rule;
/// otherwise at least one must be, so the output differs from the input.
inline std::pair<Grid, Grid> diagonal_make_pair(Rng& rng, const TaskParams& params, const DiagonalRoles& roles,
                                                bool need_both_walks) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Dims dims{rng.range(5, params.max_dims.rows), rng.range(5, params.max_dims.cols)};
    const int size_a = rng.range(1, 3);
    const int size_b = rng.range(1, 3);
    const SquareSpec a{rng.range(0, dims.rows - size_a), rng.range(0, dims.cols - size_a), size_a};
    const SquareSpec b{rng.range(0, dims.rows - size_b), rng.range(0, dims.cols - size_b), size_b};
    const Selection box_a = a.box();
    const Selection box_b = b.box();
    if (detail::boxes_overlap(box_a, box_b)) continue;
    const auto walk_a = up_left_walk(box_a.x, box_a.y);
    const auto walk_b = down_right_walk(dims, box_b.bottom(), box_b.right());
    if (need_both_walks && (walk_a.empty() || walk_b.empty())) continue;
    if (walk_a.empty() && walk_b.empty()) continue;
    const bool crosses =
        std::any_of(walk_a.begin(), walk_a.end(), [&](CellPos p) { return detail::box_has(box_b, p); }) ||
        std::any_of(walk_b.begin(), walk_b.end(), [&](CellPos p) { return detail::box_has(box_a, p); }) ||
        std::any_of(walk_a.begin(), walk_a.end(),
                    [&](CellPos p) { return std::find(walk_b.begin(), walk_b.end(), p) != walk_b.end(); });
    if (crosses) continue;
    Grid in(dims.rows, dims.cols, 0);
    for (int r = box_a.x; r <= box_a.bottom(); ++r)
      for (int c = box_a.y; c <= box_a.right(); ++c) in.at(r, c) = static_cast<Cell>(roles.up_left_color);
    for (int r = box_b.x; r <= box_b.bottom(); ++r)
      for (int c = box_b.y; c <= box_b.right(); ++c) in.at(r, c) = static_cast<Cell>(roles.down_right_color);
    Grid out = apply_diagonal_rule(in, roles);
    return {std::move(in), std::move(out)};
  }
  throw TaskError(TaskError::Kind::PlacementFailure, "could not place diagonal squares");
}

inline ProblemInstance diagonal_make_problem(std::uint64_t seed, const TaskParams& params) {
  if (params.max_dims.rows < 5 || params.max_dims.cols < 5) {
    throw TaskError(TaskError::Kind::DimsTooSmall, "diagonal task needs at least 5x5 grids");
  }
  Rng rng(seed);
  DiagonalRoles roles;
  roles.up_left_color = rng.range(1, 9);
  do {
    roles.down_right_color = rng.range(1, 9);
  } while (roles.down_right_color == roles.up_left_color);

  ProblemInstance p;
  for (int i = 0; i < params.demos_per_problem; ++i) {
    auto [in, out] = diagonal_make_pair(rng, params, roles, true);
    p.demonstrations.push_back({std::move(in), std::move(out)});
  }
  auto [in, out] = diagonal_make_pair(rng, params, roles, false);
  p.test_input = std::move(in);
  p.test_output = std::move(out);
  return p;
}

inline PlannedEpisode diagonal_gold_trajectory(const ProblemInstance& problem, std::string trajectory_id = {}) {
  PlannedEpisode ep;
  ep.trajectory_id = std::move(trajectory_id);
  ep.problem = problem;
  ep.kind = TrajectoryKind::GoldStandard;
  for (const Action& a : diagonal_gold_actions(problem.test_input, infer_diagonal_roles(problem.demonstrations))) {
    ep.push(a);
  }
  return ep;
}

/// Gold prefix up to a random branch, then random 1x1 Color actions using the two
/// square colors or background, then Submit.
inline PlannedEpisode diagonal_nonoptimal_trajectory(const ProblemInstance& problem, std::uint64_t seed,
                                                     const TaskParams& params, std::string trajectory_id = {}) {
  Rng rng(seed);
  const DiagonalRoles roles = infer_diagonal_roles(problem.demonstrations);
  const std::vector<Action> gold = diagonal_gold_actions(problem.test_input, roles);
  const int branch = rng.range(0, static_cast<int>(gold.size()) - 1);
  int total = rng.range(params.nonoptimal_len - params.nonoptimal_jitter,
                        params.nonoptimal_len + params.nonoptimal_jitter);
  total = std::max(total, branch + 2);

  PlannedEpisode ep;
  ep.trajectory_id = std::move(trajectory_id);
  ep.problem = problem;
  ep.kind = TrajectoryKind::NonOptimal;
  for (int i = 0; i < branch; ++i) ep.push(gold[static_cast<std::size_t>(i)]);
  const std::array<int, 3> palette{roles.up_left_color, roles.down_right_color, 0};
  const Grid& g = problem.test_input;
  for (int i = branch; i < total - 1; ++i) {
    const int color = rng.pick(palette);
    const int r = rng.range(0, g.rows() - 1);
    const int c = rng.range(0, g.cols() - 1);
    ep.push({color_op(color), {r, c, 0, 0}});
  }
  ep.push(submit_action());
  return ep;
}

// ---------------------------------------------------------------------------
// Task dispatch.

inline ProblemInstance make_problem(Task task, const TaskParams& params, std::size_t index) {
  const std::uint64_t seed = problem_seed(params.rng_seed, index);
  ProblemInstance p = task == Task::Mirror ? mirror_make_problem(seed, params) : diagonal_make_problem(seed, params);
  p.problem_id = task_name(task) + "_" + std::to_string(index);
  return p;
}

inline PlannedEpisode plan_gold(Task task, const ProblemInstance& problem, std::string trajectory_id) {
  return task == Task::Mirror ? mirror_gold_trajectory(problem, std::move(trajectory_id))
                              : diagonal_gold_trajectory(problem, std::move(trajectory_id));
}

inline PlannedEpisode plan_nonoptimal(Task task, const ProblemInstance& problem, std::uint64_t seed,
                                      const TaskParams& params, std::string trajectory_id) {
  return task == Task::Mirror ? mirror_nonoptimal_trajectory(problem, seed, params, std::move(trajectory_id))
                              : diagonal_nonoptimal_trajectory(problem, seed, params, std::move(trajectory_id));
}

/// Gold action plan computed from what an agent sees: demonstrations and test input.
inline std::vector<Action> solve_from_observation(Task task, const std::vector<DemoPair>& demos,
                                                  const Grid& test_input) {
  if (task == Task::Mirror) return mirror_gold_actions(test_input);
  return diagonal_gold_actions(test_input, infer_diagonal_roles(demos));
}

/// Checks one input/output pair against the task rule; returns a description on mismatch.
inline std::optional<std::string> check_pair(Task task, const Grid& input, const Grid& output,
                                             const std::optional<DiagonalRoles>& roles) {
  try {
    const Grid expected = task == Task::Mirror ? mirror_rule(input) : apply_diagonal_rule(input, roles.value());
    if (expected != output) return std::string("output does not follow the ") + task_name(task) + " rule";
  } catch (const std::exception& e) {
    return std::string("rule check failed: ") + e.what();
  }
  return std::nullopt;
}

/// Verifies demonstrations and the test pair all obey the task rule.
inline std::optional<std::string> check_problem(Task task, const ProblemInstance& p) {
  std::optional<DiagonalRoles> roles;
  if (task == Task::Diagonal) {
    try {
      roles = infer_diagonal_roles(p.demonstrations);
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
  }
  for (std::size_t i = 0; i < p.demonstrations.size(); ++i) {
    if (auto bad = check_pair(task, p.demonstrations[i].input, p.demonstrations[i].output, roles)) {
      return "demonstration " + std::to_string(i) + ": " + *bad;
    }
  }
  if (auto bad = check_pair(task, p.test_input, p.test_output, roles)) return "test pair: " + *bad;
  return std::nullopt;
}

}  // namespace solar

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "solar/grid.hpp"

namespace solar {

/// Canonical operation table. Codes 0-34 are executable; 35 only appears in
/// stored data after termination.
enum class Op : int {
  // 0-9: Color(c)
  Color0 = 0,
  // 10-19: FloodFill(c)
  FloodFill0 = 10,
  MoveUp = 20,
  MoveDown = 21,
  MoveLeft = 22,
  MoveRight = 23,
  Rotate90 = 24,
  Rotate270 = 25,
  FlipH = 26,
  FlipV = 27,
  CopyI = 28,
  CopyO = 29,
  Paste = 30,
  CropGrid = 31,
  ResetGrid = 32,
  ResizeGrid = 33,
  Submit = 34,
  None = 35,
};

inline constexpr int kNumExecutableOps = 35;
inline constexpr int kNumOps = 36;

inline constexpr int op_code(Op op) { return static_cast<int>(op); }

inline constexpr Op color_op(int color) { return static_cast<Op>(color); }
inline constexpr Op flood_fill_op(int color) { return static_cast<Op>(10 + color); }

inline constexpr bool is_color_op(Op op) { return op_code(op) >= 0 && op_code(op) <= 9; }
inline constexpr bool is_flood_fill_op(Op op) { return op_code(op) >= 10 && op_code(op) <= 19; }

inline std::string op_name(Op op) {
  const int code = op_code(op);
  if (code >= 0 && code <= 9) return "Color" + std::to_string(code);
  if (code >= 10 && code <= 19) return "FloodFill" + std::to_string(code - 10);
  switch (op) {
    case Op::MoveUp: return "MoveUp";
    case Op::MoveDown: return "MoveDown";
    case Op::MoveLeft: return "MoveLeft";
    case Op::MoveRight: return "MoveRight";
    case Op::Rotate90: return "Rotate90";
    case Op::Rotate270: return "Rotate270";
    case Op::FlipH: return "FlipH";
    case Op::FlipV: return "FlipV";
    case Op::CopyI: return "CopyI";
    case Op::CopyO: return "CopyO";
    case Op::Paste: return "Paste";
    case Op::CropGrid: return "CropGrid";
    case Op::ResetGrid: return "ResetGrid";
    case Op::ResizeGrid: return "ResizeGrid";
    case Op::Submit: return "Submit";
    case Op::None: return "None";
    default: return "Op" + std::to_string(code);
  }
}

struct Action {
  Op op = Op::Submit;
  Selection sel{};

  friend bool operator==(const Action&, const Action&) = default;
};

inline Action submit_action() { return {Op::Submit, {}}; }
inline Action none_action() { return {Op::None, {}}; }

struct EnvConfig {
  Dims max_dims{10, 10};
  int max_submit_attempts = 1;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct EnvState {
  Grid input;
  Grid current;
  std::optional<Grid> clipboard;
  int step_index = 0;
  bool terminated = false;
  int submit_count = 0;
  EnvConfig config{};

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
  EnvState next_state;
  double reward = 0.0;
  bool terminated = false;
};

class EnvError : public std::runtime_error {
 public:
  enum class Kind { InvalidGrid, EpisodeTerminated, InvalidAction };

  EnvError(Kind kind, const std::string& detail) : std::runtime_error(detail), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Why an action cannot be performed in a state.
struct InvalidAction {
  std::string detail;
};

namespace detail {

inline std::string sel_text(const Selection& s) {
  return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

inline void require_env_grid(const Grid& g, const EnvConfig& config, const char* what) {
  if (g.empty()) throw EnvError(EnvError::Kind::InvalidGrid, std::string(what) + " grid is empty");
  if (!g.playable()) {
    throw EnvError(EnvError::Kind::InvalidGrid, std::string(what) + " grid has a non-playable color");
  }
  if (g.rows() > config.max_dims.rows || g.cols() > config.max_dims.cols) {
    throw EnvError(EnvError::Kind::InvalidGrid, std::string(what) + " grid exceeds max dims");
  }
}

}  // namespace detail

inline EnvState reset(const Grid& input, const Grid& answer, const EnvConfig& config = {}) {
  detail::require_env_grid(input, config, "input");
  detail::require_env_grid(answer, config, "answer");
  EnvState state;
  state.input = input;
  state.current = input;
  state.config = config;
  return state;
}

/// The "can be performed" check. Returns nullopt when the action is executable.
inline std::optional<InvalidAction> validate_action(const EnvState& state, const Action& action) {
  const int code = op_code(action.op);
  if (state.terminated) return InvalidAction{"episode already terminated"};
  if (code < 0 || code >= kNumOps) return InvalidAction{"unknown operation " + std::to_string(code)};
  if (action.op == Op::None) return InvalidAction{"None is padding only and never executable"};
  if (action.op == Op::Submit) return std::nullopt;
  const Selection& sel = action.sel;
  if (!sel.well_formed()) return InvalidAction{"negative selection component " + detail::sel_text(sel)};

  if (action.op == Op::ResizeGrid) {
    if (sel.bottom() + 1 > state.config.max_dims.rows || sel.right() + 1 > state.config.max_dims.cols) {
      return InvalidAction{"resize target " + detail::sel_text(sel) + " exceeds max dims"};
    }
    return std::nullopt;
  }
  const Grid& target = action.op == Op::CopyI ? state.input : state.current;
  if (!target.contains(sel)) {
    return InvalidAction{"selection " + detail::sel_text(sel) + " out of bounds for " +
                         std::to_string(target.rows()) + "x" + std::to_string(target.cols()) + " grid"};
  }
  if ((action.op == Op::Rotate90 || action.op == Op::Rotate270) && !sel.is_square()) {
    return InvalidAction{"non-square rotation selection " + detail::sel_text(sel)};
  }
  if (action.op == Op::Paste) {
    if (!state.clipboard) return InvalidAction{"paste with empty clipboard"};
    if (state.clipboard->rows() != sel.rows() || state.clipboard->cols() != sel.cols()) {
      return InvalidAction{"clipboard dims do not match selection " + detail::sel_text(sel)};
    }
  }
  return std::nullopt;
}

/// Pure transition. Reward is 1 only for Submit at the answer grid.
inline StepResult step(const EnvState& state, const Action& action, const Grid& answer) {
  if (state.terminated) throw EnvError(EnvError::Kind::EpisodeTerminated, "step after termination");
  if (auto bad = validate_action(state, action)) {
    throw EnvError(EnvError::Kind::InvalidAction, bad->detail);
  }

  StepResult result{state, 0.0, false};
  EnvState& next = result.next_state;
  const Selection& sel = action.sel;
  const Op op = action.op;
  const int code = op_code(op);

  if (is_color_op(op)) {
    next.current = recolor_region(state.current, sel, code);
  } else if (is_flood_fill_op(op)) {
    next.current = flood_fill(state.current, sel, code - 10);
  } else {
    switch (op) {
      case Op::MoveUp: next.current = move_region(state.current, sel, MoveDirection::Up); break;
      case Op::MoveDown: next.current = move_region(state.current, sel, MoveDirection::Down); break;
      case Op::MoveLeft: next.current = move_region(state.current, sel, MoveDirection::Left); break;
      case Op::MoveRight: next.current = move_region(state.current, sel, MoveDirection::Right); break;
      case Op::Rotate90: next.current = transform_region(state.current, sel, RegionTransform::Rotate90); break;
      case Op::Rotate270: next.current = transform_region(state.current, sel, RegionTransform::Rotate270); break;
      case Op::FlipH: next.current = transform_region(state.current, sel, RegionTransform::FlipH); break;
      case Op::FlipV: next.current = transform_region(state.current, sel, RegionTransform::FlipV); break;
      case Op::CopyI: next.clipboard = copy_region(state.input, sel); break;
      case Op::CopyO: next.clipboard = copy_region(state.current, sel); break;
      case Op::Paste: next.current = paste_region(state.current, state.clipboard, sel); break;
      case Op::CropGrid: next.current = copy_region(state.current, sel); break;
      case Op::ResetGrid: next.current = state.input; break;
      case Op::ResizeGrid: next.current = resize_grid(state.current, sel, state.config.max_dims); break;
      case Op::Submit:
        next.submit_count = state.submit_count + 1;
        if (state.current == answer) {
          result.reward = 1.0;
          result.terminated = true;
        } else if (next.submit_count >= state.config.max_submit_attempts) {
          result.terminated = true;
        }
        break;
      default: break;
    }
  }
  next.step_index = state.step_index + 1;
  next.terminated = result.terminated;
  return result;
}

struct ReplayOutcome {
  std::vector<StepResult> steps;
  /// Index of the first action that could not be performed.
  std::optional<std::size_t> failed_index;
  std::string failure;
  /// Actions left over after the episode terminated.
  std::size_t trailing_actions = 0;

  bool ok() const { return !failed_index && trailing_actions == 0; }
  bool terminated() const { return !steps.empty() && steps.back().terminated; }
};

/// Folds step from reset; stops at the first termination or the first invalid action.
inline ReplayOutcome replay(const Grid& input, const Grid& answer, const std::vector<Action>& actions,
                            const EnvConfig& config = {}) {
  ReplayOutcome out;
  if (actions.empty()) return out;
  EnvState state = reset(input, answer, config);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (auto bad = validate_action(state, actions[i])) {
      out.failed_index = i;
      out.failure = bad->detail;
      return out;
    }
    out.steps.push_back(step(state, actions[i], answer));
    state = out.steps.back().next_state;
    if (state.terminated) {
      out.trailing_actions = actions.size() - i - 1;
      break;
    }
  }
  return out;
}

/// Stateful wrapper over reset/step for one episode.
class Env {
 public:
  Env(Grid input, Grid answer, EnvConfig config = {})
      : answer_(std::move(answer)), state_(reset(input, answer_, config)) {}

  const EnvState& state() const { return state_; }
  const Grid& answer() const { return answer_; }

  StepResult step(const Action& action) {
    StepResult r = solar::step(state_, action, answer_);
    state_ = r.next_state;
    return r;
  }

  std::optional<InvalidAction> validate(const Action& action) const { return validate_action(state_, action); }

 private:
  Grid answer_;
  EnvState state_;
};

}  // namespace solar

#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "solar/env.hpp"
#include "solar/grid_maker.hpp"
#include "solar/protocol.hpp"
#include "solar/rng.hpp"

namespace solar {

/// Solves the task from what it is shown: the task rule applied to the
/// demonstrations and the test input. Submits once its plan runs out.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(Task task) : task_(task) {}

  void begin(const msg::Init& init) override {
    plan_ = solve_from_observation(task_, init.demonstrations, init.test_input);
  }

  Action act(const msg::State& state) override {
    const auto t = static_cast<std::size_t>(state.t);
    return t < plan_.size() ? plan_[t] : submit_action();
  }

 private:
  Task task_;
  std::vector<Action> plan_;
};

/// Plays a fixed action list, then Submit.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<Action> script) : script_(std::move(script)) {}

  void begin(const msg::Init&) override {}

  Action act(const msg::State& state) override {
    const auto t = static_cast<std::size_t>(state.t);
    return t < script_.size() ? script_[t] : submit_action();
  }

 private:
  std::vector<Action> script_;
};

/// Uniformly random operation with a random selection, resampled until the
/// action is valid in the observed state.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(std::uint64_t seed, Dims max_dims = {10, 10}) : rng_(seed), max_dims_(max_dims) {}

  void begin(const msg::Init& init) override { input_ = init.test_input; }

  Action act(const msg::State& s) override {
    EnvState view;
    view.input = input_;
    view.current = s.current;
    view.clipboard = s.clipboard;
    view.config = EnvConfig{max_dims_, 1};
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Action a = draw(view);
      if (!validate_action(view, a)) return a;
    }
    return submit_action();
  }

 private:
  Selection random_box(const Grid& g, bool square) {
    const int x = rng_.range(0, g.rows() - 1);
    const int y = rng_.range(0, g.cols() - 1);
    if (square) {
      const int k = rng_.range(0, std::min(g.rows() - x, g.cols() - y) - 1);
      return {x, y, k, k};
    }
    return {x, y, rng_.range(0, g.rows() - 1 - x), rng_.range(0, g.cols() - 1 - y)};
  }

  Action draw(const EnvState& view) {
    const auto op = static_cast<Op>(rng_.below(kNumExecutableOps));
    switch (op) {
      case Op::Submit: return submit_action();
      case Op::ResizeGrid:
        return {op, {0, 0, rng_.range(0, max_dims_.rows - 1), rng_.range(0, max_dims_.cols - 1)}};
      case Op::CopyI: return {op, random_box(view.input, false)};
      case Op::Rotate90:
      case Op::Rotate270: return {op, random_box(view.current, true)};
      default: return {op, random_box(view.current, false)};
    }
  }

  Rng rng_;
  Dims max_dims_;
  Grid input_;
};

}  // namespace solar

#include <gtest/gtest.h>

#include <random>

#include "solar/env.hpp"
#include "support.hpp"

using namespace solar;
using solar::test::G;

namespace {

const Grid kInput = G({{1, 2}, {3, 4}});
const Grid kAnswer = G({{3, 4}, {1, 2}, {1, 2}, {3, 4}});

std::vector<Action> gold_2x2() {
  return {{Op::ResizeGrid, {0, 0, 3, 1}},
          {Op::CopyO, {0, 0, 1, 1}},
          {Op::Paste, {2, 0, 1, 1}},
          {Op::FlipV, {0, 0, 1, 1}},
          submit_action()};
}

}  // namespace

TEST(OpTable, CanonicalCodes) {
  EXPECT_EQ(op_code(color_op(0)), 0);
  EXPECT_EQ(op_code(color_op(9)), 9);
  EXPECT_EQ(op_code(flood_fill_op(0)), 10);
  EXPECT_EQ(op_code(flood_fill_op(9)), 19);
  EXPECT_EQ(op_code(Op::MoveUp), 20);
  EXPECT_EQ(op_code(Op::MoveRight), 23);
  EXPECT_EQ(op_code(Op::Rotate90), 24);
  EXPECT_EQ(op_code(Op::Rotate270), 25);
  EXPECT_EQ(op_code(Op::FlipH), 26);
  EXPECT_EQ(op_code(Op::FlipV), 27);
  EXPECT_EQ(op_code(Op::CopyI), 28);
  EXPECT_EQ(op_code(Op::CopyO), 29);
  EXPECT_EQ(op_code(Op::Paste), 30);
  EXPECT_EQ(op_code(Op::CropGrid), 31);
  EXPECT_EQ(op_code(Op::ResetGrid), 32);
  EXPECT_EQ(op_code(Op::ResizeGrid), 33);
  EXPECT_EQ(op_code(Op::Submit), 34);
  EXPECT_EQ(op_code(Op::None), 35);
}

TEST(Reset, Examples) {
  const EnvState s = reset(kInput, kAnswer);
  EXPECT_EQ(s.current, kInput);
  EXPECT_EQ(s.input, kInput);
  EXPECT_FALSE(s.clipboard.has_value());
  EXPECT_EQ(s.step_index, 0);
  EXPECT_FALSE(s.terminated);

  const EnvState same = reset(kInput, kInput);
  const StepResult r = step(same, submit_action(), kInput);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.terminated);

  try {
    reset(Grid(2, 2, kPadColor), kAnswer);
    FAIL();
  } catch (const EnvError& e) {
    EXPECT_EQ(e.kind(), EnvError::Kind::InvalidGrid);
  }
  EXPECT_THROW(reset(Grid(11, 2, 0), kAnswer), EnvError);
}

TEST(Step, SubmitRewards) {
  const EnvState at_answer = reset(kAnswer, kAnswer);
  const StepResult ok = step(at_answer, submit_action(), kAnswer);
  EXPECT_EQ(ok.reward, 1.0);
  EXPECT_TRUE(ok.terminated);
  EXPECT_EQ(ok.next_state.current, kAnswer);

  const StepResult wrong = step(reset(kInput, kAnswer), submit_action(), kAnswer);
  EXPECT_EQ(wrong.reward, 0.0);
  EXPECT_TRUE(wrong.terminated);
  try {
    step(wrong.next_state, submit_action(), kAnswer);
    FAIL();
  } catch (const EnvError& e) {
    EXPECT_EQ(e.kind(), EnvError::Kind::EpisodeTerminated);
  }
}

TEST(Step, MultipleSubmitAttemptsWhenConfigured) {
  const EnvState s = reset(kInput, kAnswer, EnvConfig{{10, 10}, 3});
  StepResult r = step(s, submit_action(), kAnswer);
  EXPECT_FALSE(r.terminated);
  r = step(r.next_state, submit_action(), kAnswer);
  EXPECT_FALSE(r.terminated);
  r = step(r.next_state, submit_action(), kAnswer);
  EXPECT_TRUE(r.terminated);
  EXPECT_EQ(r.reward, 0.0);
}

TEST(Step, PasteWithoutClipboardIsInvalid) {
  const EnvState s = reset(Grid(6, 3, 0), Grid(6, 3, 0));
  EXPECT_TRUE(validate_action(s, {Op::Paste, {3, 0, 2, 2}}).has_value());
  try {
    step(s, {Op::Paste, {3, 0, 2, 2}}, Grid(6, 3, 0));
    FAIL();
  } catch (const EnvError& e) {
    EXPECT_EQ(e.kind(), EnvError::Kind::InvalidAction);
  }
}

TEST(Step, NonSubmitOpsGiveZeroRewardAndKeepInput) {
  std::mt19937 gen(3);
  EnvState s = reset(kInput, kAnswer);
  const Grid input = s.input;
  for (int i = 0; i < 200; ++i) {
    const auto op = static_cast<Op>(gen() % 34);
    const Action a{op, {static_cast<int>(gen() % 3), static_cast<int>(gen() % 3), static_cast<int>(gen() % 3),
                        static_cast<int>(gen() % 3)}};
    if (validate_action(s, a)) continue;
    const StepResult r = step(s, a, kAnswer);
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_FALSE(r.terminated);
    EXPECT_EQ(r.next_state.input, input);
    s = r.next_state;
  }
}

TEST(Step, ColorCopyCropReset) {
  EnvState s = reset(kInput, kAnswer);
  s = step(s, {color_op(7), {0, 0, 0, 1}}, kAnswer).next_state;
  EXPECT_EQ(s.current, G({{7, 7}, {3, 4}}));
  s = step(s, {Op::CopyI, {0, 0, 0, 1}}, kAnswer).next_state;
  EXPECT_EQ(*s.clipboard, G({{1, 2}}));
  s = step(s, {Op::CropGrid, {1, 0, 0, 1}}, kAnswer).next_state;
  EXPECT_EQ(s.current, G({{3, 4}}));
  s = step(s, {Op::ResetGrid, {}}, kAnswer).next_state;
  EXPECT_EQ(s.current, kInput);
  s = step(s, {flood_fill_op(5), {1, 1, 0, 0}}, kAnswer).next_state;
  EXPECT_EQ(s.current, G({{1, 2}, {3, 5}}));
  EXPECT_EQ(s.step_index, 5);
}

TEST(ValidateAction, Examples) {
  const EnvState s2 = reset(kInput, kAnswer);
  EXPECT_FALSE(validate_action(s2, {Op::FlipV, {0, 0, 1, 1}}).has_value());
  EXPECT_TRUE(validate_action(s2, {Op::FlipV, {0, 0, 2, 1}}).has_value());

  const EnvState s4 = reset(G({{1, 2}, {3, 4}, {5, 6}, {7, 8}}), kAnswer);
  EXPECT_FALSE(validate_action(s4, {Op::Rotate90, {0, 0, 1, 1}}).has_value());
  const auto bad = validate_action(s4, {Op::Rotate90, {0, 0, 3, 1}});
  ASSERT_TRUE(bad.has_value());
  EXPECT_NE(bad->detail.find("non-square"), std::string::npos);

  EXPECT_TRUE(validate_action(s2, none_action()).has_value());
  EXPECT_TRUE(validate_action(s2, {static_cast<Op>(36), {}}).has_value());
  EXPECT_TRUE(validate_action(s2, {Op::ResizeGrid, {9, 0, 1, 0}}).has_value());
  EXPECT_FALSE(validate_action(s2, {Op::ResizeGrid, {9, 9, 0, 0}}).has_value());
  EXPECT_TRUE(validate_action(s2, {Op::FlipV, {0, 0, -1, 0}}).has_value());
  EXPECT_FALSE(validate_action(s2, {Op::Submit, {7, 7, 7, 7}}).has_value());
}

TEST(Replay, GoldMirrorOnTwoByTwo) {
  const ReplayOutcome out = replay(kInput, kAnswer, gold_2x2());
  ASSERT_TRUE(out.ok());
  ASSERT_EQ(out.steps.size(), 5u);
  EXPECT_EQ(out.steps.back().next_state.current, kAnswer);
  EXPECT_EQ(out.steps.back().reward, 1.0);
  EXPECT_TRUE(out.terminated());
}

TEST(Replay, EmptyAndBrokenSequences) {
  EXPECT_TRUE(replay(kInput, kAnswer, {}).steps.empty());

  auto actions = gold_2x2();
  actions[2] = {Op::FlipH, {2, 0, 1, 1}};
  const ReplayOutcome wrong = replay(kInput, kAnswer, actions);
  ASSERT_TRUE(wrong.ok());
  EXPECT_EQ(wrong.steps.back().reward, 0.0);

  actions = gold_2x2();
  std::swap(actions[1], actions[2]);
  const ReplayOutcome invalid = replay(kInput, kAnswer, actions);
  ASSERT_TRUE(invalid.failed_index.has_value());
  EXPECT_EQ(*invalid.failed_index, 1u);

  actions = gold_2x2();
  actions.push_back(submit_action());
  EXPECT_EQ(replay(kInput, kAnswer, actions).trailing_actions, 1u);
}

TEST(Replay, DeterministicAcrossRuns) {
  std::mt19937 gen(17);
  std::vector<Action> actions;
  for (int i = 0; i < 50; ++i) {
    actions.push_back({static_cast<Op>(gen() % 34),
                       {static_cast<int>(gen() % 2), static_cast<int>(gen() % 2), static_cast<int>(gen() % 2),
                        static_cast<int>(gen() % 2)}});
  }
  const ReplayOutcome a = replay(kInput, kAnswer, actions);
  const ReplayOutcome b = replay(kInput, kAnswer, actions);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].next_state, b.steps[i].next_state);
    EXPECT_EQ(a.steps[i].reward, b.steps[i].reward);
  }
  EXPECT_EQ(a.failed_index, b.failed_index);
}

TEST(EnvWrapper, TracksState) {
  Env env(kInput, kAnswer);
  for (const Action& a : gold_2x2()) {
    ASSERT_FALSE(env.validate(a).has_value());
    env.step(a);
  }
  EXPECT_TRUE(env.state().terminated);
  EXPECT_EQ(env.state().current, env.answer());
  EXPECT_TRUE(env.validate(submit_action()).has_value());
}

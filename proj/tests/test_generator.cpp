#include <gtest/gtest.h>

#include <algorithm>

#include "solar/generator.hpp"
#include "support.hpp"

using namespace solar;
using solar::test::G;

namespace {

ProblemInstance mirror_problem(const Grid& in) {
  ProblemInstance p;
  p.demonstrations = {{in, mirror_rule(in)}, {in, mirror_rule(in)}, {in, mirror_rule(in)}};
  p.test_input = in;
  p.test_output = mirror_rule(in);
  return p;
}

Episode assemble_ok(const std::vector<Action>& actions, TrajectoryKind kind = TrajectoryKind::NonOptimal,
                    std::size_t episode_index = 1) {
  PlannedItem item;
  item.planned.problem = mirror_problem(G({{1, 2}, {3, 4}}));
  item.planned.kind = kind;
  item.planned.trajectory_id = make_trajectory_id(Task::Mirror, 0, episode_index, kind);
  for (const Action& a : actions) item.planned.push(a);
  item.task = Task::Mirror;
  item.episode_index = episode_index;
  auto r = assemble_episode(item, EnvConfig{});
  EXPECT_TRUE(std::holds_alternative<Episode>(r));
  return std::get<Episode>(r);
}

std::vector<Action> seven_steps() {
  const Selection all{0, 0, 1, 1};
  return {{Op::FlipV, all},     {Op::FlipV, all},      {Op::FlipH, all}, {Op::FlipH, all},
          {Op::Rotate90, all},  {Op::Rotate270, all},  submit_action()};
}

GenerationResult small_run(Task task, std::size_t problems, unsigned jobs = 1, std::uint64_t seed = 7) {
  TaskParams params;
  params.rng_seed = seed;
  return generate(task, params, GenerateOptions{problems, 10, 1, jobs});
}

}  // namespace

TEST(Generate, CompositionAndOrdering) {
  const GenerationResult r = small_run(Task::Mirror, 20);
  EXPECT_TRUE(r.quarantine.empty());
  ASSERT_EQ(r.episodes.size(), 200u);
  std::size_t gold = 0;
  for (std::size_t k = 0; k < r.episodes.size(); ++k) {
    const Episode& ep = r.episodes[k];
    EXPECT_EQ(ep.problem_index, k / 10);
    EXPECT_EQ(ep.episode_index, k % 10);
    EXPECT_EQ(ep.gold(), ep.episode_index == 0);
    EXPECT_EQ(ep.trajectory_id, make_trajectory_id(Task::Mirror, ep.problem_index, ep.episode_index, ep.kind));
    gold += ep.gold() ? 1 : 0;
  }
  EXPECT_EQ(gold, 20u);
}

TEST(Generate, SingleGoldEpisode) {
  TaskParams params;
  params.rng_seed = 1;
  const GenerationResult r = generate(Task::Mirror, params, GenerateOptions{1, 1, 1, 1});
  ASSERT_EQ(r.episodes.size(), 1u);
  EXPECT_TRUE(r.quarantine.empty());
  EXPECT_TRUE(r.episodes[0].gold());
  EXPECT_EQ(r.episodes[0].steps.size(), 5u);
}

TEST(Generate, RejectsTooManyGold) {
  EXPECT_THROW(generate(Task::Mirror, TaskParams{}, GenerateOptions{1, 2, 3, 1}), std::invalid_argument);
}

TEST(Generate, JobsDoNotChangeOutput) {
  for (Task task : {Task::Mirror, Task::Diagonal}) {
    const GenerationResult a = small_run(task, 30, 1);
    const GenerationResult b = small_run(task, 30, 4);
    EXPECT_EQ(a.episodes, b.episodes);
  }
}

TEST(Generate, StoredStepsHoldPreActionState) {
  const Episode ep = assemble_ok(seven_steps());
  ASSERT_EQ(ep.steps.size(), 7u);
  EXPECT_EQ(ep.steps[0].current, ep.test_input);
  EXPECT_EQ(ep.steps[1].current, G({{3, 4}, {1, 2}}));
  EXPECT_TRUE(ep.steps.back().terminated);
  EXPECT_EQ(ep.steps.back().reward, 0.0);
}

TEST(Assemble, QuarantinesOutOfBoundsPlan) {
  const Grid in = G({{1, 2}, {3, 4}});
  std::vector<PlannedItem> items(2);
  for (std::size_t e = 0; e < 2; ++e) {
    items[e].planned = mirror_gold_trajectory(mirror_problem(in), make_trajectory_id(Task::Mirror, 0, e, TrajectoryKind::GoldStandard));
    items[e].episode_index = e;
  }
  items[1].planned.selections[1] = {0, 0, 5, 1};
  const GenerationResult r = assemble(items, EnvConfig{});
  ASSERT_EQ(r.episodes.size(), 1u);
  ASSERT_EQ(r.quarantine.size(), 1u);
  EXPECT_EQ(r.quarantine[0].failed_step, std::optional<std::size_t>(1));
  EXPECT_EQ(r.quarantine[0].planned.selections[1], (Selection{0, 0, 5, 1}));
  EXPECT_NE(r.quarantine[0].reason.find("out of bounds"), std::string::npos);
}

TEST(Assemble, QuarantinesWrongGoldAndUnterminatedPlans) {
  PlannedItem wrong;
  wrong.planned.problem = mirror_problem(G({{1, 2}, {3, 4}}));
  wrong.planned.trajectory_id = "mirror_0_0_gold-standard";
  wrong.planned.push(submit_action());
  auto r = assemble_episode(wrong, EnvConfig{});
  ASSERT_TRUE(std::holds_alternative<QuarantineRecord>(r));

  PlannedItem open = wrong;
  open.planned.operations = {Op::FlipV};
  open.planned.selections = {{0, 0, 1, 1}};
  r = assemble_episode(open, EnvConfig{});
  ASSERT_TRUE(std::holds_alternative<QuarantineRecord>(r));
  EXPECT_NE(std::get<QuarantineRecord>(r).reason.find("termination"), std::string::npos);
}

TEST(Segment, FiveStepGoldGivesOneUnpaddedSegment) {
  const Episode ep = assemble_ok(mirror_gold_actions(G({{1, 2}, {3, 4}})), TrajectoryKind::GoldStandard, 0);
  const auto segs = segment_episode(ep, 5, {10, 10});
  ASSERT_EQ(segs.size(), 1u);
  for (const Action& a : segs[0].actions) EXPECT_NE(a.op, Op::None);
  EXPECT_EQ(segs[0].rewards.back(), 1.0);
}

TEST(Segment, SevenStepsGiveTwoSegmentsWithThreePads) {
  const Episode ep = assemble_ok(seven_steps());
  const auto segs = segment_episode(ep, 5, {10, 10});
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].start_t, 0u);
  EXPECT_EQ(segs[1].start_t, 5u);
  const Grid pad(10, 10, kPadColor);
  for (std::size_t k = 0; k < 5; ++k) {
    const bool padded = k >= 2;
    EXPECT_EQ(segs[1].actions[k].op == Op::None, padded) << k;
    if (!padded) continue;
    EXPECT_EQ(op_code(segs[1].actions[k].op), 35);
    EXPECT_EQ(segs[1].actions[k].sel, Selection{});
    EXPECT_EQ(segs[1].states[k].input, pad);
    EXPECT_EQ(segs[1].states[k].current, pad);
    EXPECT_EQ(segs[1].states[k].clipboard, std::optional<Grid>(pad));
    EXPECT_EQ(segs[1].rewards[k], 0.0);
    EXPECT_TRUE(segs[1].terminateds[k]);
  }
  EXPECT_EQ(reconstruct_steps(segs), ep.steps);
}

TEST(Segment, LoneSubmitGivesFourPads) {
  const Episode ep = assemble_ok({submit_action()});
  const auto segs = segment_episode(ep, 5, {10, 10});
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(std::count_if(segs[0].actions.begin(), segs[0].actions.end(), [](const Action& a) { return a.op == Op::None; }), 4);
}

TEST(Segment, CountsAndReconstructionOverGeneratedData) {
  const GenerationResult r = small_run(Task::Mirror, 30);
  for (std::size_t h : {1u, 2u, 3u, 5u, 7u, 13u}) {
    const auto segs = segment_dataset(r.episodes, h);
    std::size_t expected = 0;
    std::size_t pos = 0;
    for (const Episode& ep : r.episodes) {
      const std::size_t n = (ep.steps.size() + h - 1) / h;
      expected += n;
      std::vector<Segment> mine(segs.begin() + static_cast<long>(pos), segs.begin() + static_cast<long>(pos + n));
      pos += n;
      for (const Segment& s : mine) {
        EXPECT_EQ(s.trajectory_id, ep.trajectory_id);
        EXPECT_EQ(s.horizon(), h);
        EXPECT_EQ(s.states[0].current, ep.steps[s.start_t].current);
        EXPECT_EQ(s.states[0].input, ep.test_input);
      }
      EXPECT_EQ(reconstruct_steps(mine), ep.steps);
    }
    EXPECT_EQ(segs.size(), expected);
  }
  std::size_t total_steps = 0;
  for (const Episode& ep : r.episodes) total_steps += ep.steps.size();
  EXPECT_EQ(segment_dataset(r.episodes, 1).size(), total_steps);
  EXPECT_THROW(segment_dataset(r.episodes, 0), std::invalid_argument);
}

TEST(Verify, FreshDataIsClean) {
  for (Task task : {Task::Mirror, Task::Diagonal}) {
    const GenerationResult r = small_run(task, 25);
    const VerifyReport rep = verify_dataset(r.episodes, DatasetExpectations{25, 10, 1, EnvConfig{}});
    EXPECT_TRUE(rep.ok()) << rep.violations.front().message;
    EXPECT_EQ(rep.episodes_checked, 250u);
  }
  EXPECT_TRUE(verify_dataset({}).ok());
  EXPECT_EQ(verify_dataset({}).episodes_checked, 0u);
}

TEST(Verify, EachMutationNamesExactlyTheMutatedEpisode) {
  const GenerationResult base = small_run(Task::Mirror, 10);
  using Mutator = void (*)(Episode&);
  const std::vector<std::pair<const char*, Mutator>> mutations{
      {"reward bit", [](Episode& e) { e.steps.back().reward = e.steps.back().reward == 1.0 ? 0.0 : 1.0; }},
      {"early reward", [](Episode& e) { e.steps.front().reward = 1.0; }},
      {"terminated flag", [](Episode& e) { e.steps.front().terminated = true; }},
      {"current cell", [](Episode& e) { e.steps.back().current.at(0, 0) = (e.steps.back().current.at(0, 0) + 1) % 10; }},
      {"clipboard", [](Episode& e) { e.steps.back().clipboard = G({{9}}); }},
      {"action selection", [](Episode& e) { e.steps.front().action.sel.w += 1; }},
      {"test output", [](Episode& e) { e.test_output.at(0, 0) = (e.test_output.at(0, 0) + 1) % 10; }},
      {"demonstration", [](Episode& e) { e.demonstrations[1].output.at(0, 0) = (e.demonstrations[1].output.at(0, 0) + 1) % 10; }},
      {"dropped step", [](Episode& e) { e.steps.pop_back(); }},
      {"id", [](Episode& e) { e.trajectory_id = "mirror_99_0_gold-standard"; }},
  };
  for (std::size_t victim : {0u, 13u, 57u}) {
    for (const auto& [name, mutate] : mutations) {
      std::vector<Episode> eps = base.episodes;
      mutate(eps[victim]);
      const VerifyReport rep = verify_dataset(eps);
      ASSERT_EQ(rep.violations.size(), 1u) << name << " on " << victim;
      const std::string expect_id = std::string(name) == "id" ? eps[victim].trajectory_id : base.episodes[victim].trajectory_id;
      EXPECT_EQ(rep.violations[0].trajectory_id, expect_id) << name;
    }
  }
}

TEST(Verify, CompositionChecks) {
  GenerationResult r = small_run(Task::Mirror, 5);
  r.episodes.erase(r.episodes.begin() + 3);
  const VerifyReport rep = verify_dataset(r.episodes, DatasetExpectations{5, 10, 1, EnvConfig{}});
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].trajectory_id, "problem_0");

  GenerationResult d = small_run(Task::Mirror, 5);
  d.episodes.push_back(d.episodes.back());
  EXPECT_FALSE(verify_dataset(d.episodes).ok());
}

TEST(Verify, SegmentsMustMatchEpisodes) {
  const GenerationResult r = small_run(Task::Mirror, 5);
  std::vector<Segment> segs = segment_dataset(r.episodes, 5);
  VerifyReport clean;
  verify_segments(r.episodes, segs, 5, {10, 10}, clean);
  EXPECT_TRUE(clean.ok());
  EXPECT_EQ(clean.segments_checked, segs.size());

  segs[4].rewards[0] = 1.0;
  VerifyReport bad;
  verify_segments(r.episodes, segs, 5, {10, 10}, bad);
  ASSERT_EQ(bad.violations.size(), 1u);
  EXPECT_EQ(bad.violations[0].trajectory_id, segs[4].trajectory_id);
}

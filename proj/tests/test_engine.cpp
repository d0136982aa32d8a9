// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "chai/common/error.hpp"
#include "chai/engine/denoiser.hpp"
#include "chai/engine/flow_schedule.hpp"
#include "chai/model/token_grid.hpp"
#include "chai/text/embedding.hpp"

using namespace chai;
using namespace chai::engine;

namespace {

const text::Embedding& party_prompt() {
  static const text::Embedding e = text::embed_text("a party on a beach at sunset", text::kDefaultEmbeddingDim);
  return e;
}

StepLatents pick(const StepLatents& all, std::initializer_list<int> steps) {
  StepLatents out;
  for (int k : steps) out.emplace(k, all.at(k));
  return out;
}

double mean(std::vector<double>::const_iterator b, std::vector<double>::const_iterator e) {
  return std::accumulate(b, e, 0.0) / static_cast<double>(e - b);
}

}  // namespace

TEST(FlowSchedule, UniformGrid) {
  const auto eight = make_flow_schedule(8);
  EXPECT_EQ(eight.step_size, 0.125);
  EXPECT_GT(eight.step_size, make_flow_schedule(30).step_size);
  EXPECT_EQ(make_flow_schedule(1).timesteps, std::vector<double>{1.0});
  const auto thirty = make_flow_schedule(30);
  ASSERT_EQ(thirty.timesteps.size(), 30u);
  EXPECT_EQ(thirty.timesteps.front(), 1.0);
  for (std::size_t i = 1; i < thirty.timesteps.size(); ++i) EXPECT_LT(thirty.timesteps[i], thirty.timesteps[i - 1]);
  EXPECT_THROW(make_flow_schedule(0), std::invalid_argument);
  EXPECT_THROW(make_flow_schedule(-3), std::invalid_argument);
}

TEST(Denoise, FullRunCapturesStepsTwoToFour) {
  const auto r = denoise(DenoiseConfig::full({}, 5), party_prompt());
  ASSERT_TRUE(r.captured.has_value());
  std::vector<int> keys;
  for (const auto& [k, latent] : *r.captured) {
    keys.push_back(k);
    EXPECT_EQ(latent.step_index(), k);
    EXPECT_EQ(latent.shape(), ModelDims{}.latent_shape());
  }
  EXPECT_EQ(keys, (std::vector<int>{2, 3, 4}));
  EXPECT_TRUE(r.cache_invocations.empty());
  EXPECT_EQ(r.steps_executed, 30);
  ASSERT_EQ(r.step_deltas.size(), 30u);
  for (double d : r.step_deltas) EXPECT_GE(d, 0.0);
  EXPECT_EQ(r.final_latent.step_index(), 30);
}

TEST(Denoise, EarlyStepsChangeMoreThanLateSteps) {
  for (std::uint64_t seed : {0ull, 1ull, 5ull, 42ull}) {
    const auto& d = denoise(DenoiseConfig::full({}, seed), party_prompt()).step_deltas;
    EXPECT_GT(mean(d.begin(), d.begin() + 3), mean(d.end() - 3, d.end())) << "seed " << seed;
  }
}

TEST(Denoise, FastRunInvokesCacheAtScheduledSteps) {
  const auto full = denoise(DenoiseConfig::full({}, 5), party_prompt());
  const auto fast = denoise(DenoiseConfig::fast({}, 5), party_prompt(), &*full.captured);
  EXPECT_EQ(fast.cache_invocations, (std::vector<std::pair<int, int>>{{2, 0}, {3, 0}, {4, 0}}));
  EXPECT_EQ(fast.steps_executed, 8);
  EXPECT_FALSE(fast.captured.has_value());
  EXPECT_EQ(fast.final_latent.step_index(), 8);
}

TEST(Denoise, FastStepsChangeMoreThanFullSteps) {
  const auto full = denoise(DenoiseConfig::full({}, 5), party_prompt());
  auto plain = DenoiseConfig::fast({}, 5);
  plain.schedule = model::Schedule::disabled();
  const auto fast = denoise(plain, party_prompt());
  EXPECT_GT(fast.step_deltas.front(), full.step_deltas.front());
}

TEST(Denoise, DisabledScheduleIsPlainShortRun) {
  auto cfg = DenoiseConfig::fast({}, 5);
  cfg.schedule = model::Schedule::disabled();
  const auto r = denoise(cfg, party_prompt());
  EXPECT_TRUE(r.cache_invocations.empty());
  EXPECT_EQ(r.steps_executed, 8);
}

TEST(Denoise, ErrorsAreLoud) {
  const auto full = denoise(DenoiseConfig::full({}, 5), party_prompt());
  EXPECT_THROW(denoise(DenoiseConfig::fast({}, 5), party_prompt()), std::invalid_argument);
  EXPECT_THROW(denoise(DenoiseConfig::full({}, 5), party_prompt(), &*full.captured), std::invalid_argument);

  auto missing = pick(*full.captured, {2, 4});
  EXPECT_THROW(denoise(DenoiseConfig::fast({}, 5), party_prompt(), &missing), std::invalid_argument);

  auto relabeled = *full.captured;
  relabeled.insert_or_assign(3, full.captured->at(2));
  EXPECT_THROW(denoise(DenoiseConfig::fast({}, 5), party_prompt(), &relabeled), std::invalid_argument);

  auto wrong_shape = *full.captured;
  wrong_shape.insert_or_assign(3, cache::Latent::zeros({4, 8, 32}, 3));
  EXPECT_THROW(denoise(DenoiseConfig::fast({}, 5), party_prompt(), &wrong_shape), DimensionError);

  EXPECT_THROW(denoise(DenoiseConfig::full({}, 5), text::embed_text("x", 64)), DimensionError);
  auto few = DenoiseConfig::full({}, 5);
  few.n_steps = 3;
  EXPECT_THROW(denoise(few, party_prompt()), std::invalid_argument);
  ModelDims bad;
  bad.n_heads = 5;
  EXPECT_THROW(Denoiser(bad, 1), std::invalid_argument);
  const Denoiser net({}, 5);
  ModelDims other;
  other.frames = 2;
  EXPECT_THROW(net.run(DenoiseConfig::full(other, 5), party_prompt()), DimensionError);
}

TEST(Denoise, DeterministicForFixedSeed) {
  const auto a = denoise(DenoiseConfig::full({}, 9), party_prompt());
  const auto b = denoise(DenoiseConfig::full({}, 9), party_prompt());
  EXPECT_EQ(a.final_latent, b.final_latent);
  EXPECT_EQ(a.step_deltas, b.step_deltas);
  EXPECT_EQ(*a.captured, *b.captured);
  EXPECT_NE(a.final_latent, denoise(DenoiseConfig::full({}, 10), party_prompt()).final_latent);
  const auto fa = denoise(DenoiseConfig::fast({}, 9), party_prompt(), &*a.captured);
  const auto fb = denoise(DenoiseConfig::fast({}, 9), party_prompt(), &*a.captured);
  EXPECT_EQ(fa.final_latent, fb.final_latent);
}

TEST(Denoise, TwoPassSelfReductionFull) {
  for (std::uint64_t seed : {0ull, 3ull, 17ull}) {
    auto traced = DenoiseConfig::full({}, seed);
    traced.trace_block_inputs = true;
    const auto full = denoise(traced, party_prompt());
    ASSERT_EQ(full.block_inputs.size(), 30u);
    EXPECT_EQ(full.block_inputs.at(3), full.captured->at(3));

    auto cfg = DenoiseConfig::fast({}, seed);
    cfg.n_steps = 30;
    const auto own = pick(full.block_inputs, {2, 3, 4});
    const auto replayed = denoise(cfg, party_prompt(), &own);
    EXPECT_EQ(replayed.cache_invocations.size(), 3u);
    EXPECT_EQ(replayed.final_latent, full.final_latent) << "seed " << seed;
  }
}

TEST(Denoise, TwoPassSelfReductionFast) {
  auto plain = DenoiseConfig::fast({}, 4);
  plain.schedule = model::Schedule::disabled();
  plain.trace_block_inputs = true;
  const auto first = denoise(plain, party_prompt());
  auto cfg = DenoiseConfig::fast({}, 4);
  const auto own = pick(first.block_inputs, {2, 3, 4});
  const auto second = denoise(cfg, party_prompt(), &own);
  EXPECT_EQ(second.final_latent, first.final_latent);
  EXPECT_EQ(second.step_deltas, first.step_deltas);
}

TEST(Denoise, ForeignCacheChangesTheResult) {
  const auto donor = denoise(DenoiseConfig::full({}, 5), text::embed_text("a dog in a park", 256));
  auto plain = DenoiseConfig::fast({}, 5);
  plain.schedule = model::Schedule::disabled();
  const auto base = denoise(plain, party_prompt());
  const auto cached = denoise(DenoiseConfig::fast({}, 5), party_prompt(), &*donor.captured);
  EXPECT_GT(model::max_abs_diff(base.final_latent.data(), cached.final_latent.data()), 1e-6f);
}

TEST(Substitution, SimilarityBands) {
  EXPECT_EQ(substitution_start_step(0.95f), 25);
  EXPECT_EQ(substitution_start_step(0.9f), 25);
  EXPECT_EQ(substitution_start_step(0.85f), 20);
  EXPECT_EQ(substitution_start_step(0.7f), 15);
  EXPECT_EQ(substitution_start_step(0.65f), 10);
  EXPECT_EQ(substitution_start_step(0.3f), 5);
  EXPECT_EQ(substitution_start_step(-1.0f), 5);
  const std::vector<SubstitutionBand> coarse = {{0.5f, 15}};
  EXPECT_EQ(substitution_start_step(0.55f, coarse), 15);
  EXPECT_EQ(substitution_start_step(0.45f, coarse), 5);
  const std::vector<SubstitutionBand> bad = {{0.5f, 12}};
  EXPECT_THROW(substitution_start_step(0.9f, bad), std::invalid_argument);
}

TEST(Substitution, SkipsStepsAndMatchesContinuation) {
  auto cfg = DenoiseConfig::full({}, 8);
  cfg.snapshot_steps = {5, 10, 15, 20, 25};
  const auto full = denoise(cfg, party_prompt());
  ASSERT_EQ(full.snapshots.size(), 5u);
  for (int k : kSubstitutionSteps) {
    const auto r = nirvana_substitute_start(full.snapshots.at(k), k, DenoiseConfig::full({}, 8), party_prompt());
    EXPECT_EQ(r.steps_executed, 30 - k);
    EXPECT_EQ(r.final_latent.shape(), ModelDims{}.latent_shape());
    EXPECT_EQ(r.final_latent, full.final_latent) << "K=" << k;
  }
  EXPECT_EQ(nirvana_substitute_start(full.snapshots.at(25), 25, DenoiseConfig::full({}, 8), party_prompt())
                .steps_executed,
            5);
}

TEST(Substitution, RejectsBadStartPoints) {
  auto cfg = DenoiseConfig::full({}, 8);
  cfg.snapshot_steps = {10};
  const auto full = denoise(cfg, party_prompt());
  const auto& at10 = full.snapshots.at(10);
  EXPECT_THROW(nirvana_substitute_start(at10, 15, DenoiseConfig::full({}, 8), party_prompt()), std::invalid_argument);
  EXPECT_THROW(nirvana_substitute_start(at10, 7, DenoiseConfig::full({}, 8), party_prompt()), std::invalid_argument);
  EXPECT_THROW(nirvana_substitute_start(at10, 10, DenoiseConfig::fast({}, 8), party_prompt()), std::invalid_argument);
}

TEST(Denoise, StepDeltaCsv) {
  const auto r = denoise(DenoiseConfig::full({}, 1), party_prompt());
  std::ostringstream out;
  write_step_deltas_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,delta");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.substr(0, line.find(',')), std::to_string(rows));
    EXPECT_DOUBLE_EQ(std::stod(line.substr(line.find(',') + 1)), r.step_deltas[rows - 1]);
  }
  EXPECT_EQ(rows, 30);
  EXPECT_EQ(&feature_distance_trace(r), &r.step_deltas);
}

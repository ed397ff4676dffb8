// Copyright 2026 The Prefchat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "prefchat/losses.h"
#include "prefchat/trainer.h"
#include "test_util.h"

namespace prefchat {
namespace {

TEST(GradientCheckTest, AnalyticGradientsAgreeOnRandomModels) {
  for (uint64_t seed : {1u, 2u, 3u, 4u}) {
    const GradientCheckCase c = RandomGradientCheckCase(seed);
    GradientCheckOptions options;
    options.samples = 150;
    options.seed = seed;
    const GradientCheckResult r = GradientCheck(c.model, c.quadruple, 1e-4, options);
    EXPECT_EQ(r.checked, 150u);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " index " << r.worst_index;
  }
}

TEST(GradientCheckTest, PerTokenMeanVariantAgrees) {
  const GradientCheckCase c = RandomGradientCheckCase(17);
  GradientCheckOptions options;
  options.samples = 100;
  options.loss.nll_per_token_mean = true;
  EXPECT_LT(GradientCheck(c.model, c.quadruple, 1e-4, options).max_relative_error, 1e-4);
}

TEST(GradientCheckTest, ZeroedGradientIsCaught) {
  const GradientCheckCase c = RandomGradientCheckCase(8);
  GradientCheckOptions options;
  options.samples = 50;
  // A token-embedding entry of a character that occurs in the sample.
  const int id = c.quadruple.human.empty() ? 5 : c.model.vocabulary().Encode(
                                                     c.quadruple.human.substr(0, 1))[0];
  options.zero_gradient_index =
      c.model.layout().token_embedding + static_cast<size_t>(id) * c.model.config().d_model;
  const GradientCheckResult r = GradientCheck(c.model, c.quadruple, 1e-4, options);
  EXPECT_GT(r.max_relative_error, 1e-2);
  EXPECT_EQ(r.worst_index, *options.zero_gradient_index);
}

TEST(GradientCheckTest, DuplicateModelAndRandomTextsStayFinite) {
  GradientCheckCase c = RandomGradientCheckCase(23);
  c.quadruple.random = c.quadruple.model;
  std::vector<double> grad(c.model.parameter_count(), 0.0);
  const JointLossValue v = JointLossAndGradient<double>(c.model, c.quadruple, {}, grad);
  EXPECT_TRUE(std::isfinite(v.total));
  for (double g : grad) ASSERT_TRUE(std::isfinite(g));
  GradientCheckOptions options;
  options.samples = 80;
  EXPECT_LT(GradientCheck(c.model, c.quadruple, 1e-4, options).max_relative_error, 1e-4);
}

TEST(GradientCheckTest, CasesAreReproducible) {
  const GradientCheckCase a = RandomGradientCheckCase(99), b = RandomGradientCheckCase(99);
  EXPECT_EQ(a.quadruple, b.quadruple);
  EXPECT_EQ(a.model.config(), b.model.config());
  EXPECT_TRUE(std::equal(a.model.parameters().begin(), a.model.parameters().end(),
                         b.model.parameters().begin()));
}

TEST(GradientCheckTest, FloatGradientTracksDouble) {
  const GradientCheckCase c = RandomGradientCheckCase(31);
  const Model f = c.model.Cast<float>();
  std::vector<double> gd(c.model.parameter_count(), 0.0);
  std::vector<float> gf(f.parameter_count(), 0.f);
  JointLossAndGradient<double>(c.model, c.quadruple, {}, gd);
  JointLossAndGradient<float>(f, c.quadruple, {}, gf);
  double num = 0, den = 0;
  for (size_t i = 0; i < gd.size(); ++i) {
    num += (gd[i] - gf[i]) * (gd[i] - gf[i]);
    den += gd[i] * gd[i];
  }
  EXPECT_LT(std::sqrt(num / den), 1e-4);
}

}  // namespace
}  // namespace prefchat

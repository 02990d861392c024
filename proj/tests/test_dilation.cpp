/*
Copyright 2026 The qpnet Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "qpnet/dilation.h"

using namespace qpnet;

TEST_CASE("pitch dilation factor arithmetic") {
  CHECK(pitch_dilation_factors({551.25}, 22050, 8)[0] == doctest::Approx(5.0));
  CHECK(pitch_dilation_factors({220.5}, 22050, 8)[0] == doctest::Approx(12.5));

  SUBCASE("halving F0 doubles the factor") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      const double f0 = 60.0 + (rng() % 4000) / 10.0;
      const double e1 = pitch_dilation_factors({f0}, 22050, 8)[0];
      const double e2 = pitch_dilation_factors({f0 / 2.0}, 22050, 8)[0];
      CHECK(e2 == doctest::Approx(2.0 * e1));
    }
  }

  SUBCASE("nonpositive F0 is rejected") {
    CHECK_THROWS_AS(pitch_dilation_factors({200.0, 0.0}, 22050, 8), std::invalid_argument);
    CHECK_THROWS_AS(pitch_dilation_factors({-5.0}, 22050, 8), std::invalid_argument);
  }
}

TEST_CASE("plans follow the doubling rule") {
  ArchitectureSpec spec;
  spec.fixed_layers = 4;
  spec.fixed_repeats = 3;

  SUBCASE("fixed dilations repeat 1,2,4,8") {
    DilationPlan plan = build_plan(spec, {});
    CHECK(plan.fixed_dilations ==
          std::vector<int64_t>{1, 2, 4, 8, 1, 2, 4, 8, 1, 2, 4, 8});
  }

  SUBCASE("constant e_t = 12.5 rounds half-up per layer") {
    spec.adaptive_layers = 4;
    spec.adaptive_repeats = 1;
    DilationPlan plan = build_plan(spec, std::vector<double>(5, 12.5));
    CHECK(plan.adaptive_dilations.size() == 4);
    CHECK(plan.adaptive_dilations[0][0] == 13);
    CHECK(plan.adaptive_dilations[1][0] == 25);
    CHECK(plan.adaptive_dilations[2][0] == 50);
    CHECK(plan.adaptive_dilations[3][0] == 100);
  }

  SUBCASE("small e_t clamps at one") {
    spec.adaptive_layers = 3;
    spec.adaptive_repeats = 1;
    DilationPlan plan = build_plan(spec, std::vector<double>(4, 0.3));
    CHECK(plan.adaptive_dilations[0][0] == 1);
    for (const auto& layer : plan.adaptive_dilations)
      for (int64_t d : layer) CHECK(d >= 1);
  }

  SUBCASE("adaptive dilations are non-decreasing within a repeat block for e >= 1") {
    spec.adaptive_layers = 4;
    spec.adaptive_repeats = 2;
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      const double e = 1.0 + (rng() % 500) / 10.0;
      DilationPlan plan = build_plan(spec, std::vector<double>(3, e));
      for (int rep = 0; rep < 2; ++rep)
        for (int k = 1; k < 4; ++k)
          CHECK(plan.adaptive_dilations[rep * 4 + k][0] >=
                plan.adaptive_dilations[rep * 4 + k - 1][0]);
    }
  }

  SUBCASE("adaptive layers demand a nonempty e_t") {
    spec.adaptive_layers = 2;
    spec.adaptive_repeats = 1;
    CHECK_THROWS_AS(build_plan(spec, {}), std::invalid_argument);
  }
}

TEST_CASE("receptive field closed form") {
  CHECK(receptive_field(wnf_spec()) == 3070);  // 1 + 3*(2^10 - 1)
  CHECK(receptive_field(wnc_spec()) == 61);    // 1 + 4*15
  CHECK(receptive_field(qpnet_spec(), 5.0) == 121);  // 1 + 3*15 + (5+10+20+40)

  SUBCASE("constant-F0 span matches the pre-rounding formula within rounding") {
    // at constant F0 the ideal adaptive span is (2^L - 1) * rate/(f0 * a)
    ArchitectureSpec spec = qpnet_spec();
    for (double f0 : {120.0, 180.0, 260.0}) {
      const double e = 22050.0 / (f0 * spec.a);
      const double ideal = 45.0 + (15.0 * e);  // fixed span + adaptive span
      const int64_t r = receptive_field(spec, e);
      CHECK(std::fabs(static_cast<double>(r - 1) - ideal) <= 2.0);  // per-layer rounding
    }
  }

  SUBCASE("e_const is required iff adaptive layers exist") {
    CHECK_THROWS_AS(receptive_field(qpnet_spec()), std::invalid_argument);
    CHECK_NOTHROW(receptive_field(wnc_spec()));
  }
}

TEST_CASE("plan report carries layer and span information") {
  ArchitectureSpec spec = desk_spec();
  DilationPlan plan = build_plan(spec, std::vector<double>(100, 10.0));
  const std::string report = plan_report(spec, plan);
  CHECK(report.find("fixed dilations: 1 2 4") != std::string::npos);
  CHECK(report.find("adaptive layer 0") != std::string::npos);
  CHECK(report.find("dependence span") != std::string::npos);
}

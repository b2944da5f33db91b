/*
 * Copyright 2026 The xfersched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"

namespace xfersched {
namespace {

using namespace testing;

TEST(ValidateDag, MinimalChainIsValid) {
  const auto report = validate_dag(chain_dag());
  EXPECT_TRUE(report.ok());
  EXPECT_TRUE(report.errors.empty());
  EXPECT_TRUE(report.warnings.empty());
}

TEST(ValidateDag, BackEdgeReportsCycle) {
  auto dag = chain_dag();
  dag.ops.at("A").deps.insert("C");
  const auto report = validate_dag(dag);
  EXPECT_FALSE(report.ok());
  EXPECT_TRUE(report.mentions("cycle"));
}

TEST(ValidateDag, SecondUpdateReportsDuplicate) {
  auto dag = chain_dag();
  dag.ops.emplace("up2", update("up2", "p", {"B"}));
  EXPECT_TRUE(validate_dag(dag).mentions("duplicate update"));
}

TEST(ValidateDag, ReportsEachStructuralViolation) {
  auto dangling = chain_dag();
  dangling.ops.at("B").deps.insert("ghost");
  EXPECT_TRUE(validate_dag(dangling).mentions("dangling dependency"));

  auto no_update = chain_dag();
  no_update.ops.erase("up");
  EXPECT_TRUE(validate_dag(no_update).mentions("missing update"));

  auto no_read = chain_dag();
  no_read.ops.erase("rp");
  no_read.ops.at("A").deps.clear();
  EXPECT_TRUE(validate_dag(no_read).mentions("no reads"));

  auto heavy_marker = chain_dag();
  heavy_marker.ops.at("up").duration_us = 3;
  EXPECT_TRUE(validate_dag(heavy_marker).mentions("marker duration"));

  auto unknown = chain_dag();
  unknown.ops.emplace("rq", read("rq", "q"));
  EXPECT_TRUE(validate_dag(unknown).mentions("unknown parameter"));

  auto empty_param = chain_dag();
  empty_param.params.at("p").size_bytes = 0;
  EXPECT_TRUE(validate_dag(empty_param).mentions("non-positive size"));
}

TEST(ValidateDag, ForwardPassUpdateIsOnlyAWarning) {
  auto dag = chain_dag();
  dag.ops.at("up").phase = Phase::ForwardPass;
  const auto report = validate_dag(dag);
  EXPECT_TRUE(report.ok());
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(report.warnings[0].find("update in forward pass"), std::string::npos);
}

TEST(SerialSchedule, ChainHasOneSchedule) {
  auto dag = make_dag({compute("A", 10), compute("B", 5, {"A"})}, {});
  const std::vector<OpId> prio{"A", "B"};
  const auto s = serial_schedule(dag, prio);
  EXPECT_EQ(s.start_us.at("A"), 0);
  EXPECT_EQ(s.end_us.at("A"), 10);
  EXPECT_EQ(s.start_us.at("B"), 10);
  EXPECT_EQ(s.end_us.at("B"), 15);
}

TEST(SerialSchedule, DiamondFollowsPriority) {
  // Hand trace: A [0,3]; C and B both ready, C listed first -> C [3,10],
  // B [10,15]; D ready after both -> [15,17].
  auto dag = make_dag({compute("A", 3), compute("B", 5, {"A"}), compute("C", 7, {"A"}), compute("D", 2, {"B", "C"})},
                      {});
  const std::vector<OpId> prio{"A", "C", "B", "D"};
  const auto s = serial_schedule(dag, prio);
  EXPECT_EQ(s.order, (std::vector<OpId>{"A", "C", "B", "D"}));
  EXPECT_EQ(s.start_us.at("C"), 3);
  EXPECT_EQ(s.start_us.at("B"), 10);
  EXPECT_EQ(s.start_us.at("D"), 15);
  EXPECT_EQ(s.makespan_us(), 17);
}

TEST(SerialSchedule, ReadinessOverridesPriority) {
  auto dag = make_dag({compute("A", 10), compute("B", 5, {"A"})}, {});
  const std::vector<OpId> prio{"B", "A"};
  const auto s = serial_schedule(dag, prio);
  EXPECT_EQ(s.order, (std::vector<OpId>{"A", "B"}));
}

TEST(SerialSchedule, RejectsBadPriorityAndCycles) {
  auto dag = make_dag({compute("A", 10), compute("B", 5, {"A"})}, {});
  const std::vector<OpId> short_prio{"A"};
  EXPECT_THROW(serial_schedule(dag, short_prio), Error);
  const std::vector<OpId> dup{"A", "A"};
  EXPECT_THROW(serial_schedule(dag, dup), Error);

  dag.ops.at("A").deps.insert("B");
  const std::vector<OpId> prio{"A", "B"};
  try {
    serial_schedule(dag, prio);
    FAIL() << "expected NotTopological";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotTopological);
  }
}

TEST(SerialSchedule, AnyPriorityYieldsTopologicalNonOverlappingOrder) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dag = random_small_dag(rng, 12, 5);
    std::vector<OpId> prio;
    for (const auto& [id, _] : dag.ops) prio.push_back(id);
    std::shuffle(prio.begin(), prio.end(), rng);
    const auto s = serial_schedule(dag, prio);
    ASSERT_TRUE(respects_edges(dag, s.order));
    std::int64_t clock = 0;
    for (const auto& id : s.order) {
      ASSERT_EQ(s.start_us.at(id), clock);
      clock += dag.ops.at(id).duration_us;
      ASSERT_EQ(s.end_us.at(id), clock);
    }
    // C is a property of the DAG, not of the order.
    EXPECT_EQ(s.makespan_us(), compute_total_us(dag));
  }
}

TEST(TransferBoundaries, WrapsReadsIntoNextIteration) {
  // F reads p at t=0, G ends at 30 and produces the update, H runs to 100.
  auto dag = make_dag({read("rp", "p"), compute("F", 20, {"rp"}), compute("G", 10, {"F"}, Phase::Backprop),
                       compute("H", 70, {"G"}, Phase::Backprop), update("up", "p", {"G"})},
                      {{"p", 64}});
  const std::vector<OpId> prio{"rp", "F", "G", "up", "H"};
  const auto b = transfer_boundaries(dag, serial_schedule(dag, prio));
  EXPECT_EQ(b.at("p").start_us, 30);
  EXPECT_EQ(b.at("p").end_us, 100);
}

TEST(TransferBoundaries, LastBackpropUpdateAndLastForwardReadGiveWidestWindow) {
  auto dag = make_dag({read("rp", "p"), read("rq", "q"), compute("F1", 10, {"rq"}), compute("F2", 10, {"F1", "rp"}),
                       compute("B2", 10, {"F2"}, Phase::Backprop), compute("B1", 10, {"B2"}, Phase::Backprop),
                       update("up", "p", {"B1"}), update("uq", "q", {"B2"})},
                      {{"p", 64}, {"q", 64}});
  const auto s = serial_schedule(dag, priority_from_order(dag, best_order(dag)));
  const auto b = transfer_boundaries(dag, s);
  // p: updated at 40, read by F2 at 10 -> [40, 50]; q: [30, 40].
  EXPECT_EQ(b.at("p").start_us, 40);
  EXPECT_EQ(b.at("p").end_us, 50);
  EXPECT_EQ(b.at("q").start_us, 30);
  EXPECT_EQ(b.at("q").end_us, 40);
  EXPECT_EQ(b.at("p").end_us - b.at("p").start_us, 10);
}

TEST(TransferBoundaries, ScheduleChangesStartBoundary) {
  // Two independent branches feeding two updates: which branch runs first
  // moves p1's start boundary.
  auto dag = make_dag({read("r1", "p1"), read("r2", "p2"), compute("F", 5, {"r1", "r2"}),
                       compute("X", 10, {"F"}, Phase::Backprop), compute("Y", 20, {"F"}, Phase::Backprop),
                       update("u1", "p1", {"X"}), update("u2", "p2", {"Y"})},
                      {{"p1", 64}, {"p2", 64}});
  const std::vector<OpId> x_first{"r1", "r2", "F", "X", "u1", "Y", "u2"};
  const std::vector<OpId> y_first{"r1", "r2", "F", "Y", "u2", "X", "u1"};
  const auto a = transfer_boundaries(dag, serial_schedule(dag, x_first));
  const auto b = transfer_boundaries(dag, serial_schedule(dag, y_first));
  EXPECT_EQ(a.at("p1").start_us, 15);
  EXPECT_EQ(b.at("p1").start_us, 35);
  EXPECT_EQ(a.at("p1").end_us, b.at("p1").end_us);
}

TEST(TransferBoundaries, StartNeverExceedsEndOnRandomSchedules) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dag = random_small_dag(rng, 12, 5);
    std::vector<OpId> prio;
    for (const auto& [id, _] : dag.ops) prio.push_back(id);
    std::shuffle(prio.begin(), prio.end(), rng);
    for (const auto& [pid, b] : transfer_boundaries(dag, serial_schedule(dag, prio))) EXPECT_LE(b.start_us, b.end_us);
  }
}

TEST(Ancestors, ChainSourceAndDiamond) {
  auto chain = make_dag({compute("A", 1), compute("B", 1, {"A"}), compute("C", 1, {"B"})}, {});
  EXPECT_EQ(ancestors(chain, "C"), (std::set<OpId>{"A", "B"}));
  EXPECT_TRUE(ancestors(chain, "A").empty());
  auto diamond = make_dag({compute("A", 1), compute("B", 1, {"A"}), compute("C", 1, {"A"}), compute("D", 1, {"B", "C"})},
                          {});
  EXPECT_EQ(ancestors(diamond, "D"), (std::set<OpId>{"A", "B", "C"}));
}

TEST(Ancestors, MatchesRecursiveOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dag = random_small_dag(rng, 12, 5);
    for (const auto& [id, _] : dag.ops) ASSERT_EQ(ancestors(dag, id), oracle_ancestors(dag, id));
  }
}

TEST(DagJson, RoundTrips) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dag = random_small_dag(rng, 12, 5);
    EXPECT_EQ(dag_from_json(dag_to_json(dag)), dag);
    EXPECT_EQ(dag_from_json(parse_json_text(dag_to_json(dag).dump(), "mem")), dag);
  }
}

TEST(DagJson, StrictSchema) {
  auto j = dag_to_json(chain_dag());
  auto unknown = j;
  unknown["ops"][0]["color"] = "red";
  auto missing = j;
  missing["ops"][0].erase("phase");
  auto dup = j;
  dup["ops"].push_back(dup["ops"][0]);
  auto bad_kind = j;
  bad_kind["ops"][0]["kind"] = "send";
  for (const auto& bad : {unknown, missing, dup, bad_kind}) {
    try {
      dag_from_json(bad);
      ADD_FAILURE() << "accepted " << bad.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse);
    }
  }
}

TEST(DagJson, MissingFileIsIoError) {
  try {
    load_dag("/nonexistent/dag.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_TRUE(e.is_input_error());
  }
}

TEST(DagJson, SyntaxErrorIsParseError) {
  try {
    parse_json_text("{\"ops\": [", "broken.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
}

}  // namespace
}  // namespace xfersched

#include <catch2/catch_amalgamated.hpp>

#include <splitflow/core_types.hpp>
#include <splitflow/testing/instances.hpp>

using namespace splitflow;

TEST_CASE("validate accepts the canonical example untouched") {
  NodeProblem p = testing::hov_interface_example();
  ValidationReport rep = validate(p);
  REQUIRE(rep.ok());
  CHECK(rep.notes.empty());
  CHECK(p.priority[0] == 0.75);
  CHECK(p.priority[1] == 0.25);
}

TEST_CASE("validate normalizes priorities and is idempotent") {
  NodeProblem p = testing::hov_interface_example();
  p.priority = {3.0, 1.0};
  ValidationReport rep = validate(p);
  REQUIRE(rep.ok());
  REQUIRE(rep.notes.size() == 1);
  CHECK(p.priority[0] == 0.75);
  CHECK(p.priority[1] == 0.25);

  NodeProblem copy = p;
  ValidationReport again = validate(p);
  REQUIRE(again.ok());
  CHECK(again.notes.empty());
  CHECK(p.priority == copy.priority);
  CHECK(p.demand == copy.demand);
}

TEST_CASE("validate rejects malformed data") {
  SECTION("negative demand") {
    NodeProblem p = testing::hov_interface_example();
    p.demand_at(0, 0) = -1.0;
    CHECK_FALSE(validate(p).ok());
  }
  SECTION("non-finite supply") {
    NodeProblem p = testing::hov_interface_example();
    p.supply[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(validate(p).ok());
  }
  SECTION("fixed ratio above one") {
    NodeProblem p = testing::hov_interface_example();
    p.set_known(0, 0, 0, 1.5);
    CHECK_FALSE(validate(p).ok());
  }
  SECTION("row of fixed ratios summing above one") {
    NodeProblem p = testing::hov_interface_example();
    p.set_known(0, 0, 0, 0.8);
    p.set_known(0, 1, 0, 0.8);
    CHECK_FALSE(validate(p).ok());
  }
  SECTION("demand with nowhere to go") {
    // fixed ratios sum to 0.6, nothing free, demand positive
    NodeProblem p = NodeProblem::sized(1, 2, 1);
    p.demand_at(0, 0) = 10.0;
    p.supply = {5.0, 5.0};
    p.priority = {1.0};
    p.set_known(0, 0, 0, 0.6);
    CHECK_FALSE(validate(p).ok());
  }
  SECTION("all-zero priorities") {
    NodeProblem p = testing::hov_interface_example();
    p.priority = {0.0, 0.0};
    CHECK_FALSE(validate(p).ok());
  }
  SECTION("mismatched array sizes") {
    NodeProblem p = testing::hov_interface_example();
    p.supply.push_back(1.0);
    CHECK_FALSE(validate(p).ok());
  }
}

TEST_CASE("validate flags free rows without demand as a note, not an error") {
  NodeProblem p = testing::hov_interface_example();
  p.demand_at(1, 1) = 0.0; // input 1 now has free movements but no demand at all
  ValidationReport rep = validate(p);
  REQUIRE(rep.ok());
  REQUIRE_FALSE(rep.notes.empty());
}

TEST_CASE("validate allows an under-specified row when it carries no demand") {
  NodeProblem p = NodeProblem::sized(1, 2, 1);
  p.demand_at(0, 0) = 0.0;
  p.supply = {5.0, 5.0};
  p.priority = {1.0};
  p.set_known(0, 0, 0, 0.6); // sums to 0.6, nothing free: inert
  CHECK(validate(p).ok());
}

TEST_CASE("derived index sets") {
  NodeProblem p = testing::hov_interface_example();
  DerivedSets d = derive_sets(p);

  CHECK(d.outputs_with_unknowns == std::vector<int>{0, 1});
  CHECK(d.inputs_with_free_toward[0] == std::vector<int>{0, 1});
  CHECK(d.inputs_with_free_toward[1] == std::vector<int>{0, 1});
  CHECK(d.inputs_toward_output[0] == std::vector<int>{0, 1});
  CHECK(d.inputs_toward_output[1] == std::vector<int>{0, 1});

  // class-0 rows are fully fixed, class-1 rows fully free
  CHECK(d.row_unknown_outputs[p.row(0, 0)].empty());
  CHECK(d.row_unknown_outputs[p.row(0, 1)] == std::vector<int>{0, 1});
  CHECK(d.row_unknown_outputs[p.row(1, 1)] == std::vector<int>{0, 1});
  CHECK(d.unassigned_share[p.row(0, 0)] == 0.0);
  CHECK(d.unassigned_share[p.row(0, 1)] == 1.0);
  CHECK(d.single_choice_rows.empty());
}

TEST_CASE("derived sets distinguish fixed-only connections from free ones") {
  // input 0 reaches output 1 only through a fixed ratio; input 1 has one
  // free movement toward output 1 and none toward output 0
  NodeProblem p = NodeProblem::sized(2, 2, 1);
  p.demand_at(0, 0) = 10.0;
  p.demand_at(1, 0) = 20.0;
  p.supply = {30.0, 30.0};
  p.priority = {0.5, 0.5};
  p.set_known(0, 0, 0, 0.7);
  p.set_known(0, 1, 0, 0.3);
  p.set_unknown(1, 1, 0);
  DerivedSets d = derive_sets(p);

  CHECK(d.outputs_with_unknowns == std::vector<int>{1});
  CHECK(d.inputs_toward_output[1] == std::vector<int>{0, 1});
  CHECK(d.inputs_with_free_toward[1] == std::vector<int>{1});
  CHECK(d.inputs_with_free_toward[0].empty());
  CHECK(d.unassigned_share[p.row(1, 0)] == 1.0);
  REQUIRE(d.single_choice_rows.size() == 1);
  CHECK(d.single_choice_rows[0] == Movement{1, 1, 0});
}

TEST_CASE("unassigned share clamps tiny negative rounding") {
  NodeProblem p = NodeProblem::sized(1, 3, 1);
  p.demand_at(0, 0) = 1.0;
  p.supply = {1.0, 1.0, 1.0};
  p.priority = {1.0};
  // three thirds do not sum to exactly 1.0 in binary
  p.set_known(0, 0, 0, 1.0 / 3.0);
  p.set_known(0, 1, 0, 1.0 / 3.0);
  p.set_known(0, 2, 0, 1.0 - 2.0 * (1.0 / 3.0));
  REQUIRE(validate(p).ok());
  DerivedSets d = derive_sets(p);
  CHECK(d.unassigned_share[0] >= 0.0);
  CHECK(d.unassigned_share[0] <= 1e-15);
}

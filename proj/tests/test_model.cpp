#include "anchorcrc/io.hpp"
#include "anchorcrc/model.hpp"
#include "anchorcrc/rng.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace crc;

namespace {

CellCounts example_cells() { return CellCounts{3, 12, 0, 2, 27, 130, 6, 77, 743}; }

} // namespace

TEST_CASE("cell accessors match the layout") {
    const auto cells = example_cells();
    CHECK(cells.stream1_size() == 174);
    CHECK(cells.both_streams_size() == 17);
    CHECK(cells.stream2_only_size() == 83);
    CHECK(cells.stream2_size() == 100);
    CHECK(cells.stream2_positives() == 11);
    CHECK(cells.total() == 1000);
}

TEST_CASE("validate_cells accepts matching totals and rejects mismatches") {
    const DesignParams design(1000, 0.1);
    CHECK_NOTHROW(validate_cells(example_cells(), design));

    // A census sitting entirely in the unseen cell is fine.
    CHECK_NOTHROW(validate_cells(CellCounts{0, 0, 0, 0, 0, 0, 0, 0, 200},
                                 DesignParams(200, 0.1)));

    const CellCounts ones{1, 1, 1, 1, 1, 1, 1, 1, 1};
    try {
        validate_cells(ones, DesignParams(10, 0.1));
        FAIL("expected TotalMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TotalMismatch);
    }
}

TEST_CASE("accessor algebra exhausts the registry for random tables") {
    rng::SeedStream stream(42);
    for (int trial = 0; trial < 200; ++trial) {
        CellCounts cells;
        std::uint64_t total = 0;
        for (auto& c : cells.n) {
            c = stream.below(50);
            total += c;
        }
        if (total < 2) continue;
        CHECK(cells.stream1_size() + cells.stream2_only_size() + cells.n9() ==
              total);
        CHECK_NOTHROW(validate_cells(cells, DesignParams(total, 0.25)));
    }
}

TEST_CASE("type invariants are enforced at construction") {
    CHECK_THROWS_AS(TestAccuracy(1.2, 0.9), Error);
    CHECK_THROWS_AS(TestAccuracy(0.9, -0.1), Error);
    CHECK_NOTHROW(TestAccuracy(0.2, 0.3));  // weak accuracy is constructible

    CHECK_THROWS_AS(DesignParams(1, 0.5), Error);
    CHECK_THROWS_AS(DesignParams(100, 0.0), Error);
    CHECK_THROWS_AS(DesignParams(100, 1.0), Error);

    CHECK_THROWS_AS(RandomSampleData(10, 11), Error);
    CHECK_THROWS_AS(RandomSampleData(0, 0), Error);

    CHECK_THROWS_AS(ValidationCounts(0, 0, 5, 5), Error);
    CHECK_THROWS_AS(ValidationCounts(5, 5, 0, 0), Error);
    const ValidationCounts val(89, 6, 0, 100);
    CHECK(val.proportions().se == doctest::Approx(89.0 / 95.0));
    CHECK(val.proportions().sp == doctest::Approx(1.0));
}

TEST_CASE("weak accuracy is rejected only when corrections need it") {
    const TestAccuracy weak(0.5, 0.5);
    CHECK_THROWS_AS(weak.require_positive_youden(), Error);
    const TestAccuracy fine(0.8, 0.9);
    CHECK_NOTHROW(fine.require_positive_youden());
}

TEST_CASE("json field names round-trip exactly") {
    const auto cells = example_cells();
    const auto j = io::cells_to_json(cells);
    CHECK(j.at("n1") == 3);
    CHECK(j.at("n9") == 743);
    const auto parsed = io::parse_cells(j);
    CHECK(parsed.n == cells.n);

    const auto dj = io::design_to_json(DesignParams(1000, 0.1));
    CHECK(dj.at("n_tot") == 1000);
    CHECK(dj.at("psi") == doctest::Approx(0.1));
    const auto design = io::parse_design(dj);
    CHECK(design.n_tot == 1000);

    const auto aj = io::accuracy_to_json(TestAccuracy(0.94, 1.0));
    CHECK(aj.at("se") == doctest::Approx(0.94));
    const auto acc = io::parse_test_accuracy(aj);
    CHECK(acc.sp == doctest::Approx(1.0));

    const auto vj = io::validation_to_json(ValidationCounts(65, 38, 1, 552));
    const auto val = io::parse_validation(vj);
    CHECK(val.v11 == 65);
    CHECK(val.v00 == 552);
}

TEST_CASE("json parsing rejects malformed objects with schema errors") {
    auto expect_schema = [](const char* text) {
        try {
            io::parse_cells(nlohmann::json::parse(text));
            FAIL_CHECK("expected SchemaViolation for: " << text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SchemaViolation);
        }
    };
    expect_schema(R"({"n1":1})");
    expect_schema(R"({"n1":1.5,"n2":0,"n3":0,"n4":0,"n5":0,"n6":0,"n7":0,"n8":0,"n9":0})");
    expect_schema(R"({"n1":-1,"n2":0,"n3":0,"n4":0,"n5":0,"n6":0,"n7":0,"n8":0,"n9":0})");

    try {
        io::parse_design(nlohmann::json::parse(R"({"n_tot":100,"psi":1.5})"));
        FAIL_CHECK("expected SchemaViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaViolation);
    }
}

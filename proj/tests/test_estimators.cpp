#include "anchorcrc/estimators.hpp"

#include "anchorcrc/model.hpp"
#include "anchorcrc/rng.hpp"
#include "reference_oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace crc;

namespace {

// Worked-example fixture: the bundled cell table with accuracies taken as the
// exact validation-table proportions.
const CellCounts kCells{3, 12, 0, 2, 27, 130, 6, 77, 743};
const DesignParams kDesign{1000, 0.1};
const TestAccuracy kAcc1{65.0 / 103.0, 552.0 / 553.0};
const TestAccuracy kAcc2{89.0 / 95.0, 1.0};

// Golden constant for the unadjusted delta-method variance on the fixture,
// frozen from an independent straight-line evaluation of the formulas.
constexpr double kGoldenV1 = 688.4953118127;

oracle::Inputs oracle_inputs(const CellCounts& cells, const DesignParams& design,
                             const TestAccuracy& acc1, const TestAccuracy& acc2) {
    return oracle::Inputs{
        static_cast<double>(cells.n1()), static_cast<double>(cells.n2()),
        static_cast<double>(cells.n3()), static_cast<double>(cells.n4()),
        static_cast<double>(cells.n5()), static_cast<double>(cells.n6()),
        static_cast<double>(cells.n7()), static_cast<double>(cells.n8()),
        static_cast<double>(cells.n9()), static_cast<double>(design.n_tot),
        design.psi, acc1.se, acc1.sp, acc2.se, acc2.sp};
}

} // namespace

TEST_CASE("threshold correction: branches and exact values") {
    // Interior branch: correction divides out the Youden index.
    CHECK(threshold_prevalence(0.11, kAcc2) ==
          doctest::Approx(10.45 / 89.0).epsilon(1e-12));
    CHECK(1000.0 * threshold_prevalence(0.11, kAcc2) ==
          doctest::Approx(117.4).epsilon(1e-3));

    // Lower branch: apparent prevalence below the false-positive floor.
    CHECK(threshold_prevalence(0.03, TestAccuracy(0.85, 0.95)) == 0.0);

    // Perfect test is the identity.
    CHECK(threshold_prevalence(0.5, TestAccuracy(1.0, 1.0)) == 0.5);

    // Upper branch saturates at 1.
    CHECK(threshold_prevalence(0.97, TestAccuracy(0.9, 0.95)) == 1.0);

    CHECK_THROWS_AS(threshold_prevalence(0.5, TestAccuracy(0.5, 0.5)), Error);
}

TEST_CASE("threshold correction is monotone in the apparent prevalence") {
    rng::SeedStream stream(3);
    for (int trial = 0; trial < 500; ++trial) {
        const TestAccuracy acc(0.55 + 0.45 * stream.uniform01(),
                               0.55 + 0.45 * stream.uniform01());
        double a = stream.uniform01();
        double b = stream.uniform01();
        if (a > b) std::swap(a, b);
        CHECK(threshold_prevalence(a, acc) <= threshold_prevalence(b, acc));
    }
}

TEST_CASE("random-sampling estimator reproduces the worked example") {
    const auto report = rs_estimate(RandomSampleData(100, 11), kAcc2, kDesign);
    CHECK(report.point == doctest::Approx(117.4157303371).epsilon(1e-9));
    CHECK(*report.se == doctest::Approx(31.9681186659).epsilon(1e-9));
    CHECK(report.point == doctest::Approx(117.4).epsilon(1e-3));
    CHECK(*report.se == doctest::Approx(32.0).epsilon(2e-3));
    CHECK(report.wald_ci->lower == doctest::Approx(54.76).epsilon(1e-3));
    CHECK(report.wald_ci->upper == doctest::Approx(180.07).epsilon(1e-3));
    CHECK(*report.wald_width == doctest::Approx(125.3).epsilon(1e-3));
}

TEST_CASE("random-sampling variance collapses correctly in special cases") {
    SUBCASE("perfect test keeps only the finite-population term") {
        const auto report =
            rs_estimate(RandomSampleData(100, 10), TestAccuracy(1, 1), kDesign);
        CHECK(report.point == doctest::Approx(100.0));
        const double expected_se =
            1000.0 * std::sqrt((100.0 * 900.0 / (1000.0 * 99.0)) *
                               (0.1 * 0.9 / 100.0));
        CHECK(*report.se == doctest::Approx(expected_se).epsilon(1e-12));
        CHECK(*report.se == doctest::Approx(28.60).epsilon(1e-3));
    }

    SUBCASE("census with a perfect test has zero variance") {
        const auto report = rs_estimate(RandomSampleData(1000, 100),
                                        TestAccuracy(1, 1), kDesign);
        CHECK(report.point == doctest::Approx(100.0));
        CHECK(*report.se == doctest::Approx(0.0));
    }

    SUBCASE("sample of one is rejected") {
        try {
            rs_estimate(RandomSampleData(1, 0), kAcc2, kDesign);
            FAIL("expected SampleTooSmall");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SampleTooSmall);
        }
    }
}

TEST_CASE("prevalence components on the worked example") {
    const auto paired = validate_cells(kCells, kDesign);
    const auto comp = prevalence_components(paired, kAcc1, kAcc2);
    CHECK(comp.phi_hat == doctest::Approx(0.174).epsilon(1e-12));
    CHECK(comp.raw_pi01 == doctest::Approx(6.0 / 83.0).epsilon(1e-12));
    CHECK(comp.pi01_hat == doctest::Approx(0.0771625829).epsilon(1e-8));
    CHECK(comp.raw_pi11 == doctest::Approx(5.0 / 17.0).epsilon(1e-12));
    CHECK(comp.pi11_hat == doctest::Approx(0.3139458030).epsilon(1e-8));
    CHECK(comp.pi10_hat == doctest::Approx(0.2704228786).epsilon(1e-8));
}

TEST_CASE("prevalence components edge behavior") {
    SUBCASE("perfect tests leave the raw ratios untouched") {
        const auto paired = validate_cells(kCells, kDesign);
        const auto comp =
            prevalence_components(paired, TestAccuracy(1, 1), TestAccuracy(1, 1));
        CHECK(comp.pi11_hat == doctest::Approx(comp.raw_pi11));
        CHECK(comp.pi10_hat == doctest::Approx(comp.raw_pi10));
        CHECK(comp.pi01_hat == doctest::Approx(comp.raw_pi01));
    }

    SUBCASE("no positives in the stream-2-only group hits the lower branch") {
        const CellCounts cells{5, 5, 1, 1, 10, 20, 0, 50, 108};
        const auto paired = validate_cells(cells, DesignParams(200, 0.25));
        const auto comp = prevalence_components(paired, TestAccuracy(0.9, 0.9),
                                                TestAccuracy(0.95, 0.95));
        CHECK(comp.raw_pi01 == 0.0);
        CHECK(comp.pi01_hat == 0.0);
    }

    SUBCASE("an empty subgroup is rejected with its name") {
        const CellCounts cells{0, 0, 0, 0, 10, 20, 5, 5, 60};
        const auto paired = validate_cells(cells, DesignParams(100, 0.1));
        try {
            prevalence_components(paired, kAcc1, kAcc2);
            FAIL("expected EmptySubgroup");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptySubgroup);
        }
    }
}

TEST_CASE("closed-form estimator reproduces the worked example") {
    const auto paired = validate_cells(kCells, kDesign);
    const auto report = crc_closed_form(paired, kAcc1, kAcc2);
    CHECK(report.point == doctest::Approx(111.5471732524).epsilon(1e-9));
    CHECK(*report.se == doctest::Approx(24.6710066223).epsilon(1e-9));
    CHECK(report.wald_ci->lower == doctest::Approx(63.19).epsilon(1e-3));
    CHECK(report.wald_ci->upper == doctest::Approx(159.90).epsilon(1e-3));
    CHECK(*report.wald_width == doctest::Approx(96.71).epsilon(1e-3));
    CHECK_FALSE(report.degenerate_fpc);
}

TEST_CASE("perfect tests reduce the estimator to the raw mixture") {
    // With exact tests the discordant dual cells are empty and the corrected
    // ratios equal the apparent ones.
    const CellCounts cells{4, 13, 0, 0, 23, 127, 9, 81, 743};
    const DesignParams design(1000, 0.1);
    const auto paired = validate_cells(cells, design);
    const auto report =
        crc_closed_form(paired, TestAccuracy(1, 1), TestAccuracy(1, 1));
    const double phi = 167.0 / 1000.0;
    const double raw11 = 4.0 / 17.0;
    const double raw10 = 23.0 / 150.0;
    const double raw01 = 9.0 / 90.0;
    const double expected =
        1000.0 * (0.1 * raw11 * phi + 0.9 * raw10 * phi + raw01 * (1.0 - phi));
    CHECK(report.point == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("equal subgroup prevalences collapse the mixture for any design") {
    // All three corrected subgroup prevalences equal 1/2 under perfect tests,
    // so the point estimate is half the registry no matter how the weights
    // split.
    const CellCounts cells{5, 5, 5, 5, 30, 30, 25, 25, 130};
    for (const double psi : {0.05, 0.2, 0.5, 0.9}) {
        const auto paired = validate_cells(cells, DesignParams(260, psi));
        const auto report =
            crc_closed_form(paired, TestAccuracy(1, 1), TestAccuracy(1, 1));
        CHECK(report.point == doctest::Approx(130.0).epsilon(1e-12));
    }
}

TEST_CASE("point depends on the cells only through the sufficient margins") {
    // Redistribute counts inside (n1, n4) and inside (n2, n3); the estimate
    // must not move.
    const auto paired = validate_cells(kCells, kDesign);
    const double base = crc_closed_form(paired, kAcc1, kAcc2).point;
    const CellCounts shuffled{1, 0, 12, 4, 27, 130, 6, 77, 743};
    const auto paired2 = validate_cells(shuffled, kDesign);
    CHECK(crc_closed_form(paired2, kAcc1, kAcc2).point ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("unadjusted variance matches the frozen golden constant") {
    const auto paired = validate_cells(kCells, kDesign);
    const auto comp = prevalence_components(paired, kAcc1, kAcc2);
    const auto var = delta_variance_unadjusted(
        comp, CellMasses::from_counts(kCells), kDesign, kAcc1, kAcc2);
    CHECK(var.v1 == doctest::Approx(kGoldenV1).epsilon(1e-9));
}

TEST_CASE("variance respects the doubling scaling law") {
    CellCounts doubled;
    for (std::size_t i = 0; i < 9; ++i) doubled.n[i] = kCells.n[i] * 2;
    const DesignParams design2(2000, 0.1);
    const auto paired = validate_cells(doubled, design2);
    const auto comp = prevalence_components(paired, kAcc1, kAcc2);
    const auto var = delta_variance_unadjusted(
        comp, CellMasses::from_counts(doubled), design2, kAcc1, kAcc2);
    // Each prevalence-scale kernel halves while n_tot^2 quadruples.
    CHECK(var.v1 == doctest::Approx(2.0 * kGoldenV1).epsilon(1e-9));
}

TEST_CASE("zero apparent prevalence contributes nothing to the variance") {
    const CellCounts cells{5, 5, 1, 1, 10, 20, 0, 50, 108};
    const auto paired = validate_cells(cells, DesignParams(200, 0.25));
    const auto comp = prevalence_components(paired, TestAccuracy(0.9, 0.9),
                                            TestAccuracy(0.95, 0.95));
    const auto var = delta_variance_unadjusted(
        comp, CellMasses::from_counts(cells), DesignParams(200, 0.25),
        TestAccuracy(0.9, 0.9), TestAccuracy(0.95, 0.95));
    CHECK(var.v1_pi01 == 0.0);
}

TEST_CASE("fpc-adjusted variance: special structure") {
    SUBCASE("perfect tests zero out every extra term") {
        const auto paired = validate_cells(kCells, kDesign);
        const auto comp =
            prevalence_components(paired, TestAccuracy(1, 1), TestAccuracy(1, 1));
        const auto var = fpc_adjusted_variance(
            comp, CellMasses::from_counts(kCells), kDesign, TestAccuracy(1, 1),
            TestAccuracy(1, 1));
        CHECK(var.extra11 == 0.0);
        CHECK(var.extra10 == 0.0);
        CHECK(var.extra01 == 0.0);
        const double recombined =
            1e6 * (var.d11 * var.d11 * var.fpc11 * var.v1_pi11 +
                   var.d10 * var.d10 * var.fpc10 * var.v1_pi10 +
                   var.d01 * var.d01 * var.fpc01 * var.v1_pi01);
        CHECK(var.v2 == doctest::Approx(recombined).epsilon(1e-12));
    }

    SUBCASE("stream 2 census of the unseen stratum zeroes its fpc factor") {
        // Everyone outside stream 1 lands in stream 2: n9 = 0.
        const CellCounts cells{2, 3, 1, 1, 5, 8, 10, 70, 0};
        const auto paired = validate_cells(cells, DesignParams(100, 0.5));
        const auto comp = prevalence_components(paired, TestAccuracy(0.9, 0.9),
                                                TestAccuracy(0.95, 0.95));
        const auto var = fpc_adjusted_variance(
            comp, CellMasses::from_counts(cells), DesignParams(100, 0.5),
            TestAccuracy(0.9, 0.9), TestAccuracy(0.95, 0.95));
        CHECK(var.fpc01 == doctest::Approx(0.0));
        CHECK(var.v2_pi01 == doctest::Approx(var.extra01).epsilon(1e-12));
    }

    SUBCASE("single-member subgroup falls back to unit fpc with a flag") {
        const CellCounts cells{1, 0, 0, 0, 10, 20, 5, 5, 59};
        const auto paired = validate_cells(cells, DesignParams(100, 0.1));
        const auto report =
            crc_closed_form(paired, TestAccuracy(0.9, 0.9), TestAccuracy(0.95, 0.95));
        CHECK(report.degenerate_fpc);
        CHECK(std::isfinite(*report.se));
    }

    SUBCASE("the adjusted variance is smaller on the worked example") {
        const auto paired = validate_cells(kCells, kDesign);
        const auto comp = prevalence_components(paired, kAcc1, kAcc2);
        const auto var = fpc_adjusted_variance(
            comp, CellMasses::from_counts(kCells), kDesign, kAcc1, kAcc2);
        CHECK(var.v2 < var.v1);
        CHECK(var.v2 == doctest::Approx(24.6710066223 * 24.6710066223)
                            .epsilon(1e-9));
    }
}

TEST_CASE("estimates stay inside [0, n_tot] and agree with the reference "
          "transcription") {
    rng::SeedStream stream(8675309);
    int checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
        CellCounts cells;
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < 9; ++i) {
            cells.n[i] = 1 + stream.below(60);
            total += cells.n[i];
        }
        const double psi = 0.05 + 0.9 * stream.uniform01();
        const TestAccuracy acc1(0.7 + 0.3 * stream.uniform01(),
                                0.7 + 0.3 * stream.uniform01());
        const TestAccuracy acc2(0.7 + 0.3 * stream.uniform01(),
                                0.7 + 0.3 * stream.uniform01());
        const DesignParams design(total, psi);
        const auto paired = validate_cells(cells, design);
        const auto report = crc_closed_form(paired, acc1, acc2);

        CHECK(report.point >= 0.0);
        CHECK(report.point <= static_cast<double>(total));
        CHECK(report.wald_ci->lower <= report.wald_ci->upper);

        const auto expected = oracle::evaluate(oracle_inputs(cells, design, acc1, acc2));
        CHECK(report.point ==
              doctest::Approx(expected.point).epsilon(1e-12));
        const auto comp = prevalence_components(paired, acc1, acc2);
        const auto var = fpc_adjusted_variance(
            comp, CellMasses::from_counts(cells), design, acc1, acc2);
        CHECK(var.v1 == doctest::Approx(expected.v1).epsilon(1e-12));
        CHECK(var.v2 == doctest::Approx(expected.v2).epsilon(1e-12));
        ++checked;
    }
    CHECK(checked == 400);
}

TEST_CASE("random-sampling variance agrees with the reference transcription") {
    rng::SeedStream stream(424242);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint64_t n = 2 + stream.below(500);
        const std::uint64_t n_pos = stream.below(n + 1);
        const std::uint64_t n_tot = n + 1 + stream.below(2000);
        const TestAccuracy acc(0.7 + 0.3 * stream.uniform01(),
                               0.7 + 0.3 * stream.uniform01());
        const DesignParams design(n_tot, 0.3);
        const auto report = rs_estimate(RandomSampleData(n, n_pos), acc, design);
        const double expected = oracle::rs_variance(
            static_cast<double>(n), static_cast<double>(n_pos),
            static_cast<double>(n_tot), acc.se, acc.sp);
        CHECK(*report.se ==
              doctest::Approx(static_cast<double>(n_tot) * std::sqrt(expected))
                  .epsilon(1e-12));
    }
}

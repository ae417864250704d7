#pragma once

// Domain types shared by every estimator: two-stream cell counts, test
// accuracy parameters, sampling design constants, and the report types the
// estimators emit. All types are immutable value types after construction.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace crc {

enum class ErrorCode {
    TotalMismatch,
    NonPositiveYouden,
    SampleTooSmall,
    EmptySubgroup,
    DegenerateDraw,
    OptimizerFailed,
    InvalidSize,
    UnsupportedFormat,
    InvalidArgument,
    SchemaViolation,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Sensitivity/specificity pair for one testing stream. Construction accepts
/// any values in [0,1]; operations that invert the misclassification require
/// a positive Youden index and reject the rest.
struct TestAccuracy {
    double se = 1.0;
    double sp = 1.0;

    TestAccuracy() = default;
    TestAccuracy(double se_, double sp_);

    double youden() const noexcept { return se + sp - 1.0; }
    void require_positive_youden() const;
};

/// Known design constants: registry size and the Stream 2 sampling
/// probability, which is fixed by the investigator.
struct DesignParams {
    std::uint64_t n_tot = 2;
    double psi = 0.5;

    DesignParams() = default;
    DesignParams(std::uint64_t n_tot_, double psi_);
};

/// The nine observed cell counts of the two-stream layout:
///   n1..n4: sampled in both streams, split by the (stream1, stream2) test
///           result pair (+/+, -/-, +/-, -/+)
///   n5, n6: stream 1 only, test + / test -
///   n7, n8: stream 2 only, test + / test -
///   n9:     sampled in neither stream
struct CellCounts {
    std::array<std::uint64_t, 9> n{};

    CellCounts() = default;
    CellCounts(std::uint64_t n1, std::uint64_t n2, std::uint64_t n3,
               std::uint64_t n4, std::uint64_t n5, std::uint64_t n6,
               std::uint64_t n7, std::uint64_t n8, std::uint64_t n9)
        : n{n1, n2, n3, n4, n5, n6, n7, n8, n9} {}

    std::uint64_t n1() const noexcept { return n[0]; }
    std::uint64_t n2() const noexcept { return n[1]; }
    std::uint64_t n3() const noexcept { return n[2]; }
    std::uint64_t n4() const noexcept { return n[3]; }
    std::uint64_t n5() const noexcept { return n[4]; }
    std::uint64_t n6() const noexcept { return n[5]; }
    std::uint64_t n7() const noexcept { return n[6]; }
    std::uint64_t n8() const noexcept { return n[7]; }
    std::uint64_t n9() const noexcept { return n[8]; }

    /// N1: everyone sampled by Stream 1.
    std::uint64_t stream1_size() const noexcept {
        return n[0] + n[1] + n[2] + n[3] + n[4] + n[5];
    }
    /// N11: sampled by both streams.
    std::uint64_t both_streams_size() const noexcept {
        return n[0] + n[1] + n[2] + n[3];
    }
    /// N01: sampled by Stream 2 only.
    std::uint64_t stream2_only_size() const noexcept { return n[6] + n[7]; }

    std::uint64_t stream1_only_size() const noexcept { return n[4] + n[5]; }

    std::uint64_t stream2_size() const noexcept {
        return both_streams_size() + stream2_only_size();
    }
    std::uint64_t stream2_positives() const noexcept {
        return n[0] + n[3] + n[6];
    }
    std::uint64_t total() const noexcept {
        std::uint64_t t = 0;
        for (auto v : n) t += v;
        return t;
    }
};

/// A single random sample with its test-positive count.
struct RandomSampleData {
    std::uint64_t n = 1;
    std::uint64_t n_pos = 0;

    RandomSampleData() = default;
    RandomSampleData(std::uint64_t n_, std::uint64_t n_pos_);
};

/// External validation table for one test: counts cross-classifying the test
/// result against true disease status (test+/true+, test-/true+, test+/true-,
/// test-/true-). Each true-status margin must be nonempty.
struct ValidationCounts {
    std::uint64_t v11 = 1;
    std::uint64_t v10 = 0;
    std::uint64_t v01 = 0;
    std::uint64_t v00 = 1;

    ValidationCounts() = default;
    ValidationCounts(std::uint64_t v11_, std::uint64_t v10_,
                     std::uint64_t v01_, std::uint64_t v00_);

    /// Point proportions of the table, usable as fixed accuracy parameters.
    TestAccuracy proportions() const;
};

/// Cell counts paired with design parameters after the total has been checked
/// (or explicitly trusted, for generators that produce consistent counts by
/// construction and must not pay for re-validation in hot loops).
class ValidatedData {
public:
    static ValidatedData checked(const CellCounts& cells, const DesignParams& design);
    static ValidatedData trusted(const CellCounts& cells, const DesignParams& design) noexcept {
        return ValidatedData(cells, design);
    }

    const CellCounts& cells() const noexcept { return cells_; }
    const DesignParams& design() const noexcept { return design_; }

private:
    ValidatedData(const CellCounts& cells, const DesignParams& design) noexcept
        : cells_(cells), design_(design) {}

    CellCounts cells_;
    DesignParams design_;
};

/// Checks that the nine cells exhaust the registry total.
ValidatedData validate_cells(const CellCounts& cells, const DesignParams& design);

enum class EstimatorKind { Rs, CrcClosed, CrcMle, RsMi, CrcMi };

const char* to_string(EstimatorKind kind) noexcept;

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    double width() const noexcept { return upper - lower; }
};

/// Point estimate with its uncertainty summaries. `se` is absent for the
/// numerically maximized estimator, which has no variance estimator attached.
/// Wald bounds are clamped to [0, n_tot]; the width field preserves the
/// unclamped width.
struct EstimateReport {
    EstimatorKind kind = EstimatorKind::Rs;
    double point = 0.0;
    std::optional<double> se;
    std::optional<Interval> wald_ci;
    std::optional<double> wald_width;
    std::optional<Interval> credible_ci;
    std::optional<double> credible_width;
    bool degenerate_fpc = false;    // some finite-population factor fell back to 1
    bool boundary_solution = false; // profile maximizer landed on {0,1}
};

} // namespace crc

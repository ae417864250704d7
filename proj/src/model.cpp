#include "anchorcrc/model.hpp"

#include <sstream>

namespace crc {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::TotalMismatch: return "total_mismatch";
        case ErrorCode::NonPositiveYouden: return "non_positive_youden";
        case ErrorCode::SampleTooSmall: return "sample_too_small";
        case ErrorCode::EmptySubgroup: return "empty_subgroup";
        case ErrorCode::DegenerateDraw: return "degenerate_draw";
        case ErrorCode::OptimizerFailed: return "optimizer_failed";
        case ErrorCode::InvalidSize: return "invalid_size";
        case ErrorCode::UnsupportedFormat: return "unsupported_format";
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::SchemaViolation: return "schema_violation";
    }
    return "unknown";
}

const char* to_string(EstimatorKind kind) noexcept {
    switch (kind) {
        case EstimatorKind::Rs: return "rs";
        case EstimatorKind::CrcClosed: return "crc";
        case EstimatorKind::CrcMle: return "crc_mle";
        case EstimatorKind::RsMi: return "rs_mi";
        case EstimatorKind::CrcMi: return "crc_mi";
    }
    return "unknown";
}

namespace {

void require_probability(double value, const char* name) {
    if (!(value >= 0.0 && value <= 1.0)) {
        std::ostringstream msg;
        msg << name << " must lie in [0,1], got " << value;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

} // namespace

TestAccuracy::TestAccuracy(double se_, double sp_) : se(se_), sp(sp_) {
    require_probability(se, "se");
    require_probability(sp, "sp");
}

void TestAccuracy::require_positive_youden() const {
    if (!(youden() > 0.0)) {
        std::ostringstream msg;
        msg << "se + sp - 1 must be positive to invert misclassification "
            << "(se=" << se << ", sp=" << sp << ")";
        throw Error(ErrorCode::NonPositiveYouden, msg.str());
    }
}

DesignParams::DesignParams(std::uint64_t n_tot_, double psi_)
    : n_tot(n_tot_), psi(psi_) {
    if (n_tot < 2) {
        throw Error(ErrorCode::InvalidArgument, "n_tot must be at least 2");
    }
    if (!(psi > 0.0 && psi < 1.0)) {
        std::ostringstream msg;
        msg << "psi must lie strictly in (0,1), got " << psi;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

RandomSampleData::RandomSampleData(std::uint64_t n_, std::uint64_t n_pos_)
    : n(n_), n_pos(n_pos_) {
    if (n == 0) {
        throw Error(ErrorCode::InvalidSize, "sample size must be positive");
    }
    if (n_pos > n) {
        std::ostringstream msg;
        msg << "n_pos (" << n_pos << ") exceeds sample size (" << n << ")";
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

ValidationCounts::ValidationCounts(std::uint64_t v11_, std::uint64_t v10_,
                                   std::uint64_t v01_, std::uint64_t v00_)
    : v11(v11_), v10(v10_), v01(v01_), v00(v00_) {
    if (v11 + v10 == 0) {
        throw Error(ErrorCode::InvalidArgument,
                    "validation data has no truly diseased subjects");
    }
    if (v01 + v00 == 0) {
        throw Error(ErrorCode::InvalidArgument,
                    "validation data has no truly non-diseased subjects");
    }
}

TestAccuracy ValidationCounts::proportions() const {
    return TestAccuracy(static_cast<double>(v11) / static_cast<double>(v11 + v10),
                        static_cast<double>(v00) / static_cast<double>(v01 + v00));
}

ValidatedData ValidatedData::checked(const CellCounts& cells, const DesignParams& design) {
    const std::uint64_t total = cells.total();
    if (total != design.n_tot) {
        std::ostringstream msg;
        msg << "cell counts sum to " << total << " but n_tot is " << design.n_tot;
        throw Error(ErrorCode::TotalMismatch, msg.str());
    }
    return ValidatedData(cells, design);
}

ValidatedData validate_cells(const CellCounts& cells, const DesignParams& design) {
    return ValidatedData::checked(cells, design);
}

} // namespace crc

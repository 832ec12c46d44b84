#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "steatosis/matrix.hpp"
#include "steatosis/schema.hpp"

namespace steatosis {

// Exact header tokens of the cohort CSV format, in column order.
const std::vector<std::string>& cohort_csv_header();

struct RowReject {
    std::size_t row;  // 0-based data row (header excluded)
    std::string reason;
};

struct IngestReport {
    std::size_t total_rows = 0;
    std::size_t accepted = 0;
    std::vector<RowReject> rejected;
    std::vector<RowReject> unassigned;  // accepted rows that no tier dataset could take
    std::array<std::size_t, 3> tier_counts{};
    std::array<std::array<std::size_t, kClassCount>, 3> tier_grade_counts{};
};

nlohmann::json to_json(const IngestReport& report);

struct ParsedCohort {
    std::vector<SubjectRecord> records;
    IngestReport report;
    std::vector<std::size_t> source_rows;  // data row of each record
};

// Row-level problems are collected in the report; throws DataError only when
// the header is missing or malformed.
ParsedCohort parse_cohort(std::istream& in);
// Throws IoError when the file cannot be opened.
ParsedCohort parse_cohort_file(const std::filesystem::path& path);

// Writes records in the cohort CSV format with shortest round-trip numbers.
void write_cohort_csv(std::ostream& out, std::span<const SubjectRecord> records);

struct TierDataset {
    Tier tier = Tier::one;
    Matrix X;  // rows x feature_set(tier).size(), canonical order
    std::vector<int> y;
    std::vector<std::string> ids;
    std::vector<std::uint64_t> fingerprints;

    std::size_t size() const { return y.size(); }
};

struct Partition {
    std::array<TierDataset, 3> tiers;
    IngestReport report;

    const TierDataset& operator[](Tier t) const { return tiers[tier_index(t)]; }
};

// Assigns every labeled record to the dataset of its availability tier.
// `report` seeds the returned report (pass the parse report to extend it).
Partition partition_tiers(std::span<const SubjectRecord> records, IngestReport report = {},
                          std::span<const std::size_t> source_rows = {});

// Per-feature z-score statistics, population convention (divisor n).
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    std::size_t size() const { return mean.size(); }
    bool degenerate(std::size_t j) const { return stddev[j] == 0.0; }

    // x' = (x - mean) / std, or 0 for degenerate features.
    void transform(std::span<const double> in, std::span<double> out) const;
    void transform_inplace(std::span<double> values) const { transform(values, values); }

    friend bool operator==(const Scaler&, const Scaler&) = default;
};

Scaler fit_scaler(const Matrix& matrix);
// Fits on the given rows only.
Scaler fit_scaler(const Matrix& matrix, std::span<const std::size_t> rows);
Matrix apply_scaler(const Scaler& scaler, const Matrix& matrix);

nlohmann::json to_json(const Scaler& scaler);
Scaler scaler_from_json(const nlohmann::json& j);

}  // namespace steatosis

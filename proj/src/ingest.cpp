#include "steatosis/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "steatosis/errors.hpp"

namespace steatosis {

namespace {

// Splits one CSV line; supports double-quoted cells with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
    // accept "2.0" style integers
    if (auto d = parse_double(s); d && std::floor(*d) == *d && std::abs(*d) < 1e9) return static_cast<int>(*d);
    return std::nullopt;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

enum class Column { id, grade, feature, unknown };

struct ColumnInfo {
    Column kind;
    std::size_t feature = 0;
    std::string name;
};

}  // namespace

const std::vector<std::string>& cohort_csv_header() {
    static const std::vector<std::string> header{
        "id",  "Age",  "Sex", "WBC", "HB",  "PLT", "FIB4",   "FBS",    "AST", "ALT",   "BilT", "BilD",
        "TG",  "Chol", "LDL", "HDL", "ALB", "Height", "Weight", "BMI", "Waist", "Hip",  "WHRatio", "Grade"};
    return header;
}

ParsedCohort parse_cohort(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw DataError("missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<ColumnInfo> columns;
    std::map<std::string, int> seen;
    for (auto& raw : split_csv_line(line)) {
        std::string name(trim(raw));
        if (name.empty()) throw DataError("malformed header: empty column name");
        if (seen[name]++ > 0) throw DataError("malformed header: duplicate column " + name);
        if (name == "id") {
            columns.push_back({Column::id, 0, name});
        } else if (name == "Grade") {
            columns.push_back({Column::grade, 0, name});
        } else if (auto idx = feature_index(name)) {
            columns.push_back({Column::feature, *idx, name});
        } else {
            columns.push_back({Column::unknown, 0, name});
        }
    }

    ParsedCohort out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::size_t this_row = row++;
        ++out.report.total_rows;
        auto reject = [&](std::string reason) { out.report.rejected.push_back({this_row, std::move(reason)}); };

        auto cells = split_csv_line(line);
        if (cells.size() != columns.size()) {
            reject("wrong number of cells: expected " + std::to_string(columns.size()) + ", got " +
                   std::to_string(cells.size()));
            continue;
        }
        SubjectRecord rec;
        rec.id = std::to_string(this_row);
        std::optional<std::string> problem;
        for (std::size_t c = 0; c < columns.size() && !problem; ++c) {
            auto cell = trim(cells[c]);
            const auto& col = columns[c];
            switch (col.kind) {
                case Column::id:
                    if (!cell.empty()) rec.id = std::string(cell);
                    break;
                case Column::grade:
                    if (cell.empty()) break;
                    if (auto g = parse_int(cell)) {
                        if (!valid_grade(*g)) problem = "label out of range";
                        else rec.label = *g;
                    } else {
                        problem = "non-numeric Grade";
                    }
                    break;
                case Column::feature:
                    if (cell.empty()) break;
                    if (col.feature == kSexIndex) {
                        if (auto s = encode_sex(cell)) rec.values[col.feature] = *s;
                        else if (auto d = parse_double(cell); d && (*d == 0.0 || *d == 1.0)) rec.values[col.feature] = *d;
                        else problem = "invalid Sex value '" + std::string(cell) + "'";
                    } else if (auto d = parse_double(cell)) {
                        rec.values[col.feature] = *d;
                    } else {
                        problem = "non-numeric value in column " + col.name;
                    }
                    break;
                case Column::unknown:
                    if (!cell.empty()) problem = "unknown column " + col.name;
                    break;
            }
        }
        if (problem) {
            reject(*problem);
            continue;
        }
        ++out.report.accepted;
        out.records.push_back(std::move(rec));
        out.source_rows.push_back(this_row);
    }
    return out;
}

ParsedCohort parse_cohort_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_cohort(in);
}

void write_cohort_csv(std::ostream& out, std::span<const SubjectRecord> records) {
    const auto& header = cohort_csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& rec : records) {
        out << csv_escape(rec.id);
        for (std::size_t c = 1; c + 1 < header.size(); ++c) {
            out << ',';
            auto idx = *feature_index(header[c]);
            const auto& v = rec.values[idx];
            if (!v) continue;
            if (idx == kSexIndex) out << decode_sex(*v);
            else out << format_double(*v);
        }
        out << ',';
        if (rec.label) out << *rec.label;
        out << '\n';
    }
}

Partition partition_tiers(std::span<const SubjectRecord> records, IngestReport report,
                          std::span<const std::size_t> source_rows) {
    Partition part;
    for (Tier t : kTiers) part.tiers[tier_index(t)].tier = t;
    report.tier_counts = {};
    report.tier_grade_counts = {};
    report.unassigned.clear();

    std::vector<double> buf;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::size_t row = source_rows.empty() ? i : source_rows[i];
        if (!rec.label) {
            report.unassigned.push_back({row, "missing label"});
            continue;
        }
        auto tier = availability_tier(rec);
        if (!tier) {
            report.unassigned.push_back({row, "insufficient features for tier 1"});
            continue;
        }
        auto& ds = part.tiers[tier_index(*tier)];
        buf.resize(feature_set(*tier).size());
        tier_values(rec, *tier, buf);
        ds.X.append_row(buf);
        ds.y.push_back(*rec.label);
        ds.ids.push_back(rec.id);
        ds.fingerprints.push_back(record_fingerprint(rec));
        ++report.tier_counts[tier_index(*tier)];
        ++report.tier_grade_counts[tier_index(*tier)][static_cast<std::size_t>(*rec.label)];
    }
    for (Tier t : kTiers) {
        auto& ds = part.tiers[tier_index(t)];
        if (ds.X.empty()) ds.X = Matrix(0, feature_set(t).size());
    }
    part.report = std::move(report);
    return part;
}

void Scaler::transform(std::span<const double> in, std::span<double> out) const {
    if (in.size() != mean.size() || out.size() != mean.size())
        throw DataError("scaler: dimension mismatch");
    for (std::size_t j = 0; j < mean.size(); ++j)
        out[j] = stddev[j] == 0.0 ? 0.0 : (in[j] - mean[j]) / stddev[j];
}

Scaler fit_scaler(const Matrix& matrix, std::span<const std::size_t> rows) {
    if (rows.empty() || matrix.cols() == 0) throw DataError("fit_scaler: empty matrix");
    const std::size_t d = matrix.cols();
    Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    const double n = static_cast<double>(rows.size());
    for (auto r : rows)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += matrix(r, j);
    for (auto& m : s.mean) m /= n;
    for (auto r : rows)
        for (std::size_t j = 0; j < d; ++j) {
            double dev = matrix(r, j) - s.mean[j];
            s.stddev[j] += dev * dev;
        }
    for (std::size_t j = 0; j < d; ++j) {
        s.stddev[j] = std::sqrt(s.stddev[j] / n);
        // Constant columns can leave rounding residue; treat them as exactly degenerate.
        if (s.stddev[j] <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) s.stddev[j] = 0.0;
    }
    return s;
}

Scaler fit_scaler(const Matrix& matrix) {
    std::vector<std::size_t> rows(matrix.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return fit_scaler(matrix, rows);
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& matrix) {
    if (matrix.cols() != scaler.size()) throw DataError("apply_scaler: dimension mismatch");
    Matrix out(matrix.rows(), matrix.cols());
    for (std::size_t r = 0; r < matrix.rows(); ++r) scaler.transform(matrix.row(r), out.row(r));
    return out;
}

nlohmann::json to_json(const Scaler& scaler) {
    return {{"mean", scaler.mean}, {"std", scaler.stddev}};
}

Scaler scaler_from_json(const nlohmann::json& j) {
    Scaler s{j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
    if (s.mean.size() != s.stddev.size()) throw DataError("scaler: size mismatch");
    return s;
}

nlohmann::json to_json(const IngestReport& report) {
    nlohmann::json rejected = nlohmann::json::array();
    for (const auto& r : report.rejected) rejected.push_back({{"row", r.row}, {"reason", r.reason}});
    nlohmann::json unassigned = nlohmann::json::array();
    for (const auto& r : report.unassigned) unassigned.push_back({{"row", r.row}, {"reason", r.reason}});
    nlohmann::json tiers = nlohmann::json::object();
    for (Tier t : kTiers) {
        const auto i = tier_index(t);
        nlohmann::json grades = nlohmann::json::object();
        for (int g = 0; g < kClassCount; ++g)
            grades["Grade " + std::to_string(g)] = report.tier_grade_counts[i][static_cast<std::size_t>(g)];
        tiers["tier" + std::to_string(tier_number(t))] = {{"subjects", report.tier_counts[i]}, {"grades", grades}};
    }
    return {{"total_rows", report.total_rows}, {"accepted", report.accepted}, {"rejected", rejected},
            {"unassigned", unassigned}, {"tiers", tiers}};
}

}  // namespace steatosis

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace steatosis {

enum class FeatureKind { continuous, categorical };

struct FeatureDescriptor {
    std::string_view name;
    FeatureKind kind;
    std::string_view unit;  // informational
};

inline constexpr std::size_t kFeatureCount = 22;
inline constexpr int kClassCount = 4;

// Canonical feature order. Tier t uses the leading prefix of this list, so
// shared features keep identical positions across tiers.
const std::array<FeatureDescriptor, kFeatureCount>& feature_registry();

// Index of a feature in the canonical order; nullopt for unknown names.
std::optional<std::size_t> feature_index(std::string_view name);

enum class Tier : int { one = 1, two = 2, three = 3 };

inline constexpr std::array<Tier, 3> kTiers{Tier::one, Tier::two, Tier::three};

constexpr int tier_number(Tier t) { return static_cast<int>(t); }
constexpr std::size_t tier_index(Tier t) { return static_cast<std::size_t>(t) - 1; }

std::optional<Tier> tier_from_int(int value);

class FeatureSet {
public:
    Tier tier() const { return tier_; }
    std::size_t size() const { return size_; }
    std::string_view name(std::size_t i) const;
    bool contains(std::string_view name) const;

    // First canonical index that is not part of the previous tier.
    std::size_t exclusive_begin() const;

private:
    friend const FeatureSet& feature_set(Tier);
    constexpr FeatureSet(Tier t, std::size_t n) : tier_(t), size_(n) {}

    Tier tier_;
    std::size_t size_;
};

const FeatureSet& feature_set(Tier tier);

// Grade 0 is non-NASH; grades 1..3 count as NASH positive.
constexpr bool is_nash(int grade) { return grade >= 1; }
constexpr bool valid_grade(int grade) { return grade >= 0 && grade < kClassCount; }

inline constexpr std::size_t kSexIndex = 1;
// F -> 0, M -> 1.
std::optional<double> encode_sex(std::string_view token);
std::string_view decode_sex(double code);

struct SubjectRecord {
    std::string id;
    std::array<std::optional<double>, kFeatureCount> values{};
    std::optional<int> label;

    bool has(std::size_t feature) const { return values[feature].has_value(); }
};

// Largest tier whose feature set is fully present.
std::optional<Tier> availability_tier(const SubjectRecord& record);

// Copies the first feature_set(tier).size() values; requires them present.
void tier_values(const SubjectRecord& record, Tier tier, std::span<double> out);

// Content hash of a record (id and values); used to detect overlap between tiers.
std::uint64_t record_fingerprint(const SubjectRecord& record);

}  // namespace steatosis

#include "steatosis/schema.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "steatosis/random.hpp"

namespace steatosis {

namespace {

using K = FeatureKind;

constexpr std::array<FeatureDescriptor, kFeatureCount> kRegistry{{
    // tier 1
    {"Age", K::continuous, "years"},
    {"Sex", K::categorical, "-"},
    {"FBS", K::continuous, "mg/dL"},
    {"AST", K::continuous, "IU/L"},
    {"ALT", K::continuous, "IU/L"},
    {"BilT", K::continuous, "mg/dL"},
    {"BilD", K::continuous, "mg/dL"},
    {"TG", K::continuous, "mg/dL"},
    {"Chol", K::continuous, "mg/dL"},
    {"LDL", K::continuous, "mg/dL"},
    {"HDL", K::continuous, "mg/dL"},
    {"ALB", K::continuous, "g/dL"},
    // tier 2
    {"WBC", K::continuous, "mm^3"},
    {"HB", K::continuous, "g/dL"},
    {"PLT", K::continuous, "uL"},
    {"FIB4", K::continuous, "-"},
    // tier 3
    {"Height", K::continuous, "cm"},
    {"Weight", K::continuous, "kg"},
    {"BMI", K::continuous, "kg/m^2"},
    {"Waist", K::continuous, "cm"},
    {"Hip", K::continuous, "cm"},
    {"WHRatio", K::continuous, "-"},
}};

constexpr std::array<std::size_t, 3> kTierSizes{12, 16, 22};

}  // namespace

const std::array<FeatureDescriptor, kFeatureCount>& feature_registry() { return kRegistry; }

std::optional<std::size_t> feature_index(std::string_view name) {
    for (std::size_t i = 0; i < kRegistry.size(); ++i)
        if (kRegistry[i].name == name) return i;
    return std::nullopt;
}

std::optional<Tier> tier_from_int(int value) {
    if (value < 1 || value > 3) return std::nullopt;
    return static_cast<Tier>(value);
}

std::string_view FeatureSet::name(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("FeatureSet::name");
    return kRegistry[i].name;
}

bool FeatureSet::contains(std::string_view name) const {
    auto idx = feature_index(name);
    return idx && *idx < size_;
}

std::size_t FeatureSet::exclusive_begin() const {
    return tier_ == Tier::one ? 0 : kTierSizes[tier_index(tier_) - 1];
}

const FeatureSet& feature_set(Tier tier) {
    static const std::array<FeatureSet, 3> sets{FeatureSet(Tier::one, kTierSizes[0]),
                                                FeatureSet(Tier::two, kTierSizes[1]),
                                                FeatureSet(Tier::three, kTierSizes[2])};
    return sets[tier_index(tier)];
}

std::optional<double> encode_sex(std::string_view token) {
    if (token == "F") return 0.0;
    if (token == "M") return 1.0;
    return std::nullopt;
}

std::string_view decode_sex(double code) { return code >= 0.5 ? "M" : "F"; }

std::optional<Tier> availability_tier(const SubjectRecord& record) {
    std::optional<Tier> best;
    for (Tier t : kTiers) {
        const auto& fs = feature_set(t);
        for (std::size_t i = 0; i < fs.size(); ++i)
            if (!record.has(i)) return best;
        best = t;
    }
    return best;
}

void tier_values(const SubjectRecord& record, Tier tier, std::span<double> out) {
    const auto n = feature_set(tier).size();
    if (out.size() != n) throw std::invalid_argument("tier_values: output width mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!record.values[i]) throw std::invalid_argument("tier_values: missing " + std::string(kRegistry[i].name));
        out[i] = *record.values[i];
    }
}

std::uint64_t record_fingerprint(const SubjectRecord& record) {
    std::uint64_t h = fnv1a64(record.id);
    for (const auto& v : record.values) {
        unsigned char buf[9]{};
        if (v) {
            buf[0] = 1;
            auto bits = std::bit_cast<std::uint64_t>(*v);
            std::memcpy(buf + 1, &bits, 8);
        }
        h = fnv1a64(std::string_view(reinterpret_cast<const char*>(buf), sizeof buf), h);
    }
    return h;
}

}  // namespace steatosis

#ifndef PROBEKIT_ETYPE_H_
#define PROBEKIT_ETYPE_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace probekit {

// The eighteen OntoNotes named-entity types plus the "unknown" label.
enum class EtypeLabel {
  kPerson,
  kNorp,
  kFac,
  kOrg,
  kGpe,
  kLoc,
  kProduct,
  kEvent,
  kWorkOfArt,
  kLaw,
  kLanguage,
  kDate,
  kTime,
  kPercent,
  kMoney,
  kQuantity,
  kOrdinal,
  kCardinal,
  kUnknown,
};

inline constexpr size_t kNumEtypes = 19;

inline constexpr std::array<std::string_view, kNumEtypes> kEtypeNames = {
    "PERSON", "NORP",     "FAC",     "ORG",     "GPE",        "LOC",
    "PRODUCT", "EVENT",   "WORK_OF_ART", "LAW", "LANGUAGE",   "DATE",
    "TIME",   "PERCENT",  "MONEY",   "QUANTITY", "ORDINAL",   "CARDINAL",
    "UNK_ETYPE"};

inline std::string_view EtypeName(EtypeLabel label) {
  return kEtypeNames[static_cast<size_t>(label)];
}

std::optional<EtypeLabel> ParseEtype(std::string_view name);

// True for the eighteen entity types (UNK_ETYPE excluded).
inline bool IsEntityType(std::string_view name) {
  auto label = ParseEtype(name);
  return label.has_value() && *label != EtypeLabel::kUnknown;
}

}  // namespace probekit

#endif  // PROBEKIT_ETYPE_H_

#pragma once

#include <array>
#include <string>
#include <string_view>

#include "microeval/errors.hpp"

namespace microeval {

// Which oracle material is injected into the answer prompt. NoOracle leaves
// every subtask to the model; OracleElicitation injects the oracle facts so
// only reasoning and composing remain; OracleReasoning injects the oracle
// conclusions so only composing remains.
enum class PromptSetting {
    NoOracle,
    OracleElicitation,
    OracleReasoning,
};

inline constexpr std::array<PromptSetting, 3> kAllSettings = {
    PromptSetting::NoOracle,
    PromptSetting::OracleElicitation,
    PromptSetting::OracleReasoning,
};

inline std::string to_string(PromptSetting s) {
    switch (s) {
        case PromptSetting::NoOracle: return "no-oracle";
        case PromptSetting::OracleElicitation: return "oracle-elicitation";
        case PromptSetting::OracleReasoning: return "oracle-reasoning";
    }
    return "unknown";
}

inline PromptSetting setting_from_string(std::string_view name) {
    if (name == "no-oracle") return PromptSetting::NoOracle;
    if (name == "oracle-elicitation") return PromptSetting::OracleElicitation;
    if (name == "oracle-reasoning") return PromptSetting::OracleReasoning;
    throw UsageError("unknown prompt setting: '" + std::string(name) +
                     "' (expected no-oracle, oracle-elicitation, or oracle-reasoning)");
}

}  // namespace microeval

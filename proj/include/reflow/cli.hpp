#pragma once

#include "reflow/project.hpp"

#include <optional>
#include <string>

namespace reflow::cli {

/// Exit codes: 0 success/property holds, 1 property fails / not bisimilar,
/// 2 usage or parse error, 3 resource bound exceeded.
struct CmdResult {
    int code = 0;
    std::string output;
};

struct SimulateArgs {
    std::string workflow;
    std::string choices; // "InventoryCheck=true,CreditCheck=false,..."
    std::uint64_t seed = 0;
    std::optional<std::string> reconfigure_after;
    std::optional<std::string> target;
};

wf::Choices parse_choices(const std::string& text);

CmdResult cmd_canonicalize(const proj::Project& p, const std::string& name,
                           const std::string& format = "text");
CmdResult cmd_equiv(const proj::Project& p, const std::string& a, const std::string& b,
                    const std::string& format = "text");
CmdResult cmd_histories(const proj::Project& p, const std::string& name,
                        const std::string& format = "text", std::size_t bound = 16);
CmdResult cmd_safe_reconfig(const proj::Project& p, const std::string& spec,
                            const std::string& format = "text", std::size_t bound = 16);
CmdResult cmd_guideline(const proj::Project& p, const std::string& spec,
                        const std::set<std::string>& forbidden,
                        const std::string& format = "text", std::size_t bound = 16);
CmdResult cmd_simulate(const proj::Project& p, const SimulateArgs& args,
                       const std::string& format = "text");
CmdResult cmd_bisim(const proj::Project& p, const std::string& kind, const std::string& lhs,
                    const std::string& rhs, const std::string& format = "text");
CmdResult cmd_ltl(const proj::Project& p, const std::string& formula, const SimulateArgs& run,
                  const std::string& format = "text");
CmdResult cmd_lts(const proj::Project& p, const std::string& name, bool true_concurrency,
                  bool dot, const std::string& format = "text");

} // namespace reflow::cli

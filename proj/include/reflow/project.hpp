#pragma once

#include "reflow/bdd.hpp"
#include "reflow/ccsdp.hpp"
#include "reflow/cpog.hpp"
#include "reflow/cpog_reconfig.hpp"
#include "reflow/ltl.hpp"
#include "reflow/workflow.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>

namespace reflow::proj {

/// One analysis context loaded from a project file. Sections:
///   alphabet A B ...          action names
///   vars x y ...              Boolean variables
///   control x = A             variable x is set by action A
///   cpog NAME = expr          graph-family definition (may reference earlier names)
///   reconfig NAME = r : flag from CPOG to CPOG
///   orderids o1 o2 ...        the finite order-id set for process sums
///   process NAME := term      process definition (forward references allowed)
///   workflow NAME = simple(...)/branch(...)/par(...)/end
///   formula NAME = ltl expr
class Project {
public:
    static Project load(const std::string& path);
    static Project parse_text(std::string_view text);

    Project(Project&&) = default;
    Project& operator=(Project&&) = default;

    const bdd::Context& ctx() const;

    std::set<std::string> alphabet;
    cpog::ControlMap controls;
    std::map<std::string, cpog::ExprPtr> cpogs;
    std::map<std::string, cpog::ReconfigSpec> reconfigs;
    std::map<std::string, wf::Workflow> workflows;
    std::map<std::string, ltl::FormulaPtr> formulas;
    std::shared_ptr<ccsdp::System> system;
    std::map<std::string, ccsdp::TermId> process_roots;

    /// A cpog definition or a reconfig spec's combined expression.
    cpog::ExprPtr cpog_by_name(const std::string& name) const;
    const cpog::ReconfigSpec& reconfig_by_name(const std::string& name) const;
    wf::Workflow workflow_by_name(const std::string& name) const;
    ccsdp::TermId process_by_name(const std::string& name) const;
    ltl::FormulaPtr formula_by_name(const std::string& name) const;

private:
    Project() = default;
    std::unique_ptr<bdd::Context> ctx_;
};

} // namespace reflow::proj

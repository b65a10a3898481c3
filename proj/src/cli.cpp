#include "reflow/cli.hpp"

#include "reflow/cpog_lts.hpp"

#include <json.hpp>

#include <sstream>

namespace reflow::cli {

using json = nlohmann::ordered_json;

namespace {

std::string history_str(const cpog::History& h) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& a : h) {
        if (!first) os << ",";
        first = false;
        os << a;
    }
    os << "}";
    return os.str();
}

json canonical_json(const cpog::CanonicalForm& cf) {
    json verts = json::object();
    for (const auto& [a, f] : cf.vertices)
        verts[a] = f.to_string();
    json arcs = json::array();
    for (const auto& [ab, f] : cf.arcs)
        arcs.push_back({{"from", ab.first}, {"to", ab.second}, {"cond", f.to_string()}});
    return json{{"vertices", verts}, {"arcs", arcs}};
}

} // namespace

wf::Choices parse_choices(const std::string& text) {
    bool inventory = true, credit = true, supplier = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos)
            end = text.size();
        std::string item = text.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty())
            continue;
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw ParseError("choices must be Action=true/false pairs: " + item);
        std::string name = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        bool v;
        if (value == "true")
            v = true;
        else if (value == "false")
            v = false;
        else
            throw ParseError("bad choice value: " + value);
        if (name == "InventoryCheck")
            inventory = v;
        else if (name == "CreditCheck")
            credit = v;
        else if (name == "SupplierCheck")
            supplier = v;
        else
            throw ParseError("not an external choice action: " + name);
    }
    return wf::Choices(inventory, credit, supplier);
}

CmdResult cmd_canonicalize(const proj::Project& p, const std::string& name,
                           const std::string& format) {
    auto expr = p.cpog_by_name(name);
    cpog::CanonicalForm cf =
        cpog::transitive_reduce(cpog::canonicalize(expr, p.ctx()), p.ctx());
    if (format == "json")
        return {0, canonical_json(cf).dump(2) + "\n"};
    return {0, cf.to_listing()};
}

CmdResult cmd_equiv(const proj::Project& p, const std::string& a, const std::string& b,
                    const std::string& format) {
    auto diff = cpog::first_difference(p.cpog_by_name(a), p.cpog_by_name(b), p.ctx());
    if (format == "json") {
        json j{{"equivalent", !diff.has_value()}};
        if (diff)
            j["difference"] = {{"where", diff->where}, {"left", diff->left},
                               {"right", diff->right}};
        return {diff ? 1 : 0, j.dump(2) + "\n"};
    }
    if (!diff)
        return {0, "equivalent\n"};
    return {1, "not equivalent: differ at " + diff->where + " ([" + diff->left + "] vs [" +
                   diff->right + "])\n"};
}

CmdResult cmd_histories(const proj::Project& p, const std::string& name,
                        const std::string& format, std::size_t bound) {
    auto expr = p.cpog_by_name(name);
    cpog::ReconfigBounds b;
    b.max_actions = bound;
    auto histories = cpog::enumerate_consistent(expr, p.ctx(), b);
    cpog::CanonicalForm closed =
        cpog::transitive_close(cpog::canonicalize(expr, p.ctx()), p.ctx());
    if (format == "json") {
        json arr = json::array();
        for (const auto& h : histories) {
            json names = json::array();
            for (const auto& a : h)
                names.push_back(a);
            arr.push_back({{"history", names},
                           {"condition", cpog::consistency(h, closed, p.ctx()).to_string()}});
        }
        return {0, json{{"count", histories.size()}, {"histories", arr}}.dump(2) + "\n"};
    }
    std::ostringstream os;
    for (const auto& h : histories)
        os << history_str(h) << " : "
           << cpog::consistency(h, closed, p.ctx()).to_string() << "\n";
    os << "total " << histories.size() << " consistent histories\n";
    return {0, os.str()};
}

CmdResult cmd_safe_reconfig(const proj::Project& p, const std::string& spec,
                            const std::string& format, std::size_t bound) {
    const auto& rs = p.reconfig_by_name(spec);
    cpog::ReconfigBounds b;
    b.max_actions = bound;
    auto safe = cpog::safe_histories(rs, p.ctx(), b);
    std::vector<cpog::History> sorted(safe.begin(), safe.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const cpog::History& x, const cpog::History& y) {
                         if (x.size() != y.size())
                             return x.size() < y.size();
                         return x < y;
                     });
    if (format == "json") {
        json arr = json::array();
        for (const auto& h : sorted) {
            json names = json::array();
            for (const auto& a : h)
                names.push_back(a);
            arr.push_back({{"history", names},
                           {"condition",
                            cpog::reconfiguration_condition(rs, h, p.ctx()).to_string()}});
        }
        return {0, json{{"count", sorted.size()}, {"safe_histories", arr}}.dump(2) + "\n"};
    }
    std::ostringstream os;
    for (const auto& h : sorted)
        os << history_str(h) << " : "
           << cpog::reconfiguration_condition(rs, h, p.ctx()).to_string() << "\n";
    os << "total " << sorted.size() << " safe reconfiguration histories\n";
    return {0, os.str()};
}

CmdResult cmd_guideline(const proj::Project& p, const std::string& spec,
                        const std::set<std::string>& forbidden, const std::string& format,
                        std::size_t bound) {
    const auto& rs = p.reconfig_by_name(spec);
    for (const auto& a : forbidden)
        if (!p.alphabet.count(a))
            throw NameError("forbidden action not in alphabet: " + a);
    cpog::ReconfigBounds b;
    b.max_actions = bound;
    auto res = cpog::check_forbidden_guideline(rs, forbidden, p.ctx(), b);
    if (format == "json") {
        json j{{"holds", res.holds}};
        if (res.counterexample) {
            json names = json::array();
            for (const auto& a : *res.counterexample)
                names.push_back(a);
            j["counterexample"] = names;
        }
        return {res.holds ? 0 : 1, j.dump(2) + "\n"};
    }
    if (res.holds)
        return {0, "PASS: every consistent history avoiding the forbidden actions is a safe "
                   "reconfiguration history\n"};
    return {1, "FAIL: counterexample history " + history_str(*res.counterexample) + "\n"};
}

namespace {

wf::ScenarioResult run_from_args(const proj::Project& p, const SimulateArgs& args) {
    wf::ScenarioOptions opts;
    opts.start = p.workflow_by_name(args.workflow);
    opts.choices = parse_choices(args.choices);
    opts.picker = wf::seeded_order_picker(args.seed);
    if (args.reconfigure_after) {
        auto a = wf::action_from_string(*args.reconfigure_after);
        if (!a)
            throw NameError("unknown action: " + *args.reconfigure_after);
        opts.reconfigure_after = *a;
        if (!args.target)
            throw ParseError("--reconfigure-after requires --target");
        opts.target = p.workflow_by_name(*args.target);
    }
    return wf::run_scenario(opts);
}

} // namespace

CmdResult cmd_simulate(const proj::Project& p, const SimulateArgs& args,
                       const std::string& format) {
    auto res = run_from_args(p, args);
    if (format == "json") {
        json lines = json::array();
        for (const auto& l : res.lines)
            lines.push_back(l);
        json j{{"ok", res.ok}, {"lines", lines}};
        if (res.ok)
            j["trace"] = wf::to_string(res.final_trace);
        return {res.ok ? 0 : 1, j.dump(2) + "\n"};
    }
    std::ostringstream os;
    for (const auto& l : res.lines)
        os << l << "\n";
    return {res.ok ? 0 : 1, os.str()};
}

CmdResult cmd_bisim(const proj::Project& p, const std::string& kind, const std::string& lhs,
                    const std::string& rhs, const std::string& format) {
    auto& sys = *p.system;
    ccsdp::TermId a = sys.parse(lhs);
    ccsdp::TermId b = sys.parse(rhs);
    if (kind == "strong-of") {
        bool r = sys.strong_of_bisim(a, b);
        if (format == "json")
            return {r ? 0 : 1, json{{"bisimilar", r}}.dump(2) + "\n"};
        return {r ? 0 : 1, std::string(r ? "strongly of-bisimilar" : "NOT strongly of-bisimilar") + "\n"};
    }
    if (kind != "weak")
        throw ParseError("bisim kind must be strong-of or weak");
    auto v = sys.weak_obs_bisim(a, b);
    if (format == "json") {
        json j{{"bisimilar", v.bisimilar}};
        json ws = json::array();
        for (const auto& w : v.witnesses) {
            json seq = json::array();
            for (const auto& l : w.sequence)
                seq.push_back(l);
            ws.push_back({{"sequence", seq}, {"side", w.side == 0 ? "left" : "right"}});
        }
        if (!v.bisimilar)
            j["witnesses"] = ws;
        return {v.bisimilar ? 0 : 1, j.dump(2) + "\n"};
    }
    std::ostringstream os;
    if (v.bisimilar) {
        os << "weakly observationally bisimilar\n";
        return {0, os.str()};
    }
    os << "NOT weakly observationally bisimilar\n";
    for (const auto& w : v.witnesses) {
        os << "witness (" << (w.side == 0 ? "left" : "right") << " only): ";
        for (std::size_t i = 0; i < w.sequence.size(); ++i) {
            if (i) os << " ";
            os << w.sequence[i];
        }
        os << "\n";
    }
    return {1, os.str()};
}

CmdResult cmd_ltl(const proj::Project& p, const std::string& formula, const SimulateArgs& run,
                  const std::string& format) {
    auto f = p.formula_by_name(formula);
    auto res = run_from_args(p, run);
    if (!res.ok)
        throw Error("run did not complete; cannot model check it");
    bool holds = ltl::check(ltl::trace_to_kripke(res.run), f);
    if (format == "json") {
        json j{{"holds", holds}, {"trace", wf::to_string(res.final_trace)}};
        return {holds ? 0 : 1, j.dump(2) + "\n"};
    }
    std::ostringstream os;
    os << wf::to_string(res.final_trace) << "\n" << (holds ? "holds" : "fails") << "\n";
    return {holds ? 0 : 1, os.str()};
}

CmdResult cmd_lts(const proj::Project& p, const std::string& name, bool true_concurrency,
                  bool dot, const std::string& format) {
    auto expr = p.cpog_by_name(name);
    cpog::CanonicalForm cf =
        cpog::transitive_reduce(cpog::canonicalize(expr, p.ctx()), p.ctx());
    auto lts = cpog::reachable(cf, p.controls, p.ctx(), true_concurrency);
    if (dot)
        return {0, lts.to_dot()};
    if (format == "json") {
        json j{{"states", lts.states.size()},
               {"transitions", lts.transitions.size()},
               {"deadlocked", lts.deadlocked.size()}};
        return {0, j.dump(2) + "\n"};
    }
    return {0, lts.to_text()};
}

} // namespace reflow::cli

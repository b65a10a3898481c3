// Command-line frontend for the workflow reconfiguration verification toolkit.

#include "reflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace reflow;

namespace {

struct Common {
    std::string file;
    std::string format = "text";
    std::uint64_t seed = 0;
    std::size_t bound = 16;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--file", c.file, "project file")->required();
    cmd->add_option("--format", c.format, "output format: text|json")
        ->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--seed", c.seed, "seed for interleaving choices");
    cmd->add_option("--bound", c.bound, "history enumeration bound");
}

int finish(const cli::CmdResult& r) {
    std::cout << r.output;
    return r.code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"verification toolkit for dynamically reconfigurable workflows"};
    app.require_subcommand(1);

    Common c;
    std::string name, lhs, rhs, kind, formula, forbidden_csv;
    cli::SimulateArgs sim;
    bool true_conc = false, dot = false;

    auto* canon = app.add_subcommand("canonicalize", "print the reduced canonical form");
    add_common(canon, c);
    canon->add_option("name", name)->required();

    auto* equiv = app.add_subcommand("equiv", "compare two graph families");
    add_common(equiv, c);
    equiv->add_option("lhs", lhs)->required();
    equiv->add_option("rhs", rhs)->required();

    auto* hist = app.add_subcommand("histories", "enumerate consistent histories");
    add_common(hist, c);
    hist->add_option("name", name)->required();

    auto* safe = app.add_subcommand("safe-reconfig", "enumerate safe reconfiguration histories");
    add_common(safe, c);
    safe->add_option("spec", name)->required();

    auto* guide = app.add_subcommand("guideline-check", "verify a forbidden-action guideline");
    add_common(guide, c);
    guide->add_option("spec", name)->required();
    guide->add_option("--forbidden", forbidden_csv, "comma-separated forbidden actions");

    auto* simc = app.add_subcommand("simulate", "execute a workflow");
    add_common(simc, c);
    simc->add_option("--workflow", sim.workflow)->required();
    simc->add_option("--choices", sim.choices, "Action=true/false,...");
    std::string reconf_after, target;
    simc->add_option("--reconfigure-after,--reconfigure-at", reconf_after,
                     "reconfigure right after this action occurs");
    simc->add_option("--target", target, "replacement workflow");

    auto* bisim = app.add_subcommand("bisim", "check process equivalence");
    add_common(bisim, c);
    bisim->add_option("--kind", kind, "strong-of|weak")
        ->required()
        ->check(CLI::IsMember({"strong-of", "weak"}));
    bisim->add_option("lhs", lhs)->required();
    bisim->add_option("rhs", rhs)->required();

    auto* ltlc = app.add_subcommand("ltl", "model check a run against a formula");
    add_common(ltlc, c);
    ltlc->add_option("--formula", formula)->required();
    ltlc->add_option("--workflow", sim.workflow)->required();
    ltlc->add_option("--choices", sim.choices);
    ltlc->add_option("--reconfigure-after,--reconfigure-at", reconf_after,
                     "reconfigure right after this action occurs");
    ltlc->add_option("--target", target, "replacement workflow");

    auto* ltsc = app.add_subcommand("lts", "derive the reachable transition system");
    add_common(ltsc, c);
    ltsc->add_option("name", name)->required();
    ltsc->add_flag("--true-concurrency", true_conc, "action-set transitions");
    ltsc->add_flag("--dot", dot, "emit a dot digraph");

    CLI11_PARSE(app, argc, argv);

    try {
        proj::Project p = proj::Project::load(c.file);
        sim.seed = c.seed;
        if (!reconf_after.empty())
            sim.reconfigure_after = reconf_after;
        if (!target.empty())
            sim.target = target;

        if (canon->parsed())
            return finish(cli::cmd_canonicalize(p, name, c.format));
        if (equiv->parsed())
            return finish(cli::cmd_equiv(p, lhs, rhs, c.format));
        if (hist->parsed())
            return finish(cli::cmd_histories(p, name, c.format, c.bound));
        if (safe->parsed())
            return finish(cli::cmd_safe_reconfig(p, name, c.format, c.bound));
        if (guide->parsed()) {
            std::set<std::string> forbidden;
            std::size_t pos = 0;
            while (pos <= forbidden_csv.size() && !forbidden_csv.empty()) {
                std::size_t end = forbidden_csv.find(',', pos);
                if (end == std::string::npos)
                    end = forbidden_csv.size();
                if (end > pos)
                    forbidden.insert(forbidden_csv.substr(pos, end - pos));
                pos = end + 1;
                if (pos > forbidden_csv.size())
                    break;
            }
            return finish(cli::cmd_guideline(p, name, forbidden, c.format, c.bound));
        }
        if (simc->parsed())
            return finish(cli::cmd_simulate(p, sim, c.format));
        if (bisim->parsed())
            return finish(cli::cmd_bisim(p, kind, lhs, rhs, c.format));
        if (ltlc->parsed())
            return finish(cli::cmd_ltl(p, formula, sim, c.format));
        if (ltsc->parsed())
            return finish(cli::cmd_lts(p, name, true_conc, dot, c.format));
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const BoundError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NameError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

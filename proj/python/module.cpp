// Python bindings exposing the main operations of the toolkit over a loaded
// project file.

#include "reflow/cli.hpp"
#include "reflow/cpog_lts.hpp"
#include "reflow/project.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace reflow;

namespace {

class PyProject {
public:
    explicit PyProject(const std::string& path) : p_(proj::Project::load(path)) {}

    std::string canonicalize(const std::string& name) {
        return cli::cmd_canonicalize(p_, name).output;
    }

    bool cpog_equivalent(const std::string& a, const std::string& b) {
        return cpog::equivalent(p_.cpog_by_name(a), p_.cpog_by_name(b), p_.ctx());
    }

    std::vector<std::vector<std::string>> histories(const std::string& name) {
        std::vector<std::vector<std::string>> out;
        for (const auto& h : cpog::enumerate_consistent(p_.cpog_by_name(name), p_.ctx()))
            out.emplace_back(h.begin(), h.end());
        return out;
    }

    std::vector<std::vector<std::string>> safe_histories(const std::string& spec) {
        std::vector<std::vector<std::string>> out;
        for (const auto& h : cpog::safe_histories(p_.reconfig_by_name(spec), p_.ctx()))
            out.emplace_back(h.begin(), h.end());
        return out;
    }

    py::dict guideline_check(const std::string& spec, const std::set<std::string>& forbidden) {
        auto res =
            cpog::check_forbidden_guideline(p_.reconfig_by_name(spec), forbidden, p_.ctx());
        py::dict out;
        out["holds"] = res.holds;
        if (res.counterexample)
            out["counterexample"] = std::vector<std::string>(res.counterexample->begin(),
                                                             res.counterexample->end());
        return out;
    }

    std::vector<std::string> tracesof(const std::string& workflow) {
        std::vector<std::string> out;
        for (const auto& t : wf::tracesof(p_.workflow_by_name(workflow)))
            out.push_back(wf::to_string(t));
        return out;
    }

    py::dict simulate(const std::string& workflow, const std::string& choices,
                      std::uint64_t seed, const std::string& reconfigure_after,
                      const std::string& target) {
        cli::SimulateArgs args;
        args.workflow = workflow;
        args.choices = choices;
        args.seed = seed;
        if (!reconfigure_after.empty())
            args.reconfigure_after = reconfigure_after;
        if (!target.empty())
            args.target = target;
        auto res = cli::cmd_simulate(p_, args);
        py::dict out;
        out["ok"] = res.code == 0;
        out["output"] = res.output;
        return out;
    }

    py::dict bisim(const std::string& kind, const std::string& lhs, const std::string& rhs) {
        auto& sys = *p_.system;
        py::dict out;
        if (kind == "strong-of") {
            out["bisimilar"] = sys.strong_of_bisim(sys.parse(lhs), sys.parse(rhs));
            return out;
        }
        auto v = sys.weak_obs_bisim(sys.parse(lhs), sys.parse(rhs));
        out["bisimilar"] = v.bisimilar;
        std::vector<py::dict> witnesses;
        for (const auto& w : v.witnesses) {
            py::dict wd;
            wd["sequence"] = w.sequence;
            wd["side"] = w.side == 0 ? "left" : "right";
            witnesses.push_back(std::move(wd));
        }
        out["witnesses"] = witnesses;
        return out;
    }

    unsigned sfdrdepth(const std::string& term) {
        return p_.system->sfdrdepth(p_.system->parse(term));
    }

    py::dict ltl_check(const std::string& formula, const std::string& workflow,
                       const std::string& choices, std::uint64_t seed,
                       const std::string& reconfigure_after, const std::string& target) {
        cli::SimulateArgs args;
        args.workflow = workflow;
        args.choices = choices;
        args.seed = seed;
        if (!reconfigure_after.empty())
            args.reconfigure_after = reconfigure_after;
        if (!target.empty())
            args.target = target;
        auto res = cli::cmd_ltl(p_, formula, args);
        py::dict out;
        out["holds"] = res.code == 0;
        out["output"] = res.output;
        return out;
    }

private:
    proj::Project p_;
};

} // namespace

PYBIND11_MODULE(pyreflow, m) {
    m.doc() = "verification toolkit for dynamically reconfigurable workflows";

    // translators run newest-first, so the subclass goes second
    py::register_exception<Error>(m, "ReflowError");
    py::register_exception<BoundError>(m, "BoundError");

    py::class_<PyProject>(m, "Project")
        .def(py::init<const std::string&>(), py::arg("path"))
        .def("canonicalize", &PyProject::canonicalize, py::arg("name"),
             "reduced canonical form listing of a graph family")
        .def("cpog_equivalent", &PyProject::cpog_equivalent, py::arg("lhs"), py::arg("rhs"))
        .def("histories", &PyProject::histories, py::arg("name"),
             "all consistent histories, smallest first")
        .def("safe_histories", &PyProject::safe_histories, py::arg("spec"))
        .def("guideline_check", &PyProject::guideline_check, py::arg("spec"),
             py::arg("forbidden"))
        .def("tracesof", &PyProject::tracesof, py::arg("workflow"))
        .def("simulate", &PyProject::simulate, py::arg("workflow"), py::arg("choices") = "",
             py::arg("seed") = 0, py::arg("reconfigure_after") = "", py::arg("target") = "")
        .def("bisim", &PyProject::bisim, py::arg("kind"), py::arg("lhs"), py::arg("rhs"))
        .def("sfdrdepth", &PyProject::sfdrdepth, py::arg("term"))
        .def("ltl_check", &PyProject::ltl_check, py::arg("formula"), py::arg("workflow"),
             py::arg("choices") = "", py::arg("seed") = 0, py::arg("reconfigure_after") = "",
             py::arg("target") = "");

    m.def("load_project", [](const std::string& path) { return PyProject(path); },
          py::arg("path"));
}

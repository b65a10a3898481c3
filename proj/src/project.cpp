#include "reflow/project.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace reflow::proj {

namespace {

const std::set<std::string> kKeywords = {
    "alphabet", "vars", "control", "cpog", "reconfig",
    "orderids", "process", "workflow", "formula",
};

std::string strip_comments(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool comment = false;
    for (char c : text) {
        if (c == '#')
            comment = true;
        if (c == '\n')
            comment = false;
        out.push_back(comment ? ' ' : c);
    }
    return out;
}

struct Scanner {
    std::string text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }
    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }
    bool at_ident() {
        skip_ws();
        return pos < text.size() &&
               (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_');
    }
    /// True when the next token is a plain identifier, not a section keyword.
    bool at_plain_ident() {
        if (!at_ident())
            return false;
        std::size_t save = pos;
        std::string word = ident();
        pos = save;
        return !kKeywords.count(word);
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos)
            throw ParseError("expected identifier at offset " + std::to_string(pos));
        return text.substr(start, pos - start);
    }
    void expect(char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c)
            throw ParseError(std::string("expected '") + c + "' at offset " +
                             std::to_string(pos));
        ++pos;
    }
    /// Raw text up to the next top-level section keyword or end of input.
    std::string until_next_keyword() {
        skip_ws();
        std::size_t start = pos;
        int depth = 0;
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '(' || c == '[' || c == '{')
                ++depth;
            else if (c == ')' || c == ']' || c == '}')
                --depth;
            else if (depth == 0 &&
                     (std::isalpha(static_cast<unsigned char>(c)) || c == '_')) {
                std::size_t wstart = pos;
                std::size_t wend = pos;
                while (wend < text.size() &&
                       (std::isalnum(static_cast<unsigned char>(text[wend])) ||
                        text[wend] == '_'))
                    ++wend;
                std::string word = text.substr(wstart, wend - wstart);
                if (kKeywords.count(word) && wstart != start) {
                    pos = wstart;
                    return text.substr(start, wstart - start);
                }
                pos = wend;
                continue;
            }
            ++pos;
        }
        return text.substr(start, pos - start);
    }
};

wf::Workflow parse_workflow_expr(Scanner& sc) {
    std::string head = sc.ident();
    if (head == "end")
        return nullptr;
    auto action = [&](const std::string& name) {
        auto a = wf::action_from_string(name);
        if (!a)
            throw NameError("unknown workflow action: " + name);
        return *a;
    };
    if (head == "simple") {
        sc.expect('(');
        wf::Action a = action(sc.ident());
        sc.expect(',');
        wf::Workflow next = parse_workflow_expr(sc);
        sc.expect(')');
        return wf::Element::simple(a, next);
    }
    if (head == "branch") {
        sc.expect('(');
        wf::Action a = action(sc.ident());
        sc.expect(',');
        wf::Workflow t = parse_workflow_expr(sc);
        sc.expect(',');
        wf::Workflow f = parse_workflow_expr(sc);
        sc.expect(')');
        return wf::Element::branch(a, t, f);
    }
    if (head == "par") {
        sc.expect('(');
        wf::Action b1 = action(sc.ident());
        sc.expect(',');
        wf::Action b2 = action(sc.ident());
        sc.expect(',');
        wf::Workflow next = parse_workflow_expr(sc);
        sc.expect(')');
        return wf::Element::par(b1, b2, next);
    }
    throw ParseError("expected workflow constructor, got: " + head);
}

} // namespace

const bdd::Context& Project::ctx() const {
    if (!ctx_)
        throw InvariantError("project declares no variables");
    return *ctx_;
}

cpog::ExprPtr Project::cpog_by_name(const std::string& name) const {
    auto it = cpogs.find(name);
    if (it != cpogs.end())
        return it->second;
    auto rit = reconfigs.find(name);
    if (rit != reconfigs.end())
        return rit->second.combined;
    throw NameError("unknown cpog: " + name);
}

const cpog::ReconfigSpec& Project::reconfig_by_name(const std::string& name) const {
    auto it = reconfigs.find(name);
    if (it == reconfigs.end())
        throw NameError("unknown reconfig spec: " + name);
    return it->second;
}

wf::Workflow Project::workflow_by_name(const std::string& name) const {
    auto it = workflows.find(name);
    if (it == workflows.end())
        throw NameError("unknown workflow: " + name);
    return it->second;
}

ccsdp::TermId Project::process_by_name(const std::string& name) const {
    auto it = process_roots.find(name);
    if (it == process_roots.end())
        throw NameError("unknown process: " + name);
    return it->second;
}

ltl::FormulaPtr Project::formula_by_name(const std::string& name) const {
    auto it = formulas.find(name);
    if (it != formulas.end())
        return it->second;
    // fall back to the formula DSL (covers CF1/CF2/RF and inline atoms)
    return ltl::parse_formula(name);
}

Project Project::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open project file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_text(os.str());
}

Project Project::parse_text(std::string_view text) {
    Project p;
    p.system = std::make_shared<ccsdp::System>();
    Scanner sc{strip_comments(text), 0};

    // First pass: declare process names so bodies can reference forward.
    {
        Scanner pre = sc;
        while (!pre.at_end()) {
            if (!pre.at_ident()) {
                ++pre.pos;
                continue;
            }
            std::string word = pre.ident();
            if (word == "process") {
                std::string name = pre.ident();
                p.system->declare(name);
            } else if (kKeywords.count(word)) {
                pre.until_next_keyword();
            } else {
                pre.until_next_keyword();
            }
        }
    }

    std::vector<std::string> vars;
    auto ensure_ctx = [&p]() {
        if (!p.ctx_)
            p.ctx_ = std::make_unique<bdd::Context>(std::vector<std::string>{});
    };
    while (!sc.at_end()) {
        std::string section = sc.ident();
        if (section == "alphabet") {
            while (sc.at_plain_ident())
                p.alphabet.insert(sc.ident());
        } else if (section == "vars") {
            while (sc.at_plain_ident())
                vars.push_back(sc.ident());
            p.ctx_ = std::make_unique<bdd::Context>(vars);
        } else if (section == "control") {
            std::string var = sc.ident();
            sc.expect('=');
            std::string action = sc.ident();
            if (!p.alphabet.count(action))
                throw NameError("control action not in alphabet: " + action);
            p.controls.set(var, action);
        } else if (section == "cpog") {
            std::string name = sc.ident();
            sc.expect('=');
            std::string body = sc.until_next_keyword();
            ensure_ctx();
            p.cpogs[name] = cpog::parse_expr(body, p.ctx(), p.controls, p.alphabet, p.cpogs);
        } else if (section == "reconfig") {
            std::string name = sc.ident();
            sc.expect('=');
            std::string action = sc.ident();
            sc.expect(':');
            std::string flag = sc.ident();
            if (sc.ident() != "from")
                throw ParseError("expected 'from' in reconfig definition");
            std::string from = sc.ident();
            if (sc.ident() != "to")
                throw ParseError("expected 'to' in reconfig definition");
            std::string to = sc.ident();
            if (!p.alphabet.count(action))
                throw NameError("reconfig action not in alphabet: " + action);
            ensure_ctx();
            p.reconfigs.emplace(name, cpog::make_reconfig_spec(p.ctx(), p.controls, action,
                                                               flag, p.cpog_by_name(from),
                                                               p.cpog_by_name(to)));
        } else if (section == "orderids") {
            std::vector<std::string> ids;
            while (sc.at_plain_ident())
                ids.push_back(sc.ident());
            p.system->set_order_ids(ids);
        } else if (section == "process") {
            std::string name = sc.ident();
            std::vector<std::string> params;
            sc.skip_ws();
            if (sc.pos < sc.text.size() && sc.text[sc.pos] == '(') {
                sc.expect('(');
                params.push_back(sc.ident());
                sc.skip_ws();
                while (sc.pos < sc.text.size() && sc.text[sc.pos] == ',') {
                    sc.expect(',');
                    params.push_back(sc.ident());
                    sc.skip_ws();
                }
                sc.expect(')');
            }
            sc.expect(':');
            sc.expect('=');
            std::string body = sc.until_next_keyword();
            ccsdp::TermId t = p.system->parse(body);
            p.system->define(name, params, t);
            if (params.empty())
                p.process_roots[name] = p.system->constant(name);
        } else if (section == "workflow") {
            std::string name = sc.ident();
            sc.expect('=');
            p.workflows[name] = parse_workflow_expr(sc);
        } else if (section == "formula") {
            std::string name = sc.ident();
            sc.expect('=');
            std::string body = sc.until_next_keyword();
            p.formulas[name] = ltl::parse_formula(body);
        } else {
            throw ParseError("unknown section keyword: " + section);
        }
    }
    return p;
}

} // namespace reflow::proj

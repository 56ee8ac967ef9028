#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "specnip/corpus.hpp"
#include "specnip/io.hpp"
#include "specnip/liveness.hpp"
#include "specnip/poison.hpp"
#include "specnip/regalloc.hpp"
#include "specnip/security.hpp"
#include "specnip/simulation.hpp"
#include "specnip/text.hpp"

namespace specnip {

namespace {

using json = nlohmann::ordered_json;

constexpr int exit_pass = 0;
constexpr int exit_violation = 1;
constexpr int exit_inconclusive = 2;
constexpr int exit_usage = 3;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string bounds;
    unsigned width = 0;
    std::string pairs = "exhaustive";
    std::uint64_t seed = 1;
    std::string format = "text";
};

struct Output {
    json j;
    std::ostringstream text;
};

std::string read_file(const std::string& path) {
    if (path.rfind("corpus:", 0) == 0) {
        auto c = corpus_file(path.substr(7));
        if (!c) throw UsageError("no bundled corpus file '" + path.substr(7) + "'");
        return *c;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw UsageError("cannot write '" + path + "'");
    o << content;
}

// Parse errors carry the file name.
template <class F>
auto parsing(const std::string& path, F&& f) {
    try {
        return f(read_file(path));
    } catch (const ParseError& e) {
        throw UsageError(path + ":" + e.what());
    }
}

Program load_program(const std::string& path, const Options& o) {
    Program p = parsing(path, [](const std::string& t) { return parse_program(t); });
    if (o.width) p = ProgramBuilder(p).width(o.width).build();
    return p;
}

State load_state(const Program& p, const std::string& path) {
    if (path.empty()) return initial_state(p);
    return parsing(path, [&](const std::string& t) { return parse_initial_state(p, t); });
}

std::vector<Directive> load_directives(const Program& p, const std::string& path) {
    return parsing(path, [&](const std::string& t) { return parse_directives(p, t); });
}

RAWitness load_witness(const Program& s, const Program& t, const std::string& path) {
    return parsing(path, [&](const std::string& x) { return parse_ra_witness(s, t, x); });
}

Bounds parse_bounds(const std::string& spec, Bounds b) {
    if (spec.empty()) return b;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("bad bounds entry '" + item + "'");
        const std::string key = item.substr(0, eq);
        unsigned v = 0;
        try {
            v = static_cast<unsigned>(std::stoul(item.substr(eq + 1)));
        } catch (const std::exception&) {
            throw UsageError("bad bounds value in '" + item + "'");
        }
        if (key == "steps") b.max_steps = v;
        else if (key == "depth") b.max_depth = v;
        else throw UsageError("unknown bounds key '" + key + "'");
    }
    if (b.max_depth < 1) throw UsageError("depth must be at least 1");
    return b;
}

PairSource parse_pairs(const Options& o) {
    if (o.pairs == "exhaustive") return PairSource::exhaustive();
    if (o.pairs.rfind("random:", 0) == 0) {
        try {
            return PairSource::sampled(std::stoul(o.pairs.substr(7)), o.seed);
        } catch (const std::exception&) {
        }
    }
    throw UsageError("--pairs expects exhaustive or random:<n>");
}

json bounds_json(const Bounds& b) { return {{"steps", b.max_steps}, {"depth", b.max_depth}}; }

json trace_json(const Program& p, const Trace& t) {
    json a = json::array();
    for (std::size_t k = 0; k < t.directives.size(); ++k)
        a.push_back({{"directive", format_directive(p, t.directives[k])},
                     {"leak", format_leak(t.leaks[k])}});
    return a;
}

json directives_json(const Program& p, const std::vector<Directive>& ds) {
    json a = json::array();
    for (const auto& d : ds) a.push_back(format_directive(p, d));
    return a;
}

std::string join_directives(const Program& p, const std::vector<Directive>& ds) {
    std::string s;
    for (const auto& d : ds) s += (s.empty() ? "" : " ") + format_directive(p, d);
    return s.empty() ? "(empty)" : s;
}

std::string poison_row(const PoisonType& pi, const Program& src) {
    std::string s;
    for (std::size_t r = 0; r < pi.regs.size(); ++r)
        s += (s.empty() ? "" : " ") + src.reg_name(RegId(r)) + "=" + to_char(pi.regs[r]);
    for (std::size_t c = 0; c < pi.cells.size(); ++c) {
        auto [v, o] = src.cell_at(c);
        s += " " + src.var(v).name + "[" + std::to_string(o) + "]=" + to_char(pi.cells[c]);
    }
    return s;
}

json poison_json(const PoisonType& pi, const Program& src) {
    json regs = json::object(), cells = json::object();
    for (std::size_t r = 0; r < pi.regs.size(); ++r)
        regs[src.reg_name(RegId(r))] = std::string(1, to_char(pi.regs[r]));
    for (std::size_t c = 0; c < pi.cells.size(); ++c) {
        auto [v, o] = src.cell_at(c);
        cells[src.var(v).name + "[" + std::to_string(o) + "]"] = std::string(1, to_char(pi.cells[c]));
    }
    return {{"regs", regs}, {"cells", cells}};
}

// ---------------------------------------------------------------------------------------------

struct Cli {
    Options opt;
    Output out;
    std::string cmd;

    void start(const std::string& c) {
        cmd = c;
        out.j["schema"] = 1;
        out.j["command"] = c;
    }

    int run(const std::string& prog, const std::string& state, const std::string& dirs) {
        start("run");
        Program p = load_program(prog, opt);
        State s = load_state(p, state);
        auto ds = load_directives(p, dirs);
        Execution e = run_directives(p, single(s), ds);
        const char* status = e.status == Execution::Status::stuck   ? "stuck"
                             : e.status == Execution::Status::final ? "final"
                                                                    : "completed";
        json steps = json::array();
        for (const auto& st : e.steps)
            steps.push_back({{"directive", format_directive(p, st.directive)},
                             {"leak", format_leak(st.leak)},
                             {"pcs", format_pc_stack(p, st.after)}});
        out.j["status"] = status;
        out.j["steps"] = steps;
        out.text << format_execution(p, e) << "status: " << status;
        if (e.status == Execution::Status::stuck) {
            out.j["stuck_index"] = e.stuck_index;
            out.text << " at directive " << e.stuck_index;
        }
        out.text << "\n";
        return e.status == Execution::Status::stuck ? exit_violation : exit_pass;
    }

    int explore(const std::string& prog, const std::string& state) {
        start("explore");
        Program p = load_program(prog, opt);
        Bounds b = parse_bounds(opt.bounds, {});
        BehaviorSet bs = explore_behaviors(p, single(load_state(p, state)), b);
        json term = json::array(), trunc = json::array();
        for (const auto& t : bs.terminated) {
            term.push_back(trace_json(p, t));
            out.text << "terminated: " << format_trace(p, t) << "\n";
        }
        for (const auto& t : bs.truncated) {
            trunc.push_back(trace_json(p, t));
            out.text << "truncated: " << format_trace(p, t) << "\n";
        }
        out.j["bounds"] = bounds_json(b);
        out.j["terminated"] = term;
        out.j["truncated"] = trunc;
        return bs.truncated.empty() ? exit_pass : exit_inconclusive;
    }

    int check_safe(const std::string& prog, const std::string& state) {
        start("check-safe");
        Program p = load_program(prog, opt);
        Bounds b = parse_bounds(opt.bounds, {});
        SafetyResult r = check_safety(p, load_state(p, state), b.max_steps);
        const char* v = r.kind == SafetyResult::Kind::safe     ? "safe"
                        : r.kind == SafetyResult::Kind::unsafe ? "unsafe"
                                                               : "bound-exhausted";
        out.j["verdict"] = v;
        out.text << v;
        if (r.kind == SafetyResult::Kind::unsafe) {
            out.j["step"] = r.step;
            out.text << " at step " << r.step;
        }
        out.text << "\n";
        if (r.kind == SafetyResult::Kind::safe) return exit_pass;
        return r.kind == SafetyResult::Kind::unsafe ? exit_violation : exit_inconclusive;
    }

    int report_sni(const Program& p, const SniVerdict& v, const std::string& out_dir) {
        out.j["bounds"] = bounds_json(v.bounds);
        out.j["verdict"] = v.secure() ? "secure" : "violation";
        out.j["pairs"] = v.pairs;
        out.j["states"] = v.states;
        out.j["truncated"] = v.truncated;
        if (v.secure()) {
            out.text << "Secure (" << v.pairs << " pairs, " << v.states << " joint states, "
                     << v.truncated << " truncated; evidence up to bounds steps="
                     << v.bounds.max_steps << " depth=" << v.bounds.max_depth << ")\n";
            return v.truncated ? exit_inconclusive : exit_pass;
        }
        const bool leak = v.divergence.kind == Divergence::Kind::different_leak;
        out.j["divergence"] = leak ? json{{"kind", "leak"},
                                          {"first", format_leak(v.divergence.leak1)},
                                          {"second", format_leak(v.divergence.leak2)}}
                                   : json{{"kind", "enabled"},
                                          {"first", directives_json(p, v.divergence.enabled1)},
                                          {"second", directives_json(p, v.divergence.enabled2)}};
        out.j["directives"] = directives_json(p, v.directives);
        out.j["first"] = print_initial_state(p, v.first);
        out.j["second"] = print_initial_state(p, v.second);
        out.text << "Violation\ndirectives: " << join_directives(p, v.directives) << "\n";
        if (leak)
            out.text << "leaks differ: " << format_leak(v.divergence.leak1) << " vs "
                     << format_leak(v.divergence.leak2) << "\n";
        else
            out.text << "enabled directives differ\n";
        out.text << "first state:\n" << print_initial_state(p, v.first) << "second state:\n"
                 << print_initial_state(p, v.second);
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            write_file(out_dir + "/first.init", print_initial_state(p, v.first));
            write_file(out_dir + "/second.init", print_initial_state(p, v.second));
            write_file(out_dir + "/attack.directives", print_directives(p, v.directives));
            out.text << "witness files written to " << out_dir << "\n";
        }
        return exit_violation;
    }

    int check_sni(const std::string& prog, const std::string& state, const std::string& second,
                  const std::string& out_dir) {
        start("check-sni");
        Program p = load_program(prog, opt);
        Bounds b = parse_bounds(opt.bounds, {});
        State base = load_state(p, state);
        SniVerdict v;
        if (!second.empty()) {
            State s2 = load_state(p, second);
            if (!low_equivalent(p, base, s2)) throw UsageError("states are not low-equivalent");
            v = specnip::check_sni(p, base, PairSource::given({{base, s2}}), b);
        } else {
            v = specnip::check_sni(p, base, parse_pairs(opt), b);
        }
        return report_sni(p, v, out_dir);
    }

    int dce(const std::string& prog, const std::string& out_path) {
        start("dce");
        Program p = load_program(prog, opt);
        DceResult r = dce_transform(p, liveness(p, full_live(p)));
        json rep = json::array();
        for (PcId pc : p.pcs())
            if (r.replaced[idx(pc)]) rep.push_back(p.label(pc));
        const std::string text = print_program(r.target);
        out.j["replaced"] = rep;
        out.j["target"] = text;
        out.text << text;
        if (!out_path.empty()) write_file(out_path, text);
        return exit_pass;
    }

    int live(const std::string& prog, const std::string& exit_fact) {
        start("liveness");
        Program p = load_program(prog, opt);
        LiveSet init;
        if (exit_fact == "all") init = full_live(p);
        else if (exit_fact == "mems") init = mems_live(p);
        else throw UsageError("--exit expects all or mems");
        Liveness l = liveness(p, init);
        json rows = json::array();
        for (PcId pc : p.pcs()) {
            json regs = json::array(), cells = json::array();
            const LiveSet in = live_in(p, pc, l[idx(pc)]);
            for (std::size_t r = 0; r < p.reg_count(); ++r)
                if (in.regs[r]) regs.push_back(p.reg_name(RegId(r)));
            for (std::size_t c = 0; c < p.cell_count(); ++c)
                if (in.cells[c]) {
                    auto [v, o] = p.cell_at(c);
                    cells.push_back(p.var(v).name + "[" + std::to_string(o) + "]");
                }
            rows.push_back({{"pc", p.label(pc)}, {"live_in_regs", regs}, {"live_in_cells", cells}});
            out.text << p.label(pc) << ": " << regs.dump() << " " << cells.dump() << "\n";
        }
        out.j["iterations"] = l.iterations;
        out.j["pcs"] = rows;
        return exit_pass;
    }

    int allocate_cmd(const std::string& prog, unsigned k, const std::string& tgt_out,
                     const std::string& wit_out) {
        start("allocate");
        Program p = load_program(prog, opt);
        RAWitness w;
        try {
            w = allocate(p, k);
        } catch (const AllocationError& e) {
            out.j["error"] = e.what();
            out.text << "allocation failed: " << e.what() << "\n";
            return exit_violation;
        }
        const std::string t = print_program(w.target), wt = serialize_ra_witness(w);
        out.j["target"] = t;
        out.j["witness"] = wt;
        out.text << t << "---\n" << wt;
        if (!tgt_out.empty()) write_file(tgt_out, t);
        if (!wit_out.empty()) write_file(wit_out, wt);
        return exit_pass;
    }

    RAWitness witness(const std::string& s, const std::string& t, const std::string& w) {
        Program src = load_program(s, opt);
        Program tgt = load_program(t, opt);
        return load_witness(src, tgt, w);
    }

    int validate(const std::string& s, const std::string& t, const std::string& wf) {
        start("validate-ra");
        RAWitness w = witness(s, t, wf);
        auto ds = validate_ra(w, ra_liveness(w.source));
        json a = json::array();
        for (const auto& d : ds) {
            a.push_back({{"kind", to_string(d.kind)}, {"pc", d.pc}, {"message", d.message}});
            out.text << to_string(d.kind) << " at " << d.pc << ": " << d.message << "\n";
        }
        if (ds.empty()) out.text << "valid\n";
        out.j["diagnostics"] = a;
        return ds.empty() ? exit_pass : exit_violation;
    }

    int product_run(const std::string& s, const std::string& t, const std::string& wf,
                    const std::string& state, const std::string& dirs) {
        start("product-run");
        RAWitness w = witness(s, t, wf);
        PoisonProduct prod(w);
        ProductState st = prod.initial(load_state(w.target, state));
        auto ds = load_directives(w.target, dirs);
        json steps = json::array();
        bool stuck = false;
        for (const auto& d : ds) {
            auto tr = prod.replay(st, d);
            if (!tr) {
                stuck = true;
                out.j["stuck_at"] = {{"source", format_pc_stack(w.source, st.src)},
                                     {"target", format_pc_stack(w.target, st.tgt)},
                                     {"directive", format_directive(w.target, d)}};
                out.text << "stuck at (" << format_pc_stack(w.source, st.src) << ", "
                         << format_pc_stack(w.target, st.tgt) << ") on "
                         << format_directive(w.target, d) << "\n";
                break;
            }
            const std::string sd = tr->src_dir ? format_directive(w.source, *tr->src_dir) : "-";
            const std::string sl = tr->src_dir ? format_leak(tr->src_leak) : "-";
            steps.push_back({{"rule", tr->rule},
                             {"target", {{"directive", format_directive(w.target, d)},
                                         {"leak", format_leak(tr->tgt_leak)}}},
                             {"source", {{"directive", sd}, {"leak", sl}}},
                             {"pcs", {format_pc_stack(w.source, tr->after.src),
                                      format_pc_stack(w.target, tr->after.tgt)}},
                             {"poison", poison_json(tr->after.pi.back(), w.source)}});
            out.text << tr->rule << ": " << format_directive(w.target, d) << "/"
                     << format_leak(tr->tgt_leak) << " || " << sd << "/" << sl << "  ("
                     << format_pc_stack(w.source, tr->after.src) << ", "
                     << format_pc_stack(w.target, tr->after.tgt) << ")  "
                     << poison_row(tr->after.pi.back(), w.source) << "\n";
            st = std::move(tr->after);
        }
        out.j["steps"] = steps;
        out.j["status"] = stuck ? "stuck" : "completed";
        return stuck ? exit_violation : exit_pass;
    }

    int poison(const std::string& s, const std::string& t, const std::string& wf) {
        start("poison-analyze");
        RAWitness w = witness(s, t, wf);
        StaticPoison sp = poison_analysis(w);
        json rows = json::array();
        for (PcId tp : w.target.pcs()) {
            const auto& sp_src = sp.source_of[idx(tp)];
            const std::string spc = sp_src ? w.source.label(*sp_src) : "-";
            rows.push_back({{"pair", {spc, w.target.label(tp)}},
                            {"poison", poison_json(sp.values[idx(tp)], w.source)}});
            out.text << "(" << spc << ", " << w.target.label(tp)
                     << "): " << poison_row(sp.values[idx(tp)], w.source) << "\n";
        }
        out.j["iterations"] = sp.iterations;
        out.j["pairs"] = rows;
        return exit_pass;
    }

    json violations_json(const RAWitness& w, const std::vector<TypabilityViolation>& vs) {
        json a = json::array();
        for (const auto& v : vs) {
            a.push_back({{"kind", to_string(v.kind)},
                         {"pair", {w.source.label(v.source_pc), w.target.label(v.target_pc)}},
                         {"register", w.source.reg_name(v.reg)},
                         {"value", std::string(1, to_char(v.value))}});
            out.text << to_string(v.kind) << " violation at (" << w.source.label(v.source_pc)
                     << ", " << w.target.label(v.target_pc) << ") on "
                     << w.source.reg_name(v.reg) << " = " << to_char(v.value) << "\n";
        }
        return a;
    }

    int typable(const std::string& s, const std::string& t, const std::string& wf) {
        start("check-typable");
        RAWitness w = witness(s, t, wf);
        auto vs = check_poison_typable(w, poison_analysis(w));
        out.j["violations"] = violations_json(w, vs);
        if (vs.empty()) out.text << "poison-typable\n";
        return vs.empty() ? exit_pass : exit_violation;
    }

    json fix_json(const FixReport& r) {
        json a = json::array();
        for (const auto& f : r.inserted) {
            a.push_back({{"pc", f.label}, {"before", f.before}, {"kind", f.kind}, {"register", f.reg}});
            out.text << "inserted " << f.kind << " at " << f.label << " before " << f.before
                     << " (register " << f.reg << ")\n";
        }
        return a;
    }

    int fix(const std::string& s, const std::string& t, const std::string& wf,
            const std::string& tgt_out, const std::string& wit_out) {
        start("fix");
        RAWitness w = witness(s, t, wf);
        if (!validate_ra(w, ra_liveness(w.source)).empty())
            throw UsageError("witness does not validate; run validate-ra");
        auto [fw, rep] = fix_ra(w);
        out.j["inserted"] = fix_json(rep);
        out.j["iterations"] = rep.iterations;
        out.j["typable"] = rep.typable;
        out.j["cap_exceeded"] = rep.cap_exceeded;
        const std::string tt = print_program(fw.target), wt = serialize_ra_witness(fw);
        out.j["target"] = tt;
        out.j["witness"] = wt;
        if (tgt_out.empty() && wit_out.empty()) out.text << tt << "---\n" << wt;
        if (!tgt_out.empty()) write_file(tgt_out, tt);
        if (!wit_out.empty()) write_file(wit_out, wt);
        if (rep.cap_exceeded) {
            out.text << "iteration cap exceeded\n";
            return exit_violation;
        }
        return exit_pass;
    }

    std::unique_ptr<SimWitness> sim_witness(const std::string& kind,
                                            const std::vector<std::string>& files) {
        if (kind == "dce") {
            if (files.empty() || files.size() > 2)
                throw UsageError("dce witness expects <source> [<target>]");
            Program src = load_program(files[0], opt);
            Program tgt = files.size() == 2
                              ? load_program(files[1], opt)
                              : dce_transform(src, liveness(src, full_live(src))).target;
            return std::make_unique<DceWitness>(src, tgt);
        }
        if (kind == "ra") {
            if (files.size() != 3) throw UsageError("ra witness expects <source> <target> <witness>");
            return std::make_unique<RaWitness>(witness(files[0], files[1], files[2]));
        }
        throw UsageError("--witness expects dce or ra");
    }

    json interval_json(const SimWitness& w, const SimInterval& i) {
        return {{"target", trace_json(w.target(), i.tgt)},
                {"source", trace_json(w.source(), i.src)},
                {"guarded", i.guarded}};
    }

    int check_sim(const std::string& kind, const std::vector<std::string>& files,
                  const std::string& state) {
        start("check-sim");
        auto w = sim_witness(kind, files);
        Bounds b = parse_bounds(opt.bounds, {});
        State init = load_state(w->target(), state);
        SimVerdict v = check_simulation(*w, {init}, b);
        out.j["bounds"] = bounds_json(b);
        out.j["verdict"] = v.pass ? "pass" : "fail";
        out.j["nodes"] = v.nodes;
        out.j["intervals"] = v.intervals;
        out.j["truncated"] = v.truncated;
        if (v.pass) {
            out.text << "Pass (" << v.nodes << " related pairs, " << v.intervals << " intervals, "
                     << v.truncated << " truncated; evidence up to bounds, not a proof)\n";
            return v.truncated ? exit_inconclusive : exit_pass;
        }
        out.j["reason"] = v.reason;
        out.text << "Fail: " << v.reason << "\n";
        if (v.at)
            out.text << "at (" << format_pc_stack(w->source(), v.at->src) << ", "
                     << format_pc_stack(w->target(), v.at->tgt) << ")\n";
        if (v.interval) {
            out.j["interval"] = interval_json(*w, *v.interval);
            out.text << "target: " << format_trace(w->target(), v.interval->tgt) << "\nsource: "
                     << format_trace(w->source(), v.interval->src) << "\n";
        }
        return exit_violation;
    }

    int check_snippy(const std::string& kind, const std::vector<std::string>& files,
                     const std::string& state) {
        start("check-snippy");
        auto w = sim_witness(kind, files);
        Bounds b = parse_bounds(opt.bounds, {24, 2});
        State base = load_state(w->target(), state);
        auto pairs = enumerate_pairs(w->target(), base, parse_pairs(opt));
        CubeVerdict v = check_snippy_cube(*w, pairs, b);
        out.j["bounds"] = bounds_json(b);
        out.j["verdict"] = v.pass ? "pass" : "fail";
        out.j["pairs"] = pairs.size();
        out.j["quadruples"] = v.quadruples;
        out.j["intervals"] = v.intervals;
        out.j["truncated"] = v.truncated;
        if (v.pass) {
            out.text << "Pass (" << pairs.size() << " pairs, " << v.quadruples << " quadruples, "
                     << v.intervals << " intervals, " << v.truncated
                     << " truncated; evidence up to bounds, not a proof)\n";
            return v.truncated ? exit_inconclusive : exit_pass;
        }
        out.j["reason"] = v.reason;
        out.j["interval"] = interval_json(*w, *v.interval);
        out.j["first"] = {{"source", format_pc_stack(w->source(), v.first->src)},
                          {"target", format_pc_stack(w->target(), v.first->tgt)}};
        out.text << "Fail: " << v.reason << "\nat (" << format_pc_stack(w->source(), v.first->src)
                 << ", " << format_pc_stack(w->target(), v.first->tgt) << ")\ntarget: "
                 << format_trace(w->target(), v.interval->tgt)
                 << "\nsource: " << format_trace(w->source(), v.interval->src) << "\n";
        return exit_violation;
    }

    int demo() {
        start("demo-codera");
        const Bounds b{32, 3};
        RAWitness w = witness("corpus:ra_source.sp", "corpus:ra_target.sp", "corpus:ra.witness");
        State t1 = load_state(w.target, "corpus:ra_initial.init");
        State t2 = load_state(w.target, "corpus:ra_initial_alt.init");

        out.text << "== attack on the allocated target\n";
        SniVerdict att = check_sni_pair(w.target, t1, t2, b);
        out.j["attack"] = {{"verdict", att.secure() ? "secure" : "violation"},
                           {"directives", directives_json(w.target, att.directives)}};
        if (!att.secure())
            out.text << "Violation\ndirectives: " << join_directives(w.target, att.directives)
                     << "\nleaks differ: " << format_leak(att.divergence.leak1) << " vs "
                     << format_leak(att.divergence.leak2) << "\n";
        else
            out.text << "Secure\n";

        const State s1 = source_initial(w, t1), s2 = source_initial(w, t2);
        SniVerdict src = check_sni_pair(w.source, s1, s2, b);
        out.j["source"] = src.secure() ? "secure" : "violation";
        out.text << "== source on the same pair\n" << (src.secure() ? "Secure" : "Violation") << "\n";

        out.text << "== poison analysis\n";
        auto vs = check_poison_typable(w, poison_analysis(w));
        out.j["violations"] = violations_json(w, vs);

        out.text << "== fix\n";
        auto [fw, rep] = fix_ra(w);
        out.j["fix"] = fix_json(rep);
        for (const auto& f : rep.inserted)
            out.text << f.label << ": " << format_instr(fw.target, fw.target.at(*fw.target.find_pc(f.label)))
                     << "\n";

        out.text << "== fixed target on the same pair\n";
        SniVerdict fixed = check_sni_pair(fw.target, lift_initial(fw, s1), lift_initial(fw, s2), b);
        out.j["fixed"] = fixed.secure() ? "secure" : "violation";
        out.text << (fixed.secure() ? "Secure" : "Violation") << "\n";
        const bool ok = !att.secure() && src.secure() && rep.typable && fixed.secure();
        return ok ? exit_pass : exit_violation;
    }
};

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Speculative non-interference checks for a toy compiler IR"};
    app.require_subcommand(1);
    Cli cli;
    auto common = [&](CLI::App* sc) {
        sc->add_option("--bounds", cli.opt.bounds, "steps=<n>,depth=<n>");
        sc->add_option("--width", cli.opt.width, "value width in bits")->check(CLI::Range(1, 16));
        sc->add_option("--pairs", cli.opt.pairs, "exhaustive | random:<n>");
        sc->add_option("--seed", cli.opt.seed, "seed for random pairs");
        sc->add_option("--format", cli.opt.format, "text | json")
            ->check(CLI::IsMember({"text", "json"}));
    };
    std::function<int()> action;
    std::string prog, state, second, dirs, out_path, wit_out, exit_fact = "all", kind;
    std::string src, tgt, wit;
    std::vector<std::string> files;
    unsigned k = 0;

    auto add = [&](const char* name, const char* help) {
        auto* sc = app.add_subcommand(name, help);
        common(sc);
        return sc;
    };
    auto ra_files = [&](CLI::App* sc) {
        sc->add_option("source", src, "source program")->required();
        sc->add_option("target", tgt, "target program")->required();
        sc->add_option("witness", wit, "allocation witness")->required();
    };

    auto* run = add("run", "execute a directive script");
    run->add_option("program", prog)->required();
    run->add_option("--state", state);
    run->add_option("--directives", dirs)->required();
    run->callback([&] { action = [&] { return cli.run(prog, state, dirs); }; });

    auto* exp = add("explore", "enumerate bounded behaviours");
    exp->add_option("program", prog)->required();
    exp->add_option("--state", state);
    exp->callback([&] { action = [&] { return cli.explore(prog, state); }; });

    auto* safe = add("check-safe", "speculation-free memory safety");
    safe->add_option("program", prog)->required();
    safe->add_option("--state", state);
    safe->callback([&] { action = [&] { return cli.check_safe(prog, state); }; });

    auto* sni = add("check-sni", "speculative non-interference");
    sni->add_option("program", prog)->required();
    sni->add_option("--state", state);
    sni->add_option("--second", second, "compare against this state only");
    sni->add_option("--out-dir", out_path, "write counterexample files here");
    sni->callback([&] { action = [&] { return cli.check_sni(prog, state, second, out_path); }; });

    auto* dce = add("dce", "dead code elimination");
    dce->add_option("program", prog)->required();
    dce->add_option("-o,--output", out_path);
    dce->callback([&] { action = [&] { return cli.dce(prog, out_path); }; });

    auto* lv = add("liveness", "live-in sets per pc");
    lv->add_option("program", prog)->required();
    lv->add_option("--exit", exit_fact, "all | mems");
    lv->callback([&] { action = [&] { return cli.live(prog, exit_fact); }; });

    auto* al = add("allocate", "greedy register allocation");
    al->add_option("program", prog)->required();
    al->add_option("-k,--registers", k)->required();
    al->add_option("-o,--output", out_path);
    al->add_option("--witness-out", wit_out);
    al->callback([&] { action = [&] { return cli.allocate_cmd(prog, k, out_path, wit_out); }; });

    auto* va = add("validate-ra", "check an allocation witness");
    ra_files(va);
    va->callback([&] { action = [&] { return cli.validate(src, tgt, wit); }; });

    auto* pr = add("product-run", "step the poison product");
    ra_files(pr);
    pr->add_option("--state", state, "target initial state");
    pr->add_option("--directives", dirs, "target directives")->required();
    pr->callback([&] { action = [&] { return cli.product_run(src, tgt, wit, state, dirs); }; });

    auto* pa = add("poison-analyze", "static poison types");
    ra_files(pa);
    pa->callback([&] { action = [&] { return cli.poison(src, tgt, wit); }; });

    auto* ty = add("check-typable", "poison-typability constraints");
    ra_files(ty);
    ty->callback([&] { action = [&] { return cli.typable(src, tgt, wit); }; });

    auto* fx = add("fix", "insert fences until poison-typable");
    ra_files(fx);
    fx->add_option("-o,--output", out_path, "fixed target program");
    fx->add_option("--witness-out", wit_out, "fixed witness");
    fx->callback([&] { action = [&] { return cli.fix(src, tgt, wit, out_path, wit_out); }; });

    auto* cs = add("check-sim", "bounded simulation check");
    cs->add_option("--witness", kind, "dce | ra")->required();
    cs->add_option("files", files, "programs and witness")->required();
    cs->add_option("--state", state, "target initial state");
    cs->callback([&] { action = [&] { return cli.check_sim(kind, files, state); }; });

    auto* cy = add("check-snippy", "snippy cube check");
    cy->add_option("--witness", kind, "dce | ra")->required();
    cy->add_option("files", files, "programs and witness")->required();
    cy->add_option("--state", state, "target base state");
    cy->callback([&] { action = [&] { return cli.check_snippy(kind, files, state); }; });

    auto* demo = add("demo-codera", "attack, analysis, fix and re-check on the bundled example");
    demo->callback([&] { action = [&] { return cli.demo(); }; });

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }
    int code = exit_usage;
    try {
        code = action();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    if (cli.opt.format == "json") {
        cli.out.j["exit"] = code;
        out << cli.out.j.dump(2) << "\n";
    } else {
        out << cli.out.text.str();
    }
    return code;
}

}  // namespace specnip

#include "alignkit/cli.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "alignkit/report.hpp"
#include "alignkit/scenarios.hpp"

namespace alignkit {

namespace {

using report::json;

constexpr int kExitOk = 0;
constexpr int kExitAssertFailed = 1;
constexpr int kExitInputError = 2;
constexpr int kExitNotConverged = 3;

struct CommonOpts {
    std::string spec_path;
    std::string scenario_name;
    std::string out_path;
    std::string format = "json";
    std::string divergence = "tv";
    std::string weights = "observational";
    double eps = 1e-9;
    bool divergence_given = false;
    bool eps_given = false;
    bool timings = false;

    // explicit flags win; otherwise the scenario's bound values apply
    DivergenceKind effective_divergence(const WorldSpec& spec) const {
        if (divergence_given || !spec.scenario) return divergence_from_string(divergence);
        return spec.scenario->divergence;
    }
    double effective_eps(const WorldSpec& spec) const {
        if (eps_given || !spec.scenario) return eps;
        return spec.scenario->eps;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_input = true) {
    auto* spec = cmd->add_option("--spec", opts.spec_path, "path to a world spec file");
    auto* scenario =
        cmd->add_option("--scenario", opts.scenario_name, "name of a builtin scenario");
    if (needs_input) {
        spec->excludes(scenario);
        scenario->excludes(spec);
    }
    cmd->add_option("--out", opts.out_path, "write the report here instead of stdout");
    cmd->add_option("--format", opts.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--divergence", opts.divergence, "divergence for empida-style metrics")
        ->check(CLI::IsMember({"tv", "kl", "mad"}))
        ->each([&opts](const std::string&) { opts.divergence_given = true; });
    cmd->add_option("--eps", opts.eps, "verdict tolerance")
        ->each([&opts](const std::string&) { opts.eps_given = true; });
    cmd->add_option("--weights", opts.weights, "expectation weighting over factor values")
        ->check(CLI::IsMember({"observational", "uniform"}));
    cmd->add_flag("--timings", opts.timings, "include wall-clock timings in the report");
}

WorldSpec load_spec(const CommonOpts& opts) {
    if (!opts.scenario_name.empty()) return builtin_scenario(opts.scenario_name);
    if (!opts.spec_path.empty()) return parse_spec_file(opts.spec_path);
    throw std::invalid_argument("either --spec or --scenario is required");
}

Assignment parse_do(const std::string& text) {
    Assignment out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw std::invalid_argument("malformed assignment '" + item + "' (expected VAR=VALUE)");
        }
        out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    if (out.empty()) throw std::invalid_argument("empty --do assignment");
    return out;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

const Scm& pick_model(const WorldSpec& spec, const std::string& requested) {
    if (!requested.empty()) {
        const auto it = spec.scms.find(requested);
        if (it == spec.scms.end()) {
            throw std::invalid_argument("unknown model '" + requested + "'");
        }
        return it->second;
    }
    if (spec.scenario && spec.scenario->factor_scm) {
        return spec.scms.at(*spec.scenario->factor_scm);
    }
    if (spec.scms.size() == 1) return spec.scms.begin()->second;
    throw std::invalid_argument("ambiguous model; pass --model NAME");
}

class Writer {
public:
    Writer(std::string& out, std::string& err) : out_(out), err_(err) {}

    void emit(const CommonOpts& opts, const std::string& payload) const {
        if (!opts.out_path.empty()) {
            std::ofstream f(opts.out_path, std::ios::binary);
            if (!f) throw std::invalid_argument("cannot open output path '" + opts.out_path + "'");
            f << payload;
        } else {
            out_ += payload;
        }
    }

    void diag(const std::string& line) const { err_ += line + "\n"; }

private:
    std::string& out_;
    std::string& err_;
};

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

void finish(json& j, const CommonOpts& opts, const Timer& timer, const Writer& writer) {
    if (opts.timings) j["timings_ms"] = json{{"total", timer.ms()}};
    writer.emit(opts, j.dump(2) + "\n");
}

int cmd_validate(const CommonOpts& opts, const Writer& writer, const Timer& timer) {
    json j;
    j["tool"] = "alignkit";
    j["version"] = kToolVersion;
    j["command"] = "validate";
    std::vector<Diagnostic> diagnostics;
    if (!opts.scenario_name.empty()) {
        (void)builtin_scenario(opts.scenario_name); // throws on unknown names
        j["scenario"] = opts.scenario_name;
    } else if (!opts.spec_path.empty()) {
        std::ifstream in(opts.spec_path, std::ios::binary);
        if (!in) throw std::invalid_argument("cannot open file '" + opts.spec_path + "'");
        std::ostringstream buffer;
        buffer << in.rdbuf();
        ParseResult r = try_parse_spec(buffer.str());
        diagnostics = std::move(r.diagnostics);
    } else {
        throw std::invalid_argument("either --spec or --scenario is required");
    }
    json list = json::array();
    for (const auto& d : diagnostics) {
        list.push_back(json{{"path", d.path}, {"message", d.message}});
        writer.diag(d.path + ": " + d.message);
    }
    j["violations"] = std::move(list);
    finish(j, opts, timer, writer);
    return diagnostics.empty() ? kExitOk : kExitInputError;
}

int cmd_joint(const CommonOpts& opts, const std::string& model, const std::string& query,
              const std::string& do_text, const Writer& writer, const Timer& timer,
              const char* command) {
    const WorldSpec spec = load_spec(opts);
    const Scm& scm = pick_model(spec, model);
    std::vector<std::string> query_vars = split_names(query);
    if (query_vars.empty()) {
        for (const auto& v : scm.variables) query_vars.push_back(v.name);
    }
    JointTable table = do_text.empty()
                           ? marginal(joint_distribution(scm), query_vars)
                           : interventional_distribution(scm, Intervention{parse_do(do_text)},
                                                         query_vars);
    if (opts.format == "csv") {
        writer.emit(opts, report::table_csv(table));
        return kExitOk;
    }
    json j = report::envelope(command, spec);
    if (!do_text.empty()) j["do"] = report::to_json(parse_do(do_text));
    j["joint"] = report::to_json(table);
    finish(j, opts, timer, writer);
    return kExitOk;
}

int cmd_disentangle(const CommonOpts& opts, const Writer& writer, const Timer& timer) {
    const WorldSpec spec = load_spec(opts);
    const GmSystem sys = bind_gm_system(spec);
    const DivergenceKind d = opts.effective_divergence(spec);
    const FactorWeighting w = opts.weights == "uniform" ? FactorWeighting::uniform
                                                        : FactorWeighting::observational;
    const auto matrix = empida_matrix(sys, d, w);
    const auto verdict = disentanglement_verdict(matrix, opts.effective_eps(spec));

    std::vector<std::string> factor_names;
    for (const auto& v : sys.alpha.sources()) factor_names.push_back(v.name);
    std::vector<std::string> target_names;
    for (const auto& v : sys.alpha.targets()) target_names.push_back(v.name);

    if (opts.format == "csv") {
        writer.emit(opts, report::matrix_csv(matrix, factor_names, target_names));
        return kExitOk;
    }
    json j = report::envelope("disentangle", spec);
    j["empida"] = report::matrix_json(matrix, factor_names, target_names);
    j["verdict"] = report::to_json(verdict);
    finish(j, opts, timer, writer);
    return kExitOk;
}

void require_json(const CommonOpts& opts, const char* command) {
    if (opts.format == "csv") {
        throw std::invalid_argument(std::string(command) +
                                    " emits a composite report; csv applies to "
                                    "joint/intervene/disentangle");
    }
}

int cmd_align(const CommonOpts& opts, bool with_dci, double l1_lambda, bool strict_d2,
              bool assert_aligned, const Writer& writer, const Timer& timer) {
    require_json(opts, "align");
    const WorldSpec spec = load_spec(opts);
    const GmSystem sys = bind_gm_system(spec);
    AlignmentOptions aopts;
    aopts.eps = opts.effective_eps(spec);
    aopts.divergence = opts.effective_divergence(spec);
    aopts.weighting = opts.weights == "uniform" ? FactorWeighting::uniform
                                                : FactorWeighting::observational;
    aopts.d2.strict_contexts = strict_d2;
    aopts.with_dci = with_dci;
    aopts.dci_lambda = l1_lambda;

    const AlignmentReport rep = alignment_report(sys, bind_interpretable(spec, sys), aopts);
    json j = report::envelope("align", spec);
    j["alignment"] = report::to_json(rep, sys);
    if (spec.scenario && spec.scenario->blocks) {
        const BlockAlignmentReport blocks =
            check_block_alignment(sys, bind_block_structure(spec), aopts.divergence, aopts.eps,
                                  aopts.weighting);
        j["block_alignment"] = report::to_json(blocks);
    }
    finish(j, opts, timer, writer);
    if (assert_aligned && !rep.aligned) {
        writer.diag("assertion failed: representation is not aligned");
        return kExitAssertFailed;
    }
    return kExitOk;
}

int cmd_leakage(const CommonOpts& opts, const std::string& keep, double tol, std::size_t max_iter,
                double assert_below, bool has_assert, const Writer& writer, const Timer& timer) {
    require_json(opts, "leakage");
    const WorldSpec spec = load_spec(opts);
    const LeakageScenario sc = bind_leakage_scenario(spec);
    LeakageResult result;
    if (keep.empty()) {
        result = concept_leakage(sc, tol, max_iter);
    } else {
        std::vector<std::size_t> coords;
        for (const auto& name : split_names(keep)) {
            coords.push_back(sc.m_channel.target_frame().require(name));
        }
        result = coordinate_leakage(sc, coords, tol, max_iter);
    }
    json j = report::envelope("leakage", spec);
    if (!keep.empty()) j["keep"] = split_names(keep);
    j["leakage"] = report::to_json(result);
    finish(j, opts, timer, writer);
    if (!result.converged) {
        writer.diag("optimizer did not converge within the iteration budget");
        return kExitNotConverged;
    }
    if (has_assert && result.lambda > assert_below) {
        writer.diag("assertion failed: leakage " + format_g12(result.lambda) + " exceeds " +
                    format_g12(assert_below));
        return kExitAssertFailed;
    }
    return kExitOk;
}

int cmd_abstraction(const CommonOpts& opts, std::size_t max_blocks, bool approximate,
                    bool assert_commutes, const Writer& writer, const Timer& timer) {
    require_json(opts, "abstraction");
    const WorldSpec spec = load_spec(opts);
    const AbstractionCase kase = bind_abstraction_case(spec);
    const std::size_t blocks =
        max_blocks == 0 ? kase.blocks.source_blocks.size() : max_blocks;
    const AbstractionReport rep =
        check_abstraction(kase, blocks, opts.effective_eps(spec), approximate);
    json j = report::envelope("abstraction", spec);
    j["abstraction"] = report::to_json(rep);
    finish(j, opts, timer, writer);
    if (assert_commutes && !rep.overall) {
        writer.diag("assertion failed: the diagram does not commute");
        return kExitAssertFailed;
    }
    return kExitOk;
}

int cmd_scenario(const CommonOpts& opts, const std::string& action, const std::string& name,
                 const Writer& writer) {
    if (action == "list") {
        std::string out;
        for (const auto& n : builtin_scenario_names()) out += n + "\n";
        writer.emit(opts, out);
        return kExitOk;
    }
    if (action == "emit") {
        writer.emit(opts, emit_spec(builtin_scenario(name)));
        return kExitOk;
    }
    throw std::invalid_argument("unknown scenario action '" + action + "' (expected list|emit)");
}

} // namespace

int run_command(const std::vector<std::string>& args, std::string& out, std::string& err) {
    Writer writer(out, err);
    Timer timer;

    CLI::App app{"exact disentanglement, alignment, leakage and abstraction checks on finite causal models"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string model, query, do_text, keep, scenario_action, scenario_target;
    bool with_dci = false, strict_d2 = false, assert_aligned = false, approximate = false,
         assert_commutes = false;
    double l1_lambda = 0.0, tol = 1e-10, assert_below = 0.0;
    bool has_assert_below = false;
    std::size_t max_iter = 100000, max_blocks = 0;

    auto* validate = app.add_subcommand("validate", "check a spec and report every violation");
    add_common(validate, opts);

    auto* joint = app.add_subcommand("joint", "exact joint/marginal distribution of a model");
    add_common(joint, opts);
    joint->add_option("--model", model, "model name (defaults to the scenario's factor model)");
    joint->add_option("--query", query, "comma-separated variables to keep");

    auto* intervene = app.add_subcommand("intervene", "distribution under a do() assignment");
    add_common(intervene, opts);
    intervene->add_option("--model", model, "model name");
    intervene->add_option("--query", query, "comma-separated variables to keep");
    intervene->add_option("--do", do_text, "comma-separated VAR=VALUE pins")->required();

    auto* disentangle = app.add_subcommand("disentangle", "empida matrix and verdict");
    add_common(disentangle, opts);

    auto* align = app.add_subcommand("align", "full alignment report");
    add_common(align, opts);
    align->add_flag("--dci", with_dci, "also fit the linear regression score");
    align->add_option("--l1-lambda", l1_lambda, "L1 penalty for the regression score");
    align->add_flag("--strict-d2", strict_d2, "check monotonicity in every context");
    align->add_flag("--assert-aligned", assert_aligned, "exit 1 unless aligned");

    auto* leakage = app.add_subcommand("leakage", "exact concept leakage with bounds");
    add_common(leakage, opts);
    leakage->add_option("--keep", keep, "restrict to these representation coordinates");
    leakage->add_option("--tol", tol, "objective-change convergence tolerance");
    leakage->add_option("--max-iter", max_iter, "iteration budget");
    leakage->add_option("--assert-leakage-below", assert_below, "exit 1 if leakage exceeds this")
        ->each([&](const std::string&) { has_assert_below = true; });

    auto* abstraction = app.add_subcommand("abstraction", "interventional consistency check");
    add_common(abstraction, opts);
    abstraction->add_option("--max-blocks", max_blocks,
                            "largest number of jointly pinned blocks (default: all)");
    abstraction->add_flag("--approximate", approximate,
                          "allow stochastic maps by averaging over mapped interventions");
    abstraction->add_flag("--assert-commutes", assert_commutes, "exit 1 unless every check passes");

    auto* scenario = app.add_subcommand("scenario", "list or emit builtin scenarios");
    add_common(scenario, opts, false);
    scenario->add_option("action", scenario_action, "list|emit")->required();
    scenario->add_option("name", scenario_target, "scenario name for emit");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        std::ostringstream os;
        os << app.help();
        out += os.str();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err += std::string(e.what()) + "\n";
        return kExitInputError;
    }

    try {
        if (validate->parsed()) return cmd_validate(opts, writer, timer);
        if (joint->parsed()) return cmd_joint(opts, model, query, "", writer, timer, "joint");
        if (intervene->parsed()) {
            return cmd_joint(opts, model, query, do_text, writer, timer, "intervene");
        }
        if (disentangle->parsed()) return cmd_disentangle(opts, writer, timer);
        if (align->parsed()) {
            return cmd_align(opts, with_dci, l1_lambda, strict_d2, assert_aligned, writer, timer);
        }
        if (leakage->parsed()) {
            return cmd_leakage(opts, keep, tol, max_iter, assert_below, has_assert_below, writer,
                               timer);
        }
        if (abstraction->parsed()) {
            return cmd_abstraction(opts, max_blocks, approximate, assert_commutes, writer, timer);
        }
        if (scenario->parsed()) return cmd_scenario(opts, scenario_action, scenario_target, writer);
        err += "no subcommand given\n";
        return kExitInputError;
    } catch (const SpecError& e) {
        for (const auto& d : e.diagnostics()) writer.diag(d.path + ": " + d.message);
        return kExitInputError;
    } catch (const DciNonConvergence& e) {
        writer.diag(e.what());
        return kExitNotConverged;
    } catch (const std::invalid_argument& e) {
        writer.diag(e.what());
        return kExitInputError;
    } catch (const std::domain_error& e) {
        writer.diag(e.what());
        return kExitInputError;
    } catch (const std::exception& e) {
        writer.diag(e.what());
        return kExitInputError;
    }
}

} // namespace alignkit

// fairkit — causal fairness workbench over categorical datasets + a user DAG.
//
// Subcommands:
//   check   evaluate fairness metrics, exit 0 fair / 1 fault / 2 not fair
//   repair  minimally edit the data so the derived independence holds
//   detect  naive vs adjusted effects and mediator ranking
//
// Relative input paths that do not exist are retried under $FAIRKIT_FIXTURES.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairkit/fairkit.hpp"
#include "json.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kExitFair = 0;
constexpr int kExitFault = 1;
constexpr int kExitUnfair = 2;

std::string resolve_path(const std::string& path) {
    if (path.empty() || std::filesystem::exists(path)) return path;
    if (const char* env = std::getenv("FAIRKIT_FIXTURES")) {
        const auto alt = std::filesystem::path(env) / path;
        if (std::filesystem::exists(alt)) return alt.string();
    }
    return path;
}

std::string fmt(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value + 0.0);  // +0.0 folds -0 into 0
    return buffer;
}

struct CommonOptions {
    std::string data_path, dag_path, spec_path;
    std::string out_path;
    std::string format = "text";
    std::string weight_column = "weight";
    double tau = 1e-6;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool dag_required) {
    cmd->add_option("--data", opts.data_path, "dataset CSV")->required();
    auto* dag = cmd->add_option("--dag", opts.dag_path, "causal DAG file");
    if (dag_required) dag->required();
    cmd->add_option("--spec", opts.spec_path, "fairness spec file")->required();
    cmd->add_option("--out", opts.out_path,
                    "report file (check/detect) or output prefix (repair)");
    cmd->add_option("--format", opts.format, "report format: text|json")
        ->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--tau", opts.tau, "fairness gap tolerance (default 1e-6)");
    cmd->add_option("--weight-col", opts.weight_column, "multiplicity column name");
}

struct LoadedInputs {
    fairkit::Dataset data;
    std::optional<fairkit::CausalDag> dag;
    fairkit::FairnessSpec spec;
};

LoadedInputs load_inputs(const CommonOptions& opts) {
    LoadedInputs in;
    fairkit::CsvOptions csv;
    csv.weight_column = opts.weight_column;
    if (!opts.dag_path.empty()) {
        auto dag = fairkit::load_dag(resolve_path(opts.dag_path));
        const auto report = fairkit::validate(dag);
        if (!report.ok()) {
            std::string msg = "invalid DAG:";
            for (const auto& v : report.violations) msg += "\n  " + v.message;
            throw fairkit::Error(msg);
        }
        csv.schema = dag.variables;
        in.dag = std::move(dag);
    }
    in.data = fairkit::load_csv_file(resolve_path(opts.data_path), csv);
    if (in.dag) fairkit::reconcile(in.data, *in.dag);
    in.spec = fairkit::load_fairness_spec(resolve_path(opts.spec_path));
    fairkit::validate_fairness_spec(in.data, in.spec);
    return in;
}

void emit(const CommonOptions& opts, const std::string& text, const ordered_json& json,
          std::ostream& fallback = std::cout) {
    const std::string payload = opts.format == "json" ? json.dump(2) + "\n" : text;
    if (opts.out_path.empty()) {
        fallback << payload;
    } else {
        std::ofstream out(opts.out_path);
        if (!out) throw fairkit::Error("cannot open '" + opts.out_path + "' for writing");
        out << payload;
    }
}

ordered_json config_json(const CommonOptions& opts) {
    ordered_json j;
    j["data"] = resolve_path(opts.data_path);
    if (!opts.dag_path.empty()) j["dag"] = resolve_path(opts.dag_path);
    j["spec"] = resolve_path(opts.spec_path);
    j["tau"] = opts.tau;
    j["weight_column"] = opts.weight_column;
    return j;
}

std::string config_text(const CommonOptions& opts) {
    std::string out = "data: " + resolve_path(opts.data_path) + "\n";
    if (!opts.dag_path.empty()) out += "dag: " + resolve_path(opts.dag_path) + "\n";
    out += "spec: " + resolve_path(opts.spec_path) + "\n";
    out += "tau: " + fmt(opts.tau) + "\n";
    return out;
}

// --------------------------------------------------------------------------
// check
// --------------------------------------------------------------------------

void render_metric(const fairkit::MetricReport& report, std::string& text, ordered_json& json_out) {
    text += "metric " + report.metric + ": gap " + fmt(report.gap) + " -> " +
            (report.fair ? "fair" : "unfair") + "\n";
    for (const auto& row : report.rows) {
        text += "  " + row.quantity + " = " + (row.defined ? fmt(row.value) : "uncomparable") + "\n";
    }
    for (const auto& entry : report.context_gaps) {
        if (entry.context.empty() && report.context_gaps.size() == 1) continue;
        text += "  gap[" + entry.context + "] = " +
                (entry.comparable ? fmt(entry.gap) : "uncomparable") + "\n";
    }
    if (!report.note.empty()) text += "  note: " + report.note + "\n";

    ordered_json j;
    j["metric"] = report.metric;
    j["gap"] = report.gap;
    j["tau"] = report.tau;
    j["fair"] = report.fair;
    j["rows"] = ordered_json::array();
    for (const auto& row : report.rows) {
        ordered_json r;
        r["context"] = row.context;
        r["quantity"] = row.quantity;
        if (row.defined) {
            r["value"] = row.value;
        } else {
            r["value"] = nullptr;
        }
        j["rows"].push_back(r);
    }
    j["context_gaps"] = ordered_json::array();
    for (const auto& entry : report.context_gaps) {
        ordered_json g;
        g["context"] = entry.context;
        if (entry.comparable) {
            g["gap"] = entry.gap;
        } else {
            g["gap"] = nullptr;
        }
        j["context_gaps"].push_back(g);
    }
    if (!report.note.empty()) j["note"] = report.note;
    json_out.push_back(j);
}

std::vector<std::string> split_tokens(const std::string& list) {
    std::vector<std::string> out;
    std::string token;
    std::stringstream ss(list);
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

fairkit::NameSet parse_name_list(const std::string& text) {
    fairkit::NameSet out;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, '+')) {
        if (!token.empty()) out.insert(token);
    }
    return out;
}

int run_check(const CommonOptions& opts, const std::string& metrics) {
    const auto in = load_inputs(opts);
    const auto& ds = in.data;
    const auto& spec = in.spec;

    std::vector<std::string> tokens;
    if (metrics == "auto") {
        tokens.push_back("dp");
        if (spec.admissible_declared) tokens.push_back("csp");
        if (spec.has_label()) {
            tokens.push_back("eo");
            tokens.push_back("pp");
            tokens.push_back("impossibility");
        }
        if (!spec.proxy.empty() && in.dag) tokens.push_back("proxy");
        if (spec.admissible_declared && in.dag) {
            tokens.push_back("kfair");
            tokens.push_back("justifiable");
        }
        if (spec.admissible_declared) tokens.push_back("rod");
    } else {
        tokens = split_tokens(metrics);
    }

    std::string text = "fairkit check\n" + config_text(opts);
    ordered_json report_json;
    report_json["command"] = "check";
    report_json["config"] = config_json(opts);
    report_json["metrics"] = ordered_json::array();
    auto& metrics_json = report_json["metrics"];

    auto need_dag = [&](const std::string& token) -> const fairkit::CausalDag& {
        if (!in.dag) throw fairkit::Error("metric '" + token + "' requires --dag");
        return *in.dag;
    };

    bool all_fair = true;
    for (const auto& token : tokens) {
        const auto colon = token.find(':');
        const std::string name = token.substr(0, colon == std::string::npos ? token.size() : colon);
        const std::string arg = colon == std::string::npos ? "" : token.substr(colon + 1);

        if (name == "dp") {
            const auto r = fairkit::demographic_parity(ds, spec, opts.tau);
            all_fair = all_fair && r.fair;
            render_metric(r, text, metrics_json);
        } else if (name == "csp") {
            const fairkit::NameSet cond = arg.empty() ? spec.admissible : parse_name_list(arg);
            const auto r = fairkit::conditional_statistical_parity(ds, spec, cond, opts.tau);
            all_fair = all_fair && r.fair;
            render_metric(r, text, metrics_json);
        } else if (name == "eo") {
            const auto r = fairkit::equalized_odds(ds, spec, opts.tau);
            all_fair = all_fair && r.fair;
            render_metric(r, text, metrics_json);
        } else if (name == "pp") {
            const auto r = fairkit::predictive_parity(ds, spec, opts.tau);
            all_fair = all_fair && r.fair;
            render_metric(r, text, metrics_json);
        } else if (name == "proxy") {
            const auto r = fairkit::proxy_fairness(ds, need_dag(name), spec, opts.tau);
            all_fair = all_fair && r.fair;
            render_metric(r, text, metrics_json);
        } else if (name == "kfair") {
            const fairkit::NameSet k = arg.empty() ? spec.admissible : parse_name_list(arg);
            const auto r = fairkit::k_fair(ds, need_dag(name), spec, k, opts.tau);
            all_fair = all_fair && r.fair;
            render_metric(r, text, metrics_json);
        } else if (name == "justifiable") {
            fairkit::JustifiableMode mode = fairkit::JustifiableMode::Enumerate;
            if (arg == "graph") {
                mode = fairkit::JustifiableMode::Graph;
            } else if (arg == "ci") {
                mode = fairkit::JustifiableMode::Ci;
            } else if (!arg.empty() && arg != "enumerate") {
                throw fairkit::Error("unknown justifiable mode '" + arg + "'");
            }
            const auto r =
                fairkit::justifiably_fair(ds, need_dag(name), spec, mode, opts.tau);
            all_fair = all_fair && r.fair();
            const char* verdict = r.verdict == fairkit::Verdict::Fair      ? "fair"
                                  : r.verdict == fairkit::Verdict::Unfair ? "unfair"
                                                                          : "unknown";
            text += std::string("metric justifiable: ") + verdict + "\n  " + r.note + "\n";
            ordered_json j;
            j["metric"] = "justifiable";
            j["mode"] = arg.empty() ? "enumerate" : arg;
            j["verdict"] = verdict;
            j["note"] = r.note;
            if (r.verdict == fairkit::Verdict::Unfair) {
                j["witness_k"] = ordered_json::array();
                for (const auto& v : r.witness_k) j["witness_k"].push_back(v);
                j["witness_context"] = fairkit::detail::format_assignment(r.witness_context);
                j["witness_gap"] = r.witness_gap;
            }
            if (!r.witness_path.empty()) {
                j["witness_path"] = ordered_json::array();
                for (const auto& node : r.witness_path) j["witness_path"].push_back(node);
            }
            metrics_json.push_back(j);
        } else if (name == "impossibility") {
            const auto r = fairkit::impossibility_check(ds, spec);
            text += "metric impossibility: identity " +
                    std::string(r.identity_agrees ? "agrees" : "DISAGREES") + "\n";
            text += "  fp_gap = " + fmt(r.eo_fp_gap) + ", fn_gap = " + fmt(r.eo_fn_gap) +
                    ", pp_gap = " + fmt(r.pp_gap) + ", prevalence_gap = " + fmt(r.prevalence_gap) +
                    "\n";
            ordered_json j;
            j["metric"] = "impossibility";
            j["fp_gap"] = r.eo_fp_gap;
            j["fn_gap"] = r.eo_fn_gap;
            j["pp_gap"] = r.pp_gap;
            j["prevalence_gap"] = r.prevalence_gap;
            j["identity_agrees"] = r.identity_agrees;
            for (const auto& side : r.identity) {
                ordered_json s;
                s["group"] = side.group;
                s["evaluated"] = side.evaluated;
                if (side.evaluated) {
                    s["lhs"] = side.lhs;
                    s["rhs"] = side.rhs;
                    text += "  " + side.group + ": lhs " + fmt(side.lhs) + " rhs " + fmt(side.rhs) +
                            "\n";
                } else {
                    s["note"] = side.note;
                    text += "  " + side.group + ": " + side.note + "\n";
                }
                j["sides"].push_back(s);
            }
            metrics_json.push_back(j);
        } else if (name == "rod") {
            const auto r = fairkit::rod(ds, spec);
            const bool fair = std::fabs(std::log(r.value)) <= opts.tau;
            all_fair = all_fair && fair;
            text += "metric rod: value " + fmt(r.value) + " -> " + (fair ? "fair" : "unfair") +
                    "\n  note: " + r.note + "\n";
            ordered_json j;
            j["metric"] = "rod";
            j["value"] = r.value;
            j["fair"] = fair;
            j["strata"] = ordered_json::array();
            for (const auto& stratum : r.strata) {
                ordered_json s;
                s["context"] = fairkit::detail::format_assignment(stratum.context);
                s["weight"] = stratum.weight;
                if (stratum.comparable) {
                    s["odds_ratio"] = stratum.odds_ratio;
                    text += "  odds_ratio[" + fairkit::detail::format_assignment(stratum.context) +
                            "] = " + fmt(stratum.odds_ratio) + " (weight " + fmt(stratum.weight) +
                            ")\n";
                } else {
                    s["odds_ratio"] = nullptr;
                    text += "  odds_ratio[" + fairkit::detail::format_assignment(stratum.context) +
                            "] = uncomparable\n";
                }
                j["strata"].push_back(s);
            }
            j["note"] = r.note;
            metrics_json.push_back(j);
        } else {
            throw fairkit::Error("unknown metric '" + token + "'");
        }
    }

    const int exit_code = all_fair ? kExitFair : kExitUnfair;
    text += all_fair ? "verdict: fair\n" : "verdict: not fair\n";
    report_json["verdict"] = all_fair ? "fair" : "not fair";
    report_json["exit"] = exit_code;
    emit(opts, text, report_json);
    return exit_code;
}

// --------------------------------------------------------------------------
// repair
// --------------------------------------------------------------------------

int run_repair(const CommonOptions& opts, const std::string& algo, double epsilon,
               std::int64_t budget, std::uint64_t seed) {
    const auto in = load_inputs(opts);
    const auto& ds = in.data;
    const auto& spec = in.spec;

    // Saturated constraint derived from the declared roles: the outcome must
    // be independent of everything except the admissible set, given the
    // admissible set. A declared training label participates on the
    // dependent side so the statement stays saturated.
    if (!spec.admissible_declared) {
        throw fairkit::Error("repair requires a declared admissible set (may be empty)");
    }
    fairkit::RepairProblem problem;
    problem.dataset = ds;
    problem.constraint.x = {spec.outcome};
    for (const auto& v : ds.schema) {
        if (v.name == spec.outcome) continue;
        if (spec.admissible.count(v.name)) {
            problem.constraint.z.insert(v.name);
        } else {
            problem.constraint.y.insert(v.name);
        }
    }
    problem.epsilon = epsilon;

    fairkit::RepairPlan plan;
    if (algo == "ic") {
        plan = fairkit::independent_coupling(problem);
    } else if (algo == "mf") {
        plan = fairkit::matrix_factorization_repair(problem);
    } else if (algo == "hard") {
        plan = fairkit::combinatorial_repair(problem, fairkit::CombinatorialMode::Hard, budget,
                                             seed);
    } else if (algo == "soft") {
        plan = fairkit::combinatorial_repair(problem, fairkit::CombinatorialMode::Soft, budget,
                                             seed);
    } else {
        throw fairkit::Error("unknown repair algorithm '" + algo + "' (expected ic|mf|hard|soft)");
    }

    const auto verification = fairkit::verify_repair(ds, plan, problem);
    const auto repaired = fairkit::apply_plan(ds, plan);

    const std::string prefix = opts.out_path.empty() ? "repair_out" : opts.out_path;
    fairkit::save_csv_file(repaired, prefix + ".repaired.csv", opts.weight_column);
    fairkit::save_plan_file(plan, prefix + ".plan.csv");

    std::string text = "fairkit repair\n" + config_text(opts);
    text += "constraint: " + problem.constraint.to_string() + "\n";
    text += "algorithm: " + plan.algorithm + ", epsilon " + fmt(epsilon) + ", seed " +
            std::to_string(seed) + ", budget " + std::to_string(budget) + "\n";
    text += "cost: " + std::to_string(plan.cost) + "\n";
    text += "cmi_before: " + fmt(verification.cmi_before) + " bits\n";
    text += "cmi_after: " + fmt(verification.cmi_after) + " bits" +
            (verification.exact_independent ? " (exactly independent)" : "") + "\n";
    text += std::string("proven_optimal: ") + (plan.proven_optimal ? "yes" : "no") + "\n";
    for (const auto& [column, drift] : verification.marginal_drift) {
        text += "marginal_drift[" + column + "] = " + fmt(drift) + "\n";
    }
    text += "note: " + verification.note + "\n";
    text += "plan: " + prefix + ".plan.csv\n";
    text += "repaired: " + prefix + ".repaired.csv\n";

    ordered_json j;
    j["command"] = "repair";
    j["config"] = config_json(opts);
    j["constraint"] = problem.constraint.to_string();
    j["algorithm"] = plan.algorithm;
    j["epsilon"] = epsilon;
    j["seed"] = seed;
    j["budget"] = budget;
    j["cost"] = plan.cost;
    j["cmi_before"] = verification.cmi_before;
    j["cmi_after"] = verification.cmi_after;
    j["exact_independent"] = verification.exact_independent;
    j["proven_optimal"] = plan.proven_optimal;
    j["marginal_drift"] = ordered_json::object();
    for (const auto& [column, drift] : verification.marginal_drift) {
        j["marginal_drift"][column] = drift;
    }
    j["note"] = verification.note;
    j["plan_file"] = prefix + ".plan.csv";
    j["repaired_file"] = prefix + ".repaired.csv";

    const int exit_code = verification.cmi_after <= epsilon ? kExitFair : kExitUnfair;
    j["exit"] = exit_code;
    std::ofstream report_file(prefix + (opts.format == "json" ? ".report.json" : ".report.txt"));
    if (report_file) report_file << (opts.format == "json" ? j.dump(2) + "\n" : text);
    std::cout << (opts.format == "json" ? j.dump(2) + "\n" : text);
    return exit_code;
}

// --------------------------------------------------------------------------
// detect
// --------------------------------------------------------------------------

int run_detect(const CommonOptions& opts) {
    const auto in = load_inputs(opts);
    if (!in.dag) throw fairkit::Error("detect requires --dag");
    const auto& ds = in.data;

    fairkit::DetectionQuery q;
    q.treatment = in.spec.sensitive;
    q.treatment_active = in.spec.protected_label;
    q.outcome = in.spec.outcome;
    q.outcome_positive = in.spec.positive_outcome;
    q.dag = *in.dag;
    q.check(ds);

    const auto naive = fairkit::naive_groupby(ds, q);
    const double total = fairkit::adjusted_total_effect(ds, q);
    const auto mediator_set = fairkit::mediators(q);
    const auto confounder_set = fairkit::confounders(q);
    const auto cde = fairkit::controlled_direct_effect(ds, q);
    const auto ranking = mediator_set.empty() ? std::vector<fairkit::MediatorRank>{}
                                              : fairkit::rank_mediators(ds, q);

    std::string text = "fairkit detect\n" + config_text(opts);
    text += "treatment: " + q.treatment + "=" + q.treatment_active + ", outcome: " + q.outcome +
            "=" + q.outcome_positive + "\n";
    auto join = [](const fairkit::NameSet& s) {
        std::string out;
        for (const auto& name : s) {
            if (!out.empty()) out += ",";
            out += name;
        }
        return out.empty() ? std::string("(none)") : out;
    };
    text += "confounders: " + join(confounder_set) + "\n";
    text += "mediators: " + join(mediator_set) + "\n";
    text += "naive: treated " + fmt(naive.treated_mean) + ", untreated " +
            fmt(naive.untreated_mean) + ", difference " + fmt(naive.difference) + "\n";
    text += "adjusted_total_effect: " + fmt(total) + "\n";
    text += "controlled_direct_effect (all mediators pinned): summary " + fmt(cde.summary) + "\n";
    for (const auto& ctx : cde.contexts) {
        const std::string name = fairkit::detail::format_assignment(ctx.context);
        if (ctx.evaluated) {
            text += "  effect[" + name + "] = " + fmt(ctx.effect) + " (weight " + fmt(ctx.weight) +
                    ")\n";
        } else {
            text += "  effect[" + name + "] = unobserved context, skipped\n";
        }
    }
    text += "indirect (total - direct, difference method): " + fmt(total - cde.summary) + "\n";
    for (const auto& entry : ranking) {
        text += "mediator " + entry.mediator + ": contribution " + fmt(entry.contribution) +
                " (direct-with-it-pinned " + fmt(entry.cde_summary) + ")\n";
        for (std::size_t i = 0; i < entry.explanations.size() && i < 3; ++i) {
            const auto& ex = entry.explanations[i];
            text += "  " + entry.mediator + "=" + ex.label + ": share " + fmt(ex.share_treated) +
                    " vs " + fmt(ex.share_untreated) + ", outcome rate " + fmt(ex.outcome_rate) +
                    ", score " + fmt(ex.score) + "\n";
        }
    }

    // machine-readable block: one JSON record per line
    std::vector<ordered_json> records;
    {
        ordered_json r;
        r["record"] = "naive";
        r["treated"] = naive.treated_mean;
        r["untreated"] = naive.untreated_mean;
        r["difference"] = naive.difference;
        records.push_back(r);
    }
    {
        ordered_json r;
        r["record"] = "adjusted_total_effect";
        r["value"] = total;
        records.push_back(r);
    }
    {
        ordered_json r;
        r["record"] = "controlled_direct_effect";
        r["summary"] = cde.summary;
        r["indirect"] = total - cde.summary;
        records.push_back(r);
    }
    for (const auto& entry : ranking) {
        ordered_json r;
        r["record"] = "mediator";
        r["name"] = entry.mediator;
        r["contribution"] = entry.contribution;
        r["direct_pinned"] = entry.cde_summary;
        records.push_back(r);
    }
    text += "---\n";
    for (const auto& r : records) text += r.dump() + "\n";

    ordered_json j;
    j["command"] = "detect";
    j["config"] = config_json(opts);
    j["records"] = ordered_json::array();
    for (const auto& r : records) j["records"].push_back(r);
    emit(opts, text, j);
    return kExitFair;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal fairness workbench"};
    app.require_subcommand(1);

    CommonOptions check_opts;
    std::string metrics = "auto";
    auto* check_cmd = app.add_subcommand("check", "evaluate fairness metrics");
    add_common(check_cmd, check_opts, false);
    check_cmd->add_option("--metrics", metrics,
                          "comma list: dp,csp,eo,pp,proxy,kfair,justifiable[:MODE],"
                          "impossibility,rod (default: every applicable metric)");

    CommonOptions repair_opts;
    std::string algo = "ic";
    double epsilon = 0.0;
    std::int64_t budget = 2000;
    std::uint64_t seed = 0;
    auto* repair_cmd = app.add_subcommand("repair", "enforce the derived independence");
    add_common(repair_cmd, repair_opts, false);
    repair_cmd->add_option("--algo", algo, "ic|mf|hard|soft (default ic)");
    repair_cmd->add_option("--epsilon", epsilon, "target CMI in bits (default 0)");
    repair_cmd->add_option("--budget", budget, "local-search step budget (default 2000)");
    repair_cmd->add_option("--seed", seed, "random seed for the soft search (default 0)");

    CommonOptions detect_opts;
    auto* detect_cmd = app.add_subcommand("detect", "naive vs adjusted discrimination probe");
    add_common(detect_cmd, detect_opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message
        return kExitFault;
    }

    try {
        if (check_cmd->parsed()) return run_check(check_opts, metrics);
        if (repair_cmd->parsed()) return run_repair(repair_opts, algo, epsilon, budget, seed);
        if (detect_cmd->parsed()) return run_detect(detect_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFault;
    }
    return kExitFault;
}

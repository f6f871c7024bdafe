// Command-line surface: gen, kill-report, check-equiv, eval, dump-constraints.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qdgen/catalog.hpp"
#include "qdgen/constraint_builder.hpp"
#include "qdgen/dataset.hpp"
#include "qdgen/decorrelate.hpp"
#include "qdgen/equivalence.hpp"
#include "qdgen/errors.hpp"
#include "qdgen/oracle.hpp"
#include "qdgen/parser.hpp"
#include "qdgen/pipeline.hpp"
#include "qdgen/sizer.hpp"
#include "qdgen/vendor_json.hpp"

namespace fs = std::filesystem;
using namespace qdgen;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

SchemaCatalog load_catalog(const std::string& schema_path, const std::string& samples_dir,
                           std::vector<std::string>* warnings) {
    SchemaCatalog cat = load_schema(read_file(schema_path));
    if (!samples_dir.empty()) load_sample_values(cat, samples_dir, warnings);
    return cat;
}

std::string query_stem(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_gen(const std::string& schema, const std::string& samples, const std::string& query,
            GenOptions opts, bool dump_decorrelated, bool dump_sizes, bool dump_catalog) {
    std::vector<std::string> warnings;
    SchemaCatalog cat = load_catalog(schema, samples, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (dump_catalog) {
        std::cout << cat.to_json() << "\n";
        return 0;
    }
    PreparedQuery prep;
    try {
        prep = prepare_query(cat, read_file(query), query_stem(query), opts);
    } catch (const UnsupportedFeature& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const UnsupportedCorrelation& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    for (const auto& w : prep.original.warnings) std::cerr << "warning: " << w << "\n";
    if (dump_decorrelated) {
        std::cout << to_sql(prep.decorrelated) << "\n";
        return 0;
    }
    if (dump_sizes) {
        SchemaCatalog c2 = prep.catalog;
        QueryTree t2 = prep.decorrelated.deep_copy();
        cover_numeric_literals(c2, t2);
        compile_string_conditions(c2, t2);
        BuildPlan plan = lower_to_plan(t2, c2);
        SizerOptions sopts;
        sopts.cap = opts.cap;
        std::cout << size_plan(t2, plan, c2, sopts).to_json() << "\n";
        return 0;
    }
    if (opts.dump_constraints) {
        std::cout << dump_constraints_text(prep, opts, /*folded=*/true);
        return 0;
    }
    auto outcomes = generate_all_datasets(prep, opts);
    write_report(prep, outcomes, opts);
    int generated = 0, timeouts = 0;
    for (const auto& o : outcomes) {
        std::cout << o.name << ": " << to_string(o.status);
        if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
        std::cout << "\n";
        if (o.dataset) ++generated;
        if (o.status == DatasetStatus::Timeout) ++timeouts;
    }
    std::cout << "artifacts: " << (fs::path(opts.out_dir) / prep.name).string() << "\n";
    if (generated == 0 && timeouts > 0) return 2;
    if (generated == 0) return 1;
    return 0;
}

int cmd_kill_report(const std::string& schema, const std::string& samples,
                    const std::string& query, const std::string& mutants_dir,
                    const std::string& datasets_dir, const std::string& out_path) {
    SchemaCatalog cat = load_catalog(schema, samples, nullptr);
    QueryTree original = parse_query(read_file(query), cat);
    Oracle oracle(cat);

    std::vector<std::pair<std::string, Dataset>> datasets;
    if (fs::exists(datasets_dir)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(datasets_dir))
            if (e.is_regular_file() && e.path().extension() == ".sql") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            datasets.emplace_back(f.filename().string(),
                                  load_dataset_sql(read_file(f.string()), cat));
    }

    nlohmann::json report;
    report["query"] = query_stem(query);
    int killed = 0, total = 0;
    std::vector<fs::path> mutant_files;
    if (fs::exists(mutants_dir))
        for (const auto& e : fs::directory_iterator(mutants_dir))
            if (e.is_regular_file() && e.path().extension() == ".sql")
                mutant_files.push_back(e.path());
    std::sort(mutant_files.begin(), mutant_files.end());
    for (const auto& mf : mutant_files) {
        ++total;
        nlohmann::json jm;
        jm["mutant"] = mf.filename().string();
        std::string killer;
        std::string error;
        try {
            QueryTree mutant = parse_query(read_file(mf.string()), cat);
            for (const auto& [name, d] : datasets) {
                if (oracle.distinguishes(original, mutant, d)) {
                    killer = name;
                    break;
                }
            }
        } catch (const std::exception& e) {
            error = e.what();
        }
        if (!error.empty()) {
            jm["status"] = "unevaluable";
            jm["detail"] = error;
        } else if (!killer.empty()) {
            jm["status"] = "killed";
            jm["by"] = killer;
            ++killed;
        } else {
            jm["status"] = "not-killed";
            jm["detail"] = "possibly equivalent";
        }
        report["mutants"].push_back(jm);
    }
    report["total"] = total;
    report["killed"] = killed;
    report["kill_rate"] = total ? static_cast<double>(killed) / total : 0.0;
    std::string text = report.dump(2) + "\n";
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream(out_path) << text;
        std::cout << "killed " << killed << "/" << total << " -> " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"test-data generation for SQL queries"};
    cli.require_subcommand(1);

    std::string schema, samples, query, out = "out", solver, mutants, datasets;
    std::string query2, dataset_path, report_out;
    double timeout_s = 120.0;
    int max_tuples = 16, parallel = 1, bound = 4;
    bool dump_constraintsf = false, dump_decorrelated = false, dump_sizes = false,
         dump_catalog = false, eq_opt = false, folded = true;

    auto add_common = [&](CLI::App* sub, bool need_query) {
        sub->add_option("--schema", schema, "schema.sql (DDL subset)")->required();
        sub->add_option("--samples", samples, "directory of <table>.<column>.txt sample files");
        if (need_query)
            sub->add_option("--query", query, "query .sql file")->required();
        sub->add_option("--solver", solver, "SMT solver command (default: z3 or bundled)");
        sub->add_option("--timeout", timeout_s, "per-dataset solver timeout, seconds");
        sub->add_option("--max-result-tuples", max_tuples, "result table size cap");
    };

    CLI::App* gen = cli.add_subcommand("gen", "generate the non-empty and mutation datasets");
    add_common(gen, true);
    gen->add_option("--out", out, "output directory");
    gen->add_option("--parallel", parallel, "concurrent dataset tasks");
    gen->add_flag("--dump-constraints", dump_constraintsf,
                  "print the constraint program (pre-unfolding) and exit");
    gen->add_flag("--dump-decorrelated", dump_decorrelated,
                  "print the rewritten query and exit");
    gen->add_flag("--dump-sizes", dump_sizes, "print the size plan and exit");
    gen->add_flag("--dump-catalog", dump_catalog, "print the loaded catalog and exit");
    gen->add_flag("--opt-equality-correlation", eq_opt,
                  "rewrite equality-correlated EXISTS to joins with DISTINCT");

    CLI::App* kr = cli.add_subcommand("kill-report",
                                      "cross-evaluate mutants against generated datasets");
    add_common(kr, true);
    kr->add_option("--mutants", mutants, "directory of mutant .sql files")->required();
    kr->add_option("--datasets", datasets, "directory with generated dataset .sql files")
        ->required();
    kr->add_option("--out", report_out, "report path (default stdout)");

    CLI::App* ce = cli.add_subcommand("check-equiv", "bounded non-equivalence check");
    add_common(ce, false);
    ce->add_option("query1", query, "first query file")->required();
    ce->add_option("query2", query2, "second query file")->required();
    ce->add_option("--bound", bound, "base table size bound");
    ce->add_option("--out", out, "output directory for the witness");

    CLI::App* ev = cli.add_subcommand("eval", "evaluate a query on a dataset with the oracle");
    add_common(ev, true);
    ev->add_option("--dataset", dataset_path, "dataset .sql file or CSV directory")->required();

    CLI::App* dc = cli.add_subcommand("dump-constraints",
                                      "emit the SMT-LIB2 program for a query");
    add_common(dc, true);
    dc->add_flag("--unfolded", [&folded](size_t) { folded = false; },
                 "emit the quantifier-free unfolded form");

    CLI11_PARSE(cli, argc, argv);

    GenOptions opts;
    opts.cap = max_tuples;
    opts.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
    opts.solver_cmd = solver;
    opts.out_dir = out;
    opts.parallel = parallel;
    opts.dump_constraints = dump_constraintsf;
    opts.equality_join_opt = eq_opt;

    try {
        if (gen->parsed())
            return cmd_gen(schema, samples, query, opts, dump_decorrelated, dump_sizes,
                           dump_catalog);
        if (kr->parsed())
            return cmd_kill_report(schema, samples, query, mutants, datasets, report_out);
        if (ce->parsed()) {
            SchemaCatalog cat = load_catalog(schema, samples, nullptr);
            EquivalenceVerdict v =
                check_equivalence(cat, read_file(query), read_file(query2), bound, opts);
            if (v.timeout) {
                std::cout << "timeout\n";
                return 2;
            }
            if (!v.non_equivalent) {
                std::cout << "no counterexample within bound " << bound << "\n";
                return 0;
            }
            std::string wpath = (fs::path(out) / "witness.sql").string();
            fs::create_directories(out);
            std::ofstream(wpath) << v.witness->to_insert_sql(cat);
            std::cout << "non-equivalent; witness written to " << wpath << "\n";
            return 1;
        }
        if (ev->parsed()) {
            SchemaCatalog cat = load_catalog(schema, samples, nullptr);
            QueryTree q = parse_query(read_file(query), cat);
            Dataset d = fs::is_directory(dataset_path)
                            ? load_dataset_csv_dir(dataset_path, cat)
                            : load_dataset_sql(read_file(dataset_path), cat);
            Oracle oracle(cat);
            std::cout << oracle.evaluate(q, d).to_csv_with_counts();
            return 0;
        }
        if (dc->parsed()) {
            SchemaCatalog cat = load_catalog(schema, samples, nullptr);
            PreparedQuery prep = prepare_query(cat, read_file(query), query_stem(query), opts);
            std::cout << dump_constraints_text(prep, opts, folded);
            return 0;
        }
    } catch (const UnsupportedFeature& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const UnsupportedCorrelation& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

#include "steatosis/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "steatosis/errors.hpp"
#include "steatosis/evaluation.hpp"
#include "steatosis/ingest.hpp"
#include "steatosis/model_io.hpp"
#include "steatosis/run_config.hpp"
#include "steatosis/synth.hpp"

namespace steatosis {

namespace {

namespace fs = std::filesystem;

std::string number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + " is not valid JSON: " + e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string());
}

nlohmann::json table_params(const Hyperparams& p) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : p) j[k] = table_notation(v);
    return j;
}

ParsedCohort read_cohort(const fs::path& path) {
    ParsedCohort cohort = parse_cohort_file(path);
    if (cohort.records.empty()) throw DataError("no records");
    return cohort;
}

struct SynthArgs {
    std::string config, preset, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> size;
    bool print_config = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    SynthConfig cfg = a.config.empty() ? synth_preset(a.preset.empty() ? "incremental-signal" : a.preset)
                                       : synth_config_from_json(read_json_file(a.config));
    if (a.seed) cfg.seed = *a.seed;
    if (a.size) {
        cfg.size = *a.size;
        cfg.tier_grade_counts.reset();
    }
    validate(cfg);
    if (a.print_config) {
        const std::string text = dump_json(to_json(cfg));
        if (a.out.empty()) out << text;
        else write_file_atomic(a.out, text);
        return kExitOk;
    }
    if (a.out.empty()) throw ConfigError("synth needs --out");
    const auto records = generate_cohort(cfg);
    std::ostringstream csv;
    write_cohort_csv(csv, records);
    write_file_atomic(a.out, csv.str());
    out << "wrote " << records.size() << " subjects to " << a.out << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string config, data, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> k, budget;
    std::optional<double> threshold;
    std::optional<std::string> families;
    bool no_evaluate = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    if (!a.data.empty()) cfg.data = a.data;
    if (!a.out.empty()) cfg.out = a.out;
    if (a.seed) cfg.seed = *a.seed;
    if (a.k) cfg.k = *a.k;
    if (a.budget) cfg.layer1_budget = cfg.meta_budget = *a.budget;
    if (a.threshold) cfg.threshold = *a.threshold;
    if (a.families) cfg.families = parse_families(*a.families);
    if (a.no_evaluate) cfg.evaluate = false;
    validate(cfg);
    if (cfg.data.empty()) throw ConfigError("train needs --data");

    const ParsedCohort cohort = read_cohort(cfg.data);
    const Partition part = partition_tiers(cohort.records, cohort.report, cohort.source_rows);
    CascadeTraining trained = train_cascade(part, cascade_options(cfg));
    trained.model.provenance().config_hash = config_hash(cfg);
    const CascadeModel& model = trained.model;

    nlohmann::json report;
    report["protocol"] = protocol_description(cfg.k);
    report["config"] = to_json(cfg);
    report["config_hash"] = config_hash(cfg);
    report["ingest"] = to_json(part.report);

    auto screening = nlohmann::json::array();
    for (std::size_t i = 0; i < trained.selection.screened.size(); ++i) {
        const auto& s = trained.selection.screened[i];
        const auto& search = trained.layer1_searches[i];
        screening.push_back({{"family", family_name(s.spec.family)},
                             {"hyperparameters", table_params(s.spec.params)},
                             {"search_candidates", search.candidates.size()},
                             {"mean_cv_accuracy", s.mean_accuracy ? nlohmann::json(*s.mean_accuracy) : nlohmann::json(nullptr)},
                             {"kept", s.kept},
                             {"error", s.error}});
    }
    auto members = nlohmann::json::array();
    for (const auto& m : model.layer1().members) members.push_back(family_name(m.spec().family));
    report["layer1"] = {{"threshold", cfg.threshold},
                        {"screening", screening},
                        {"members", members},
                        {"output_width", model.layer1().output_width()}};
    auto meta = [](const MetaNetwork& m, const SearchResult& s) {
        return nlohmann::json{{"input_width", m.input_width},
                              {"hyperparameters", table_params(m.network.spec().params)},
                              {"search_candidates", s.candidates.size()},
                              {"mean_cv_accuracy", s.best_cv.accuracy.mean}};
    };
    report["layer2"] = meta(model.layer2(), trained.layer2_search);
    report["layer3"] = meta(model.layer3(), trained.layer3_search);
    if (cfg.evaluate)
        report["evaluation"] = to_json(evaluate_cascade_cv(model, part, cfg.k, cfg.seed));

    ensure_dir(cfg.out);
    save_model(cfg.out / "model.json", model);
    write_file_atomic(cfg.out / "training_report.json", dump_json(report));
    out << "layer-1 members:";
    for (const auto& m : members) out << " " << m.get<std::string>();
    out << "\nwrote " << (cfg.out / "model.json").string() << " and " << (cfg.out / "training_report.json").string()
        << "\n";
    return kExitOk;
}

struct ModelArgs {
    std::string model, data, out;
};

int cmd_evaluate(const ModelArgs& a, std::ostream& out) {
    const CascadeModel model = load_model(a.model);
    const ParsedCohort cohort = read_cohort(a.data);
    const RoutedEvaluation ev = evaluate_routed(model, cohort.records);
    const fs::path dir = a.out.empty() ? fs::path("evaluation") : fs::path(a.out);
    ensure_dir(dir);
    nlohmann::json j = to_json(ev);
    j["ingest"] = to_json(cohort.report);
    write_file_atomic(dir / "evaluation.json", dump_json(j));
    if (ev.nash_roc) write_file_atomic(dir / "roc_nash.csv", roc_csv(*ev.nash_roc));
    for (const auto& [c, curve] : ev.ovr)
        write_file_atomic(dir / ("roc_ovr_grade" + std::to_string(c) + ".csv"), roc_csv(curve));
    out << "scored " << ev.scored << " records, accuracy " << percent1(ev.overall.accuracy) << "%\n";
    return kExitOk;
}

int cmd_predict(const ModelArgs& a, std::ostream& out) {
    const CascadeModel model = load_model(a.model);
    const ParsedCohort cohort = read_cohort(a.data);
    std::ostringstream csv;
    csv << "id,grade,p0,p1,p2,p3,nash_probability,layer_used,error\n";
    std::size_t ok = 0;
    for (const auto& r : cohort.records) {
        csv << r.id << ',';
        try {
            const auto p = model.predict(r);
            csv << p.label;
            for (double v : p.probabilities) csv << ',' << number(v);
            csv << ',' << number(p.nash_probability) << ',' << p.layer_used << ",\n";
            ++ok;
        } catch (const DataError& e) {
            csv << ",,,,,,," << e.what() << "\n";
        }
    }
    if (ok == 0) throw DataError("no record could be scored");
    if (a.out.empty()) out << csv.str();
    else write_file_atomic(a.out, csv.str());
    return kExitOk;
}

int status_of(const std::exception_ptr& ep, std::ostream& err) {
    try {
        std::rethrow_exception(ep);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const TrainingError& e) {
        err << "training error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Three-layer cascade ensemble for steatosis grading"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort CSV");
    synth->add_option("--config", sa.config, "synth config JSON");
    synth->add_option("--preset", sa.preset, "incremental-signal | null-signal");
    synth->add_option("--seed", sa.seed, "override the config seed");
    synth->add_option("--size", sa.size, "cohort size (drops exact tier-grade counts)");
    synth->add_option("--out", sa.out, "output CSV (or config JSON with --print-config)");
    synth->add_flag("--print-config", sa.print_config, "write the resolved config instead of a cohort");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train the cascade and write model + report");
    train->add_option("--config", ta.config, "run config JSON");
    train->add_option("--data", ta.data, "labeled cohort CSV");
    train->add_option("--out", ta.out, "output directory");
    train->add_option("--seed", ta.seed, "random seed");
    train->add_option("--k", ta.k, "cross-validation folds (default 10)");
    train->add_option("--threshold", ta.threshold, "layer-1 selection threshold (default 0.70)");
    train->add_option("--budget", ta.budget, "random-search candidates per family and layer (default 60)");
    train->add_option("--families", ta.families, "comma-separated candidate families");
    train->add_flag("--no-evaluate", ta.no_evaluate, "skip the per-layer CV report");

    ModelArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "route a labeled cohort and report metrics");
    evaluate->add_option("--model", ea.model, "model container")->required();
    evaluate->add_option("--data", ea.data, "labeled cohort CSV")->required();
    evaluate->add_option("--out", ea.out, "output directory");

    ModelArgs pa;
    auto* predict = app.add_subcommand("predict", "score a cohort");
    predict->add_option("--model", pa.model, "model container")->required();
    predict->add_option("--data", pa.data, "cohort CSV, labels optional")->required();
    predict->add_option("--out", pa.out, "output CSV (stdout when omitted)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*synth) return cmd_synth(sa, out);
        if (*train) return cmd_train(ta, out);
        if (*evaluate) return cmd_evaluate(ea, out);
        return cmd_predict(pa, out);
    } catch (...) {
        return status_of(std::current_exception(), err);
    }
}

}  // namespace steatosis

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "textcascade/harness.hpp"
#include "textcascade/parallel.hpp"
#include "textcascade/simd/kernels.hpp"

namespace textcascade {

namespace {

struct DataOptions {
    std::string corpus;
    std::string vectors;
    std::string parses;
    std::string catalog;
    std::string bag_cache;
    bool fold_case = false;
    double train_fraction = 0.9;
    double valid_share = 0.5;
};

struct GlobalOptions {
    std::uint64_t seed = 1;
    std::size_t workers = 0;
    std::string kernels = "auto";
};

void add_data_options(CLI::App* cmd, DataOptions& data) {
    cmd->add_option("--corpus", data.corpus, "TSV corpus: text-id, class label, text[, split]")->required();
    cmd->add_option("--vectors", data.vectors, "word2vec text-format vectors")->required();
    cmd->add_option("--parses", data.parses, "CoNLL-U parses keyed by sent_id = text id");
    cmd->add_option("--catalog", data.catalog, "class catalog, one label per line");
    cmd->add_option("--bag-cache", data.bag_cache, "feature bag cache to reuse when it matches");
    cmd->add_flag("--fold-case", data.fold_case, "lowercase words when loading and looking up vectors");
    cmd->add_option("--train-fraction", data.train_fraction, "share of unsplit records put in train")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--valid-share", data.valid_share, "share of the held-out part put in valid")
        ->check(CLI::Range(0.0, 1.0));
}

Workspace load(const DataOptions& data, const GlobalOptions& global) {
    IngestPaths paths;
    paths.corpus = data.corpus;
    paths.vectors = data.vectors;
    if (!data.parses.empty()) paths.parses = data.parses;
    if (!data.catalog.empty()) paths.catalog = data.catalog;
    if (!data.bag_cache.empty()) paths.bag_cache = data.bag_cache;
    IngestConfig config;
    config.fold_case = data.fold_case;
    config.splits = {data.train_fraction, data.valid_share, global.seed};
    return ingest(paths, config);
}

RecurrentModel load_model(const std::string& path, const Workspace& ws) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    auto checkpoint = load_checkpoint(in);
    if (checkpoint.labels != ws.index->labels()) {
        throw std::runtime_error("checkpoint '" + path + "' was trained on a different class set");
    }
    if (input_dim(checkpoint.model) != ws.table->dim()) {
        throw std::runtime_error("checkpoint '" + path + "' expects a different vector dimension");
    }
    return std::move(checkpoint.model);
}

std::vector<std::string> split_list(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void print_summary(std::ostream& out, const Workspace& ws) {
    const auto& records = ws.corpus.records;
    std::size_t parsed = 0;
    for (const auto& r : records) parsed += r.tree ? 1 : 0;
    out << "records " << records.size() << " (train " << ws.corpus.in_split(Split::train).size() << ", valid "
        << ws.corpus.in_split(Split::valid).size() << ", test " << ws.corpus.in_split(Split::test).size()
        << ")\n";
    out << "classes " << ws.index->class_count() << " trained, " << ws.corpus.catalog.size() << " in catalog\n";
    out << "parsed " << parsed << ", adjacency fallback " << records.size() - parsed << '\n';
    out << "vectors " << ws.table->size() << " x " << ws.table->dim() << '\n';
    for (Split split : {Split::valid, Split::test}) {
        std::size_t unseen = 0;
        for (const auto* r : ws.corpus.in_split(split)) unseen += ws.index->find(r->label) ? 0 : 1;
        if (unseen > 0) out << split_name(split) << " queries with unseen class " << unseen << '\n';
    }
    if (ws.bags_from_cache) out << "bags loaded from cache\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Two-stage text classification: recurrent filter, syntactic nearest neighbor"};
    app.set_config("--config", "", "TOML file with option values");
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "root seed for splits, synthesis, LSH planes and training");
    auto* workers_opt = app.add_option("--workers", global.workers, "query evaluation threads");
    app.add_option("--kernels", global.kernels, "auto, scalar, avx2 or neon")
        ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic corpus, parses and vectors");
    SynthConfig synth_config;
    std::string synth_out;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--classes", synth_config.classes);
    synth->add_option("--samples-per-class", synth_config.samples_per_class);
    synth->add_option("--vocab", synth_config.vocab, "filler words");
    synth->add_option("--dim", synth_config.dim);
    synth->add_option("--noise", synth_config.noise)->check(CLI::Range(0.0, 1.0));
    synth->add_option("--spread", synth_config.spread);
    synth->add_option("--signature-size", synth_config.signature_size);
    synth->add_option("--signature-per-text", synth_config.signature_per_text);
    synth->add_option("--filler-per-text", synth_config.filler_per_text);
    synth->add_option("--valid-queries", synth_config.valid_queries);
    synth->add_option("--test-queries", synth_config.test_queries);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "load and validate a corpus");
    DataOptions ingest_data;
    std::string ingest_out;
    add_data_options(ingest_cmd, ingest_data);
    ingest_cmd->add_option("--write-corpus", ingest_out, "write the corpus back with its split column");

    // build-index
    auto* build = app.add_subcommand("build-index", "build the training index and write its bag cache");
    DataOptions build_data;
    std::string build_out;
    add_data_options(build, build_data);
    build->add_option("--out", build_out, "bag cache path")->required();

    // train-rnn
    auto* train_cmd = app.add_subcommand("train-rnn", "train a first-stage recurrent model");
    DataOptions train_data;
    SweepSpec train_spec;
    std::string cell = "gru";
    std::string train_out;
    add_data_options(train_cmd, train_data);
    train_cmd->add_option("--cell", cell)->check(CLI::IsMember({"gru", "lstm"}));
    train_cmd->add_option("--hidden", train_spec.hidden_dim);
    train_cmd->add_option("--epochs", train_spec.epochs);
    train_cmd->add_option("--lr", train_spec.learning_rate);
    train_cmd->add_option("--clip-norm", train_spec.clip_norm, "recurrent gradient norm cap, 0 for none");
    train_cmd->add_option("--out", train_out, "checkpoint path")->required();

    // profile
    auto* profile = app.add_subcommand("profile", "alpha/rho profile of a first-stage model as CSV");
    DataOptions profile_data;
    std::string profile_checkpoint, profile_split = "valid", profile_out;
    std::size_t profile_n = 10;
    add_data_options(profile, profile_data);
    profile->add_option("--checkpoint", profile_checkpoint)->required();
    profile->add_option("--split", profile_split)->check(CLI::IsMember({"train", "valid", "test"}));
    profile->add_option("-n,--top-n", profile_n)->check(CLI::PositiveNumber);
    profile->add_option("--out", profile_out, "CSV path, stdout if absent");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "evaluate the model roster; JSON lines plus a table");
    DataOptions sweep_data;
    SweepSpec spec;
    std::string models_list, bits_list, gru_checkpoint, lstm_checkpoint, sweep_out;
    std::string profile_split_name = "valid", eval_split_name = "test";
    std::size_t max_t = 0;
    bool selected_only = false;
    add_data_options(sweep, sweep_data);
    sweep->add_option("--models", models_list, "comma-separated roster");
    sweep->add_option("--lsh-bits", bits_list, "comma-separated bit counts");
    sweep->add_option("-n,--top-n", spec.n)->check(CLI::PositiveNumber);
    sweep->add_option("--repetitions", spec.repetitions)->check(CLI::PositiveNumber);
    sweep->add_option("--hidden", spec.hidden_dim);
    sweep->add_option("--epochs", spec.epochs);
    sweep->add_option("--lr", spec.learning_rate);
    sweep->add_option("--clip-norm", spec.clip_norm, "recurrent gradient norm cap, 0 for none");
    sweep->add_option("--gru-checkpoint", gru_checkpoint);
    sweep->add_option("--lstm-checkpoint", lstm_checkpoint);
    sweep->add_option("--profile-split", profile_split_name)->check(CLI::IsMember({"train", "valid", "test"}));
    sweep->add_option("--eval-split", eval_split_name)->check(CLI::IsMember({"train", "valid", "test"}));
    sweep->add_option("--max-t", max_t, "largest cascade t considered");
    sweep->add_option("--extra-t", spec.extra_ts, "additional cascade t values");
    sweep->add_flag("--usefulness-cut", spec.usefulness_cut, "skip t below the usefulness threshold");
    sweep->add_flag("--selected-only", selected_only, "evaluate only the selected t");
    sweep->add_option("--out", sweep_out, "JSON-lines path; stdout if absent, table then goes to stderr");

    // verify
    auto* verify = app.add_subcommand("verify", "check the cascade bounds over every t; nonzero exit on failure");
    DataOptions verify_data;
    SweepSpec verify_spec;
    std::string cells_list = "gru,lstm", verify_split = "test", verify_gru, verify_lstm;
    add_data_options(verify, verify_data);
    verify->add_option("--cells", cells_list);
    verify->add_option("--split", verify_split)->check(CLI::IsMember({"train", "valid", "test"}));
    verify->add_option("-n,--top-n", verify_spec.n)->check(CLI::PositiveNumber);
    verify->add_option("--hidden", verify_spec.hidden_dim);
    verify->add_option("--epochs", verify_spec.epochs);
    verify->add_option("--lr", verify_spec.learning_rate);
    verify->add_option("--clip-norm", verify_spec.clip_norm, "recurrent gradient norm cap, 0 for none");
    verify->add_option("--gru-checkpoint", verify_gru);
    verify->add_option("--lstm-checkpoint", verify_lstm);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    // the environment overrides the config file, an explicit flag overrides both
    bool workers_on_command_line = false;
    for (int i = 1; i < argc; ++i) {
        const std::string_view arg(argv[i]);
        if (arg == "--workers" || arg.starts_with("--workers=")) workers_on_command_line = true;
    }
    if (!workers_on_command_line && (std::getenv("TEXTCASCADE_WORKERS") || workers_opt->count() == 0)) {
        global.workers = default_workers();
    }
    global.workers = std::max<std::size_t>(1, global.workers);

    try {
        const auto level = simd::parse_level(global.kernels);
        if (!simd::level_supported(level)) {
            std::cerr << "error: kernels '" << global.kernels << "' are not available on this machine\n";
            return 2;
        }
        simd::set_level(level);

        if (*synth) {
            synth_config.seed = global.seed;
            write_synth(synth_corpus(synth_config), synth_out);
            std::cout << "wrote " << synth_out << '\n';
        } else if (*ingest_cmd) {
            const auto ws = load(ingest_data, global);
            print_summary(std::cout, ws);
            if (!ingest_out.empty()) {
                std::ofstream out(ingest_out);
                write_corpus(out, ws.corpus);
            }
        } else if (*build) {
            const auto ws = load(build_data, global);
            std::ofstream out(build_out, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write '" + build_out + "'");
            write_bag_cache(out, *ws.index);
            std::cout << "indexed " << ws.index->sample_count() << " texts in " << ws.index->class_count()
                      << " classes\n";
        } else if (*train_cmd) {
            const auto ws = load(train_data, global);
            TrainConfig config;
            config.cell = parse_cell(cell);
            config.hidden_dim = train_spec.hidden_dim;
            config.epochs = train_spec.epochs;
            config.learning_rate = train_spec.learning_rate;
            config.clip_norm = train_spec.clip_norm;
            config.seed = derive_seed(global.seed, "rnn-" + cell);
            config.class_count = ws.index->class_count();
            config.on_epoch = [](std::size_t epoch, double loss) {
                std::cerr << "epoch " << epoch << " loss " << loss << '\n';
            };
            Checkpoint checkpoint{train(training_examples(ws), *ws.table, config), global.seed,
                                  ws.index->labels()};
            std::ofstream out(train_out, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write '" + train_out + "'");
            save_checkpoint(out, checkpoint);
        } else if (*profile) {
            const auto ws = load(profile_data, global);
            const auto model = load_model(profile_checkpoint, ws);
            const auto queries = make_queries(ws, parse_split(profile_split));
            const auto curve = estimate_profiles(queries, model, *ws.index, profile_n, global.workers);
            if (profile_out.empty()) {
                write_profile_csv(std::cout, curve);
            } else {
                std::ofstream out(profile_out);
                write_profile_csv(out, curve);
            }
            if (!curve.excluded().empty()) {
                std::cerr << curve.excluded().size() << " queries with unseen classes left out\n";
            }
        } else if (*sweep) {
            const auto ws = load(sweep_data, global);
            spec.seed = global.seed;
            spec.workers = global.workers;
            spec.profile_split = parse_split(profile_split_name);
            spec.eval_split = parse_split(eval_split_name);
            spec.all_candidate_ts = !selected_only;
            if (max_t > 0) spec.max_t = max_t;
            if (!models_list.empty()) spec.models = split_list(models_list);
            if (!bits_list.empty()) {
                spec.lsh_bits.clear();
                for (const auto& b : split_list(bits_list)) spec.lsh_bits.push_back(std::stoul(b));
            }
            ModelCache models;
            if (!gru_checkpoint.empty()) models.emplace("gru", load_model(gru_checkpoint, ws));
            if (!lstm_checkpoint.empty()) models.emplace("lstm", load_model(lstm_checkpoint, ws));
            const auto result = run_sweep(ws, spec, models);

            std::ofstream file;
            if (!sweep_out.empty()) {
                file.open(sweep_out);
                if (!file) throw std::runtime_error("cannot write '" + sweep_out + "'");
            }
            std::ostream& jsonl = sweep_out.empty() ? std::cout : file;
            std::ostream& table = sweep_out.empty() ? std::cerr : std::cout;
            for (const auto& report : result.reports) write_report_json(jsonl, report);
            write_report_table(table, result.reports);
            for (const auto& [name, t] : result.selected_t) table << "selected t for " << name << ": " << t << '\n';
        } else if (*verify) {
            const auto ws = load(verify_data, global);
            verify_spec.seed = global.seed;
            const auto queries = make_queries(ws, parse_split(verify_split));
            bool all_passed = true;
            for (const auto& name : split_list(cells_list)) {
                const auto kind = parse_cell(name);
                const auto& path = kind == CellKind::gru ? verify_gru : verify_lstm;
                const auto model = path.empty() ? train_first_stage(ws, kind, verify_spec) : load_model(path, ws);
                const auto outcome = verify_cascade(ws, model, name, queries, verify_spec.n, global.workers);
                const bool passed = outcome.passed();
                all_passed = all_passed && passed;
                std::cout << (passed ? "PASS " : "FAIL ") << name << ": bound violations "
                          << outcome.bound_failures() << ", per-query violations " << outcome.query_failures()
                          << ", plateau violations " << outcome.plateaus.violations.size() << ", argmax t "
                          << outcome.plateaus.argmax_t
                          << (outcome.plateaus.argmax_at_change_point ? " (change point)" : " (not a change point)")
                          << ", profile " << (outcome.profile_sane ? "sane" : "broken") << ", full-t cascade "
                          << (outcome.cascade_matches_m2_at_full_t ? "matches" : "differs from") << " second stage\n";
            }
            return all_passed ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace textcascade

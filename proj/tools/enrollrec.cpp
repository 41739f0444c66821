#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "enrollrec/baselines.hpp"
#include "enrollrec/embedding_space.hpp"
#include "enrollrec/error.hpp"
#include "enrollrec/evaluation.hpp"
#include "enrollrec/pipeline.hpp"
#include "enrollrec/projection.hpp"
#include "enrollrec/service.hpp"
#include "enrollrec/synth.hpp"

using namespace enrollrec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config;
    std::string data = "data";
};

void add_common(CLI::App* cmd, Common& c, bool with_data = true) {
    cmd->add_option("--seed", c.seed, "Seed for every random component");
    cmd->add_option("--config", c.config, "JSON config (default: $ENROLLREC_CONFIG)");
    if (with_data) cmd->add_option("--data", c.data, "Data directory")->capture_default_str();
}

AppConfig app_config(const Common& c) {
    auto cfg = load_app_config(c.config ? std::optional<fs::path>(*c.config) : std::nullopt);
    if (c.seed) cfg.apply_seed(*c.seed);
    return cfg;
}

// Loaded and cleaned with the config's thresholds.
Dataset cleaned_dataset(const Common& c, const AppConfig& cfg) {
    auto d = load_dataset(c.data);
    d.enrollments = clean_enrollments(d.enrollments, cfg);
    if (d.enrollments.empty()) throw Error("no enrollments left after filtering " + c.data);
    return d;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

template <typename F>
void write_with(const fs::path& path, F&& f) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    f(out);
    if (!out) throw Error("write failed: " + path.string());
}

std::ifstream open_binary(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return in;
}

SkipGramModel read_embedding(const fs::path& p) {
    auto in = open_binary(p);
    return load_skipgram(in);
}

LstmModel read_lstm(const fs::path& p) {
    auto in = open_binary(p);
    return load_lstm(in);
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::shared_ptr<const Snapshot> load_snapshot(const Common& c, const AppConfig& cfg,
                                              const std::optional<std::string>& embedding,
                                              const std::optional<std::string>& model) {
    std::optional<SkipGramModel> e;
    std::optional<LstmModel> m;
    if (embedding) e = read_embedding(*embedding);
    if (model) m = read_lstm(*model);
    return build_snapshot(cleaned_dataset(c, cfg), cfg.test, cfg.bow_top_removed, std::move(e), std::move(m));
}

// Prints a service response; non-200 becomes an error.
void emit(const ApiResponse& r) {
    if (r.status != 200) {
        auto j = json::parse(r.body);
        throw Error(j.value("error", std::string("request failed")) + " (status " + std::to_string(r.status) + ")");
    }
    print(json::parse(r.body));
}

HttpService* g_http = nullptr;

void on_signal(int) {
    if (g_http) g_http->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Course enrollment recommender: training, evaluation and queries", "enrollrec"};
    app.require_subcommand(1);

    // synth
    Common synth_c;
    std::string synth_out = "data";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted structure");
    add_common(synth, synth_c, false);
    synth->add_option("--output", synth_out, "Output directory")->capture_default_str();

    // ingest
    Common ingest_c;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "Validate and filter a data directory");
    add_common(ingest, ingest_c);
    ingest->add_option("--output", ingest_out, "Write the cleaned data directory here");

    // train-embedding
    Common emb_c;
    std::string emb_out = "models/embedding.bin";
    auto* train_emb = app.add_subcommand("train-embedding", "Train skip-gram course vectors");
    add_common(train_emb, emb_c);
    train_emb->add_option("--output", emb_out, "Model file")->capture_default_str();

    // train-lstm
    Common lstm_c;
    std::string lstm_out = "models/lstm.bin";
    auto* train_lstm_cmd = app.add_subcommand("train-lstm", "Train the next-semester recommender");
    add_common(train_lstm_cmd, lstm_c);
    train_lstm_cmd->add_option("--output", lstm_out, "Model file")->capture_default_str();

    // train-baselines
    Common base_c;
    std::string base_out = "models/baselines";
    std::size_t ngram_n = 2;
    std::optional<std::string> base_target;
    auto* train_base = app.add_subcommand("train-baselines", "Count popularity and n-gram baselines");
    add_common(train_base, base_c);
    train_base->add_option("--output", base_out, "Output directory")->capture_default_str();
    train_base->add_option("--n", ngram_n, "n-gram order (2 or 3)")->capture_default_str();
    train_base->add_option("--test-semester", base_target, "Target semester (default from config)");

    // evaluate
    Common eval_c;
    std::optional<std::string> eval_model, eval_target, eval_json;
    std::string eval_baseline, eval_out = "report.csv";
    std::size_t eval_n = 2;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Recall@k and MRR@k on a held-out semester");
    add_common(evaluate_cmd, eval_c);
    auto* model_opt = evaluate_cmd->add_option("--model", eval_model, "Recommender model file");
    evaluate_cmd->add_option("--baseline", eval_baseline, "popularity, popularity-major or ngram")
        ->check(CLI::IsMember({"popularity", "popularity-major", "ngram"}))
        ->excludes(model_opt);
    evaluate_cmd->add_option("--n", eval_n, "n-gram order for --baseline ngram")->capture_default_str();
    evaluate_cmd->add_option("--test-semester", eval_target, "Target semester, e.g. \"Fall 6\"");
    evaluate_cmd->add_option("--output", eval_out, "Per-student CSV report")->capture_default_str();
    evaluate_cmd->add_option("--json", eval_json, "Summary and breakdowns as JSON");

    // validate-equivalency
    Common eq_c;
    std::string eq_embedding = "models/embedding.bin";
    std::optional<std::string> eq_out;
    auto* validate = app.add_subcommand("validate-equivalency", "Rank known equivalent pairs by similarity");
    add_common(validate, eq_c);
    validate->add_option("--embedding", eq_embedding, "Embedding model file")->capture_default_str();
    validate->add_option("--output", eq_out, "Per-direction ranks as CSV");

    // query
    Common q_c;
    std::optional<std::string> q_embedding, q_model, q_student, q_interest, q_disinterest;
    std::string q_filters = "{}";
    bool q_collab = false;
    double q_weight = 1.0;
    std::size_t q_k = 10;
    auto* query = app.add_subcommand("query", "Rank courses by preference, collaborative score and filters");
    add_common(query, q_c);
    query->add_option("--embedding", q_embedding, "Embedding model file");
    query->add_option("--model", q_model, "Recommender model file");
    query->add_option("--student", q_student, "Student id (history before the target semester)");
    query->add_option("--interest", q_interest, "Subject to move towards");
    query->add_option("--disinterest", q_disinterest, "Subject to move away from");
    query->add_flag("--collaborative", q_collab, "Blend in the recommender's probabilities");
    query->add_option("--weight", q_weight, "Collaborative weight")->capture_default_str();
    query->add_option("--filters", q_filters, "Filters as JSON, e.g. '{\"offered\":true}'")->capture_default_str();
    query->add_option("--k", q_k, "Results")->capture_default_str();

    // keywords
    Common kw_c;
    std::string kw_model = "models/lstm.bin", kw_student;
    std::size_t kw_k = 5;
    auto* keywords = app.add_subcommand("keywords", "Top keywords per semester from the keyword head");
    add_common(keywords, kw_c);
    keywords->add_option("--model", kw_model, "Recommender model file")->capture_default_str();
    keywords->add_option("--student", kw_student, "Student id")->required();
    keywords->add_option("--k", kw_k, "Keywords per step")->capture_default_str();

    // project
    Common pr_c;
    std::string pr_model = "models/lstm.bin", pr_method = "pca", pr_out = "projection.csv";
    auto* project = app.add_subcommand("project", "2-D projection of student hidden states");
    add_common(project, pr_c);
    project->add_option("--model", pr_model, "Recommender model file")->capture_default_str();
    project->add_option("--method", pr_method, "pca or tsne")->capture_default_str();
    project->add_option("--output", pr_out, "CSV of student_id,major,x,y")->capture_default_str();

    // export
    Common ex_c;
    std::string ex_embedding = "models/embedding.bin", ex_side = "input", ex_out = "embedding.txt";
    auto* export_cmd = app.add_subcommand("export", "Write course vectors in word2vec text format");
    add_common(export_cmd, ex_c, false);
    export_cmd->add_option("--embedding", ex_embedding, "Embedding model file")->capture_default_str();
    export_cmd->add_option("--side", ex_side, "input or output vectors")
        ->check(CLI::IsMember({"input", "output"}))
        ->capture_default_str();
    export_cmd->add_option("--output", ex_out, "Output file")->capture_default_str();

    // serve
    Common sv_c;
    std::optional<std::string> sv_embedding, sv_model;
    std::optional<int> sv_port;
    std::string sv_host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "JSON-over-HTTP service");
    add_common(serve, sv_c);
    serve->add_option("--embedding", sv_embedding, "Embedding model file");
    serve->add_option("--model", sv_model, "Recommender model file");
    serve->add_option("--port", sv_port, "Port (default from config)");
    serve->add_option("--host", sv_host, "Bind address")->capture_default_str();

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        if (synth->parsed()) {
            auto cfg = app_config(synth_c);
            auto data = generate(cfg.synth);
            write_synth(data, synth_out);
            print({{"output", synth_out},
                   {"records", data.enrollments.size()},
                   {"courses", data.catalog.entries().size()},
                   {"planted_pairs", data.truth.planted_pairs.size()},
                   {"seed", cfg.synth.seed}});
        } else if (ingest->parsed()) {
            auto cfg = app_config(ingest_c);
            auto raw = load_dataset(ingest_c.data);
            auto before = dataset_stats(raw.enrollments);
            auto cleaned = raw;
            cleaned.enrollments = clean_enrollments(raw.enrollments, cfg);
            auto after = dataset_stats(cleaned.enrollments);
            if (!ingest_out.empty()) write_dataset(cleaned, ingest_out);
            print({{"records", before.record_count},
                   {"students", before.student_count},
                   {"courses", before.course_enrollments.size()},
                   {"duplicates_dropped", raw.enrollments.duplicates_dropped},
                   {"kept_records", after.record_count},
                   {"kept_students", after.student_count},
                   {"kept_courses", after.course_enrollments.size()}});
        } else if (train_emb->parsed()) {
            auto cfg = app_config(emb_c);
            auto data = cleaned_dataset(emb_c, cfg);
            auto corpus = build_corpus(data, cfg.bow_top_removed);
            auto training = records_before(data.enrollments, cfg.test);
            auto r = train_embedding(training, corpus.vocab, cfg.skipgram);
            write_with(emb_out, [&](std::ostream& out) { save_skipgram(out, r.model); });
            print({{"output", emb_out},
                   {"courses", corpus.vocab.size()},
                   {"dimension", cfg.skipgram.dimension},
                   {"initial_loss", r.initial_loss},
                   {"epoch_loss", r.epoch_loss},
                   {"final_loss", r.final_loss},
                   {"warnings", r.warnings}});
        } else if (train_lstm_cmd->parsed()) {
            auto cfg = app_config(lstm_c);
            auto data = cleaned_dataset(lstm_c, cfg);
            auto corpus = build_corpus(data, cfg.bow_top_removed);
            auto fit = fit_recommender(data.enrollments, corpus, cfg);
            write_with(lstm_out, [&](std::ostream& out) { save_lstm(out, fit.result.model); });
            json j{{"output", lstm_out},
                   {"courses", corpus.vocab.size()},
                   {"initial_loss", fit.result.initial_loss.total},
                   {"epoch_loss", fit.result.epoch_loss},
                   {"aux_weight", fit.result.model.aux_weight},
                   {"warnings", fit.result.warnings}};
            if (fit.selected) {
                j["selected_candidate"] = *fit.selected;
                j["validation_recall"] = fit.validation_recall;
            }
            print(j);
        } else if (train_base->parsed()) {
            auto cfg = app_config(base_c);
            auto data = cleaned_dataset(base_c, cfg);
            auto corpus = build_corpus(data, cfg.bow_top_removed);
            const auto target = base_target ? Semester::parse(*base_target) : cfg.test;
            auto training = records_before(data.enrollments, target);
            auto names = course_names(corpus.vocab);
            json pop;
            for (bool by_major : {false, true}) {
                auto m = train_popularity(training, corpus.vocab, target, cfg.popularity_lookback, by_major);
                json counts = json::object();
                for (std::size_t i = 0; i < names.size(); ++i) counts[names[i]] = m.global[i];
                json j{{"semesters", json::array()}, {"global", counts}};
                for (const auto& s : m.semesters) j["semesters"].push_back(s.to_string());
                if (by_major) {
                    for (const auto& [major, v] : m.per_major) {
                        json c = json::object();
                        for (std::size_t i = 0; i < names.size(); ++i) c[names[i]] = v[i];
                        j["per_major"][major] = c;
                    }
                }
                pop[by_major ? "by_major" : "global"] = j;
            }
            auto seqs = serialize_sequences(build_histories(training, corpus.vocab), cfg.seed);
            auto ngram = train_ngram(seqs, ngram_n, corpus.vocab.size());
            write_text(fs::path(base_out) / "popularity.json", pop.dump(2) + "\n");
            write_text(fs::path(base_out) / "ngram.txt", export_ngram(ngram, course_tokens(corpus.vocab)));
            print({{"output", base_out}, {"target", target.to_string()}, {"warnings", ngram.warnings}});
        } else if (evaluate_cmd->parsed()) {
            auto cfg = app_config(eval_c);
            if (!eval_model && eval_baseline.empty()) throw Error("evaluate needs --model or --baseline");
            auto data = cleaned_dataset(eval_c, cfg);
            auto corpus = build_corpus(data, cfg.bow_top_removed);
            const auto target = eval_target ? Semester::parse(*eval_target) : cfg.test;
            auto set = make_eval_set(data, corpus.vocab, target);
            auto training = records_before(data.enrollments, target);
            EvalReport report;
            if (eval_model) {
                auto model = read_lstm(*eval_model);
                check_model_vocabulary(model, corpus.vocab);
                report = evaluate(set, lstm_predictor(model), cfg.k, data.colleges);
            } else if (eval_baseline == "ngram") {
                auto seqs = serialize_sequences(build_histories(training, corpus.vocab), cfg.seed);
                auto table = train_ngram(seqs, eval_n, corpus.vocab.size());
                report = evaluate(set, ngram_predictor(table, cfg.seed, cfg.ngram_shuffles), cfg.k, data.colleges);
            } else {
                auto pop = train_popularity(training, corpus.vocab, target, cfg.popularity_lookback,
                                            eval_baseline == "popularity-major");
                report = evaluate(set, popularity_predictor(pop), cfg.k, data.colleges);
            }
            write_with(eval_out, [&](std::ostream& out) { write_report_csv(out, report); });
            auto summary = report_json(report);
            summary["target"] = target.to_string();
            summary["predictor"] = eval_model ? "lstm" : eval_baseline;
            if (eval_json) write_text(*eval_json, summary.dump(2) + "\n");
            print({{"output", eval_out},
                   {"target", target.to_string()},
                   {"predictor", summary["predictor"]},
                   {"students", report.students.size()},
                   {"excluded", report.excluded},
                   {"mean_recall", report.mean_recall},
                   {"mrr", report.mrr}});
        } else if (validate->parsed()) {
            auto cfg = app_config(eq_c);
            auto data = cleaned_dataset(eq_c, cfg);
            auto corpus = build_corpus(data, cfg.bow_top_removed);
            auto model = read_embedding(eq_embedding);
            check_model_vocabulary(model, corpus.vocab);
            auto space = EmbeddingSpace::from_model(model, corpus.vocab);
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            for (const auto& [a, b] : drop_cross_listed(data.equivalencies, data.catalog)) {
                auto ia = corpus.vocab.find(a), ib = corpus.vocab.find(b);
                if (ia && ib) pairs.emplace_back(*ia, *ib);
            }
            if (pairs.empty()) throw Error("no equivalency pairs inside the course vocabulary");
            std::vector<std::size_t> candidates(corpus.vocab.size());
            for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
            auto c2v = equivalency_rank_eval(embedding_similarity(space), pairs, candidates);
            SimilaritySource bow{
                [&](std::size_t i) { return corpus.course_bow[i].count() > 0; },
                [&](std::size_t i, std::size_t j) { return bow_cosine(corpus.course_bow[i], corpus.course_bow[j]); }};
            auto text = equivalency_rank_eval(bow, pairs, candidates);
            auto stats = [](const RankStatistics& r) {
                return json{{"median", r.median},
                            {"mean", r.mean},
                            {"std", r.stddev},
                            {"directions", r.ranks.size()},
                            {"skipped", r.skipped.size()}};
            };
            if (eq_out) {
                write_with(*eq_out, [&](std::ostream& out) {
                    out << "query,partner,course2vec_rank,bow_rank\n";
                    for (std::size_t p = 0; p < pairs.size(); ++p) {
                        for (int dir = 0; dir < 2; ++dir) {
                            const auto q = dir ? pairs[p].second : pairs[p].first;
                            const auto t = dir ? pairs[p].first : pairs[p].second;
                            const auto i = 2 * p + static_cast<std::size_t>(dir);
                            out << corpus.vocab.key(q).to_string() << ',' << corpus.vocab.key(t).to_string() << ','
                                << c2v.ranks.at(i) << ',';
                            if (i < text.ranks.size() && text.skipped.empty()) out << text.ranks[i];
                            out << '\n';
                        }
                    }
                });
            }
            print({{"pairs", pairs.size()},
                   {"candidates", candidates.size()},
                   {"course2vec", stats(c2v)},
                   {"bow", stats(text)}});
        } else if (query->parsed()) {
            auto cfg = app_config(q_c);
            auto snap = load_snapshot(q_c, cfg, q_embedding, q_model);
            json req;
            try {
                req["filters"] = json::parse(q_filters);
            } catch (const json::exception& e) {
                throw Error(std::string("--filters is not valid JSON: ") + e.what());
            }
            if (q_interest) req["interest"] = *q_interest;
            if (q_disinterest) req["disinterest"] = *q_disinterest;
            req["use_collaborative"] = q_collab;
            req["collaborative_weight"] = q_weight;
            req["k"] = q_k;
            if (q_student) req["student_id"] = *q_student;
            emit(route_request(*snap, "POST", q_student ? "/v1/recommend" : "/v1/query", {}, req.dump()));
        } else if (keywords->parsed()) {
            auto cfg = app_config(kw_c);
            auto snap = load_snapshot(kw_c, cfg, std::nullopt, kw_model);
            emit(route_request(*snap, "GET", "/v1/keywords/" + kw_student, {{"k", std::to_string(kw_k)}}, ""));
        } else if (project->parsed()) {
            auto cfg = app_config(pr_c);
            auto snap = load_snapshot(pr_c, cfg, std::nullopt, pr_model);
            auto r = route_request(*snap, "GET", "/v1/projection", {{"method", pr_method}}, "");
            if (r.status != 200) emit(r);
            auto j = json::parse(r.body);
            write_with(pr_out, [&](std::ostream& out) {
                out << "student_id,major,x,y\n";
                char buf[64];
                for (const auto& p : j["points"]) {
                    std::snprintf(buf, sizeof buf, "%.6f,%.6f", p["x"].get<double>(), p["y"].get<double>());
                    out << p["student_id"].get<std::string>() << ',' << p["major"].get<std::string>() << ',' << buf
                        << '\n';
                }
            });
            print({{"output", pr_out}, {"method", pr_method}, {"points", j["points"].size()}});
        } else if (export_cmd->parsed()) {
            app_config(ex_c);
            auto model = read_embedding(ex_embedding);
            write_text(ex_out, export_embeddings(model, ex_side == "input" ? EmbeddingSide::Input : EmbeddingSide::Output));
            print({{"output", ex_out}, {"courses", model.vocab_size()}, {"side", ex_side}});
        } else if (serve->parsed()) {
            auto cfg = app_config(sv_c);
            SnapshotHolder holder(load_snapshot(sv_c, cfg, sv_embedding, sv_model));
            HttpService http(holder);
            const int port = http.bind(sv_host, sv_port.value_or(cfg.port));
            g_http = &http;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << sv_host << ':' << port << " (model " << holder.get()->model_version
                      << ")\n";
            http.listen();
            g_http = nullptr;
        }
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"command", app.get_subcommands().front()->get_name()}}.dump() << '\n';
        return 1;
    }
    return 0;
}

#include "enrollrec/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "enrollrec/container.hpp"
#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

constexpr int kSkipGramVersion = 1;

// Context positions of t within a sequence of length n.
template <typename F>
void for_each_context(std::size_t t, std::size_t n, std::size_t window, F&& f) {
    std::size_t lo = t >= window ? t - window : 0;
    std::size_t hi = std::min(n - 1, t + window);
    for (std::size_t p = lo; p <= hi; ++p) {
        if (p != t) f(p);
    }
}

void check_tokens(const std::vector<SerializedSequence>& sequences, std::size_t vocab) {
    for (const auto& s : sequences) {
        for (auto tok : s.tokens) {
            if (tok >= vocab) {
                throw Error("token " + std::to_string(tok) + " of student " + s.student +
                            " outside vocabulary of " + std::to_string(vocab));
            }
        }
    }
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void SkipGramConfig::validate() const {
    if (dimension < 1) throw Error("skip-gram dimension must be >= 1");
    if (window < 1) throw Error("skip-gram window must be >= 1");
    if (!(initial_rate > 0.0)) throw Error("skip-gram initial rate must be > 0");
    if (min_rate < 0.0 || min_rate > initial_rate) throw Error("skip-gram min rate must lie in [0, initial]");
    if (objective == SkipGramObjective::NegativeSampling && negatives < 1) {
        throw Error("negative sampling needs at least one negative");
    }
}

nlohmann::json to_json(const SkipGramConfig& c) {
    return {{"dimension", c.dimension},
            {"window", c.window},
            {"epochs", c.epochs},
            {"initial_rate", c.initial_rate},
            {"min_rate", c.min_rate},
            {"seed", c.seed},
            {"objective", c.objective == SkipGramObjective::FullSoftmax ? "full_softmax"
                                                                         : "negative_sampling"},
            {"negatives", c.negatives}};
}

SkipGramConfig skipgram_config_from_json(const nlohmann::json& j) {
    SkipGramConfig c;
    c.dimension = j.value("dimension", c.dimension);
    c.window = j.value("window", c.window);
    c.epochs = j.value("epochs", c.epochs);
    c.initial_rate = j.value("initial_rate", c.initial_rate);
    c.min_rate = j.value("min_rate", c.min_rate);
    c.seed = j.value("seed", c.seed);
    std::string objective = j.value("objective", std::string("full_softmax"));
    if (objective == "full_softmax") {
        c.objective = SkipGramObjective::FullSoftmax;
    } else if (objective == "negative_sampling") {
        c.objective = SkipGramObjective::NegativeSampling;
    } else {
        throw Error("unknown skip-gram objective '" + objective + "'");
    }
    c.negatives = j.value("negatives", c.negatives);
    c.validate();
    return c;
}

SkipGramModel init_skipgram(std::vector<std::string> tokens, const SkipGramConfig& config) {
    config.validate();
    SkipGramModel model;
    model.config = config;
    const auto v = static_cast<Eigen::Index>(tokens.size());
    const auto d = static_cast<Eigen::Index>(config.dimension);
    model.tokens = std::move(tokens);
    model.input.resize(v, d);
    model.output = RowMatrix::Zero(v, d);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(-0.5 / static_cast<double>(d), 0.5 / static_cast<double>(d));
    for (Eigen::Index i = 0; i < v; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) model.input(i, k) = unif(rng);
    }
    return model;
}

std::vector<double> skipgram_forward(const SkipGramModel& model, std::size_t input) {
    if (input >= model.vocab_size()) {
        throw NotFoundError("input token " + std::to_string(input) + " not in vocabulary");
    }
    Vector z = model.output * model.input.row(static_cast<Eigen::Index>(input)).transpose();
    softmax_inplace(z);
    return {z.data(), z.data() + z.size()};
}

double skipgram_objective(const SkipGramModel& model,
                          const std::vector<SerializedSequence>& sequences) {
    check_tokens(sequences, model.vocab_size());
    const std::size_t window = model.config.window;
    double total = 0.0;
    for (const auto& seq : sequences) {
        const std::size_t n = seq.tokens.size();
        if (n == 0) continue;
        double student = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            Vector z = model.output * model.input.row(static_cast<Eigen::Index>(seq.tokens[t])).transpose();
            const double top = z.maxCoeff();
            const double log_norm = top + std::log((z.array() - top).exp().sum());
            for_each_context(t, n, window, [&](std::size_t p) {
                student -= z(static_cast<Eigen::Index>(seq.tokens[p])) - log_norm;
            });
        }
        total += student / static_cast<double>(n);
    }
    return total;
}

SkipGramObjectiveValue skipgram_objective_gradient(const SkipGramModel& model,
                                                   const std::vector<SerializedSequence>& sequences) {
    check_tokens(sequences, model.vocab_size());
    const std::size_t window = model.config.window;
    SkipGramObjectiveValue out;
    out.grad_input = RowMatrix::Zero(model.input.rows(), model.input.cols());
    out.grad_output = RowMatrix::Zero(model.output.rows(), model.output.cols());
    for (const auto& seq : sequences) {
        const std::size_t n = seq.tokens.size();
        if (n == 0) continue;
        const double scale = 1.0 / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
            const auto w = static_cast<Eigen::Index>(seq.tokens[t]);
            Vector v = model.input.row(w).transpose();
            Vector y = model.output * v;
            softmax_inplace(y);
            Vector dz = Vector::Zero(y.size());
            double contexts = 0.0;
            for_each_context(t, n, window, [&](std::size_t p) {
                const auto o = static_cast<Eigen::Index>(seq.tokens[p]);
                out.loss -= scale * std::log(y(o));
                dz(o) -= 1.0;
                contexts += 1.0;
            });
            if (contexts == 0.0) continue;
            dz += contexts * y;
            dz *= scale;
            out.grad_output.noalias() += dz * v.transpose();
            out.grad_input.row(w).noalias() += (model.output.transpose() * dz).transpose();
        }
    }
    return out;
}

double skipgram_gradient_check(const SkipGramModel& model,
                               const std::vector<SerializedSequence>& sequences, double h) {
    auto analytic = skipgram_objective_gradient(model, sequences);
    SkipGramModel probe = model;
    double worst = 0.0;
    auto check = [&](RowMatrix& weights, const RowMatrix& grad) {
        for (Eigen::Index i = 0; i < weights.rows(); ++i) {
            for (Eigen::Index k = 0; k < weights.cols(); ++k) {
                const double saved = weights(i, k);
                weights(i, k) = saved + h;
                const double up = skipgram_objective(probe, sequences);
                weights(i, k) = saved - h;
                const double down = skipgram_objective(probe, sequences);
                weights(i, k) = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double a = grad(i, k);
                const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
                worst = std::max(worst, std::abs(a - numeric) / denom);
            }
        }
    };
    check(probe.input, analytic.grad_input);
    check(probe.output, analytic.grad_output);
    return worst;
}

SkipGramTrainResult train_skipgram(const std::vector<SerializedSequence>& sequences,
                                   std::vector<std::string> tokens, const SkipGramConfig& config) {
    if (sequences.empty()) throw Error("no sequences to train the skip-gram on");
    SkipGramTrainResult result;
    result.model = init_skipgram(std::move(tokens), config);
    auto& model = result.model;
    check_tokens(sequences, model.vocab_size());

    const std::size_t window = config.window;
    std::size_t positions = 0;
    std::vector<double> unigram(model.vocab_size(), 0.0);
    for (const auto& s : sequences) {
        const std::size_t n = s.tokens.size();
        if (n >= 2) positions += n;
        for (std::size_t t = 0; t < n; ++t) {
            unigram[s.tokens[t]] += 1.0;
            for_each_context(t, n, window, [&](std::size_t) { ++result.training_pairs; });
        }
    }
    const double students = static_cast<double>(sequences.size());
    if (config.objective == SkipGramObjective::FullSoftmax) {
        result.initial_loss = skipgram_objective(model, sequences) / students;
    }
    if (result.training_pairs == 0) {
        result.warnings.push_back("no (input, context) pairs: every sequence has a single token; "
                                  "returning the initialized model");
        result.final_loss = result.initial_loss;
        return result;
    }

    // Negative-sampling table: unigram^0.75 cumulative distribution.
    std::vector<double> cumulative(model.vocab_size());
    double acc = 0.0;
    for (std::size_t i = 0; i < unigram.size(); ++i) {
        acc += std::pow(unigram[i], 0.75);
        cumulative[i] = acc;
    }

    std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> order(sequences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const double total_steps = static_cast<double>(positions * std::max<std::size_t>(config.epochs, 1));
    double step = 0.0;
    Vector dz(static_cast<Eigen::Index>(model.vocab_size()));
    Vector grad_v(static_cast<Eigen::Index>(config.dimension));

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        for (auto si : order) {
            const auto& seq = sequences[si];
            const std::size_t n = seq.tokens.size();
            if (n < 2) continue;
            double student = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const double rate = std::max(
                    config.min_rate,
                    config.initial_rate - (config.initial_rate - config.min_rate) * (step / total_steps));
                step += 1.0;
                const auto w = static_cast<Eigen::Index>(seq.tokens[t]);

                if (config.objective == SkipGramObjective::FullSoftmax) {
                    Vector v = model.input.row(w).transpose();
                    Vector y = model.output * v;
                    softmax_inplace(y);
                    dz.setZero();
                    double contexts = 0.0;
                    for_each_context(t, n, window, [&](std::size_t p) {
                        const auto o = static_cast<Eigen::Index>(seq.tokens[p]);
                        student -= std::log(std::max(y(o), 1e-300));
                        dz(o) -= 1.0;
                        contexts += 1.0;
                    });
                    dz += contexts * y;
                    grad_v.noalias() = model.output.transpose() * dz;
                    model.output.noalias() -= rate * dz * v.transpose();
                    model.input.row(w) -= rate * grad_v.transpose();
                } else {
                    grad_v.setZero();
                    auto v = model.input.row(w);
                    for_each_context(t, n, window, [&](std::size_t p) {
                        const auto target = seq.tokens[p];
                        for (std::size_t k = 0; k <= config.negatives; ++k) {
                            std::size_t sample = target;
                            double label = 1.0;
                            if (k > 0) {
                                double r = unit(rng) * cumulative.back();
                                sample = static_cast<std::size_t>(
                                    std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                    cumulative.begin());
                                sample = std::min(sample, model.vocab_size() - 1);
                                if (sample == target) continue;
                                label = 0.0;
                            }
                            auto u = model.output.row(static_cast<Eigen::Index>(sample));
                            const double f = sigmoid(u.dot(v));
                            student -= label > 0 ? std::log(std::max(f, 1e-300))
                                                 : std::log(std::max(1.0 - f, 1e-300));
                            const double g = (label - f) * rate;
                            grad_v += g * u.transpose();
                            u += g * v;
                        }
                    });
                    v += grad_v.transpose();
                }
            }
            epoch_total += student / static_cast<double>(n);
        }
        result.epoch_loss.push_back(epoch_total / students);
    }
    if (config.objective == SkipGramObjective::FullSoftmax) {
        result.final_loss = skipgram_objective(model, sequences) / students;
    } else {
        result.final_loss = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
    }
    return result;
}

std::string course_token(const CourseKey& key) {
    std::string token = key.subject;
    std::replace(token.begin(), token.end(), ' ', '_');
    return token + ":" + key.number;
}

std::string export_embeddings(const SkipGramModel& model, EmbeddingSide side) {
    const RowMatrix& m = side == EmbeddingSide::Input ? model.input : model.output;
    std::string out = std::to_string(m.rows()) + " " + std::to_string(model.config.dimension) + "\n";
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::string token = model.tokens.at(static_cast<std::size_t>(i));
        std::replace(token.begin(), token.end(), ' ', '_');
        out += token;
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            std::snprintf(buf, sizeof(buf), " %.6f", m(i, k));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

ImportedEmbeddings import_embeddings(std::istream& in) {
    std::size_t count = 0, dim = 0;
    if (!(in >> count >> dim)) throw Error("bad word2vec header");
    ImportedEmbeddings out;
    out.vectors.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < count; ++i) {
        std::string token;
        if (!(in >> token)) throw Error("word2vec file truncated at row " + std::to_string(i));
        out.tokens.push_back(token);
        for (std::size_t k = 0; k < dim; ++k) {
            if (!(in >> out.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)))) {
                throw Error("word2vec row " + std::to_string(i) + " has too few values");
            }
        }
    }
    return out;
}

void save_skipgram(std::ostream& out, const SkipGramModel& model) {
    nlohmann::json meta;
    meta["config"] = to_json(model.config);
    meta["tokens"] = model.tokens;
    ContainerWriter writer("skipgram", kSkipGramVersion, meta);
    writer.add("input", model.input);
    writer.add("output", model.output);
    writer.write(out);
}

SkipGramModel load_skipgram(std::istream& in) {
    auto contents = read_container(in, "skipgram");
    if (contents.version != kSkipGramVersion) {
        throw Error("unsupported skip-gram version " + std::to_string(contents.version));
    }
    SkipGramModel model;
    model.config = skipgram_config_from_json(contents.meta.at("config"));
    model.tokens = contents.meta.at("tokens").get<std::vector<std::string>>();
    const std::size_t v = model.tokens.size();
    model.input = to_matrix<RowMatrix>(contents.require("input", v, model.config.dimension));
    model.output = to_matrix<RowMatrix>(contents.require("output", v, model.config.dimension));
    return model;
}

}  // namespace enrollrec

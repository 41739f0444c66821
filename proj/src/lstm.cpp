#include "enrollrec/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "enrollrec/container.hpp"
#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

constexpr int kLstmVersion = 1;
constexpr double kLogFloor = 1e-12;
constexpr std::size_t kEvalChunk = 64;

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& a) { return a.unaryExpr([](double x) { return stable_sigmoid(x); }); }

void glorot(Matrix& m, std::mt19937_64& rng, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / std::max(fan_in + fan_out, 1.0));
    std::uniform_real_distribution<double> u(-limit, limit);
    // column-major fill order
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
    }
}

struct LayerCache {
    Matrix x, h_prev, c_prev, f, i, g, o, c, h;
};

// Forward pass over a padded batch, columns = students.
struct BatchForward {
    std::size_t n = 0;
    std::size_t steps = 0;
    std::vector<std::vector<LayerCache>> cache;  // [t][layer]
    std::vector<Matrix> y;                       // [t] V x n
    std::vector<Matrix> yb;                      // [t] B x n
};

void softmax_columns(Matrix& z) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        auto col = z.col(c);
        softmax_inplace(col);
    }
}

BatchForward forward_batch(const LstmModel& model, const std::vector<const LstmSequence*>& batch) {
    const auto& p = model.params;
    const auto& cfg = model.config;
    const auto H = static_cast<Eigen::Index>(cfg.hidden);
    const auto V = static_cast<Eigen::Index>(model.vocab_size());
    BatchForward out;
    out.n = batch.size();
    const auto N = static_cast<Eigen::Index>(out.n);
    for (const auto* s : batch) out.steps = std::max(out.steps, s->steps());
    out.cache.resize(out.steps);
    out.y.resize(out.steps);
    if (model.has_aux()) out.yb.resize(out.steps);

    for (std::size_t t = 0; t < out.steps; ++t) {
        out.cache[t].resize(p.layers.size());
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            const auto& layer = p.layers[l];
            LayerCache& lc = out.cache[t][l];
            if (l == 0) {
                lc.x = Matrix::Zero(V, N);
                if (t > 0) {
                    for (Eigen::Index n = 0; n < N; ++n) {
                        const auto* s = batch[static_cast<std::size_t>(n)];
                        if (t - 1 < s->inputs.size()) {
                            for (auto c : s->inputs[t - 1]) lc.x(static_cast<Eigen::Index>(c), n) = 1.0;
                        }
                    }
                }
            } else {
                lc.x = out.cache[t][l - 1].h;
            }
            if (t == 0) {
                lc.h_prev = Matrix::Zero(H, N);
                lc.c_prev = Matrix::Zero(H, N);
            } else {
                lc.h_prev = out.cache[t - 1][l].h;
                lc.c_prev = out.cache[t - 1][l].c;
            }
            Matrix a = layer.wx * lc.x + layer.wh * lc.h_prev;
            a.colwise() += layer.b;
            if (t == 0 && l == 0) a.colwise() += p.bos;
            lc.f = sigmoid(a.topRows(H));
            lc.i = sigmoid(a.middleRows(H, H));
            lc.g = a.middleRows(2 * H, H).array().tanh().matrix();
            lc.o = sigmoid(a.bottomRows(H));
            lc.c = lc.f.cwiseProduct(lc.c_prev) + lc.i.cwiseProduct(lc.g);
            lc.h = lc.o.cwiseProduct(lc.c.array().tanh().matrix());
        }
        const Matrix& top = out.cache[t].back().h;
        Matrix z = p.w_out * top;
        z.colwise() += p.b_out;
        for (Eigen::Index n = 0; n < N; ++n) {
            const auto* s = batch[static_cast<std::size_t>(n)];
            if (t >= s->steps()) continue;
            const auto& ft = s->features[t];
            if (cfg.use_major && ft.major >= 0) z.col(n) += p.w_major.col(ft.major);
            if (cfg.use_entry_type && ft.entry >= 0) z.col(n) += p.w_entry.col(ft.entry);
            if (cfg.use_gpa) z.col(n) += p.w_gpa.col(static_cast<Eigen::Index>(ft.gpa_bin));
        }
        softmax_columns(z);
        out.y[t] = std::move(z);
        if (model.has_aux()) {
            Matrix zb = p.w_bow * top;
            zb.colwise() += p.b_bow;
            softmax_columns(zb);
            out.yb[t] = std::move(zb);
        }
    }
    return out;
}

std::vector<std::size_t> bow_target(const std::vector<std::size_t>& courses,
                                    const std::vector<BowVector>& course_bow) {
    std::vector<std::size_t> bits;
    for (auto c : courses) {
        const auto& b = course_bow.at(c).bits;
        bits.insert(bits.end(), b.begin(), b.end());
    }
    std::sort(bits.begin(), bits.end());
    bits.erase(std::unique(bits.begin(), bits.end()), bits.end());
    return bits;
}

std::size_t valid_steps(const LstmSequence& s) {
    std::size_t n = 0;
    for (const auto& t : s.targets) n += t.empty() ? 0 : 1;
    return n;
}

// Loss of one padded batch, each student's contribution divided by `normalizer`.
LstmLoss batch_loss(const LstmModel& model, const std::vector<const LstmSequence*>& batch,
                    const std::vector<BowVector>& course_bow, LstmParams* grad, double normalizer) {
    const auto& p = model.params;
    const auto& cfg = model.config;
    const auto H = static_cast<Eigen::Index>(cfg.hidden);
    const auto N = static_cast<Eigen::Index>(batch.size());
    const bool aux = model.has_aux();
    const bool aux_backward = aux && model.aux_weight != 0.0;

    BatchForward fw = forward_batch(model, batch);
    std::vector<double> weight(batch.size(), 0.0);
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const std::size_t v = valid_steps(*batch[n]);
        if (v > 0) weight[n] = 1.0 / (static_cast<double>(v) * normalizer);
    }

    // targets per (t, n) for the keyword head
    std::vector<std::vector<std::vector<std::size_t>>> bow_targets;
    if (aux) {
        bow_targets.resize(fw.steps, std::vector<std::vector<std::size_t>>(batch.size()));
        for (std::size_t t = 0; t < fw.steps; ++t) {
            for (std::size_t n = 0; n < batch.size(); ++n) {
                if (t < batch[n]->steps() && !batch[n]->targets[t].empty()) {
                    bow_targets[t][n] = bow_target(batch[n]->targets[t], course_bow);
                }
            }
        }
    }

    LstmLoss loss;
    for (std::size_t t = 0; t < fw.steps; ++t) {
        for (std::size_t n = 0; n < batch.size(); ++n) {
            if (t >= batch[n]->steps() || batch[n]->targets[t].empty()) continue;
            const auto col = static_cast<Eigen::Index>(n);
            for (auto j : batch[n]->targets[t]) {
                loss.course -= weight[n] * std::log(std::max(fw.y[t](static_cast<Eigen::Index>(j), col), kLogFloor));
            }
            if (aux) {
                for (auto j : bow_targets[t][n]) {
                    loss.bow -= weight[n] * std::log(std::max(fw.yb[t](static_cast<Eigen::Index>(j), col), kLogFloor));
                }
            }
        }
    }
    loss.total = loss.course + model.aux_weight * loss.bow;
    if (!grad) return loss;

    const std::size_t L = p.layers.size();
    std::vector<Matrix> dh_next(L, Matrix::Zero(H, N));
    std::vector<Matrix> dc_next(L, Matrix::Zero(H, N));
    for (std::size_t tt = fw.steps; tt-- > 0;) {
        const Matrix& top = fw.cache[tt].back().h;
        Matrix dz = Matrix::Zero(p.w_out.rows(), N);
        Matrix dzb;
        if (aux_backward) dzb = Matrix::Zero(p.w_bow.rows(), N);
        for (std::size_t n = 0; n < batch.size(); ++n) {
            const auto* s = batch[n];
            if (tt >= s->steps() || s->targets[tt].empty()) continue;
            const auto col = static_cast<Eigen::Index>(n);
            const auto& tgt = s->targets[tt];
            dz.col(col) = (weight[n] * static_cast<double>(tgt.size())) * fw.y[tt].col(col);
            for (auto j : tgt) dz(static_cast<Eigen::Index>(j), col) -= weight[n];
            if (aux_backward) {
                const auto& bt = bow_targets[tt][n];
                const double w = model.aux_weight * weight[n];
                dzb.col(col) = (w * static_cast<double>(bt.size())) * fw.yb[tt].col(col);
                for (auto j : bt) dzb(static_cast<Eigen::Index>(j), col) -= w;
            }
            const auto& ft = s->features[tt];
            if (cfg.use_major && ft.major >= 0) grad->w_major.col(ft.major) += dz.col(col);
            if (cfg.use_entry_type && ft.entry >= 0) grad->w_entry.col(ft.entry) += dz.col(col);
            if (cfg.use_gpa) grad->w_gpa.col(static_cast<Eigen::Index>(ft.gpa_bin)) += dz.col(col);
        }
        grad->w_out.noalias() += dz * top.transpose();
        grad->b_out += dz.rowwise().sum();
        Matrix dh = dh_next[L - 1];
        dh.noalias() += p.w_out.transpose() * dz;
        if (aux_backward) {
            grad->w_bow.noalias() += dzb * top.transpose();
            grad->b_bow += dzb.rowwise().sum();
            dh.noalias() += p.w_bow.transpose() * dzb;
        }

        for (std::size_t l = L; l-- > 0;) {
            const LayerCache& lc = fw.cache[tt][l];
            const auto& layer = p.layers[l];
            const Matrix tc = lc.c.array().tanh().matrix();
            const Matrix d_o = dh.cwiseProduct(tc);
            const Matrix dc = dc_next[l] + dh.cwiseProduct(lc.o).cwiseProduct(
                                               (1.0 - tc.array().square()).matrix());
            Matrix da(4 * H, N);
            da.topRows(H) = dc.cwiseProduct(lc.c_prev).cwiseProduct(
                (lc.f.array() * (1.0 - lc.f.array())).matrix());
            da.middleRows(H, H) = dc.cwiseProduct(lc.g).cwiseProduct(
                (lc.i.array() * (1.0 - lc.i.array())).matrix());
            da.middleRows(2 * H, H) = dc.cwiseProduct(lc.i).cwiseProduct(
                (1.0 - lc.g.array().square()).matrix());
            da.bottomRows(H) = d_o.cwiseProduct((lc.o.array() * (1.0 - lc.o.array())).matrix());

            auto& gl = grad->layers[l];
            gl.wx.noalias() += da * lc.x.transpose();
            gl.wh.noalias() += da * lc.h_prev.transpose();
            const Vector da_sum = da.rowwise().sum();
            gl.b += da_sum;
            if (tt == 0 && l == 0) grad->bos += da_sum;
            dh_next[l].noalias() = layer.wh.transpose() * da;
            dc_next[l] = dc.cwiseProduct(lc.f);
            if (l > 0) dh = layer.wx.transpose() * da + dh_next[l - 1];
        }
    }
    return loss;
}

std::vector<const LstmSequence*> pointers(const std::vector<LstmSequence>& seqs, std::size_t begin,
                                          std::size_t end) {
    std::vector<const LstmSequence*> out;
    for (std::size_t i = begin; i < end; ++i) out.push_back(&seqs[i]);
    return out;
}

void set_zero(LstmParams& p) {
    p.for_each([](const std::string&, auto& m) { m.setZero(); });
}

}  // namespace

void LstmConfig::validate() const {
    if (hidden < 1) throw Error("hidden size must be >= 1");
    if (layers < 1) throw Error("layer count must be >= 1");
    if (batch_size < 1) throw Error("batch size must be >= 1");
    if (aux_weight && *aux_weight < 0.0) throw Error("aux weight must be >= 0");
    adam.validate();
}

nlohmann::json to_json(const LstmConfig& c) {
    nlohmann::json j{{"hidden", c.hidden},
                     {"layers", c.layers},
                     {"use_major", c.use_major},
                     {"use_entry_type", c.use_entry_type},
                     {"use_gpa", c.use_gpa},
                     {"learning_rate", c.adam.learning_rate},
                     {"beta1", c.adam.beta1},
                     {"beta2", c.adam.beta2},
                     {"epsilon", c.adam.epsilon},
                     {"clip", c.adam.clip},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"seed", c.seed},
                     {"aux_head", c.aux_head}};
    j["aux_weight"] = c.aux_weight ? nlohmann::json(*c.aux_weight) : nlohmann::json("auto");
    return j;
}

LstmConfig lstm_config_from_json(const nlohmann::json& j) {
    LstmConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    c.use_major = j.value("use_major", c.use_major);
    c.use_entry_type = j.value("use_entry_type", c.use_entry_type);
    c.use_gpa = j.value("use_gpa", c.use_gpa);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.adam.clip = j.value("clip", c.adam.clip);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.aux_head = j.value("aux_head", c.aux_head);
    if (j.contains("aux_weight") && j["aux_weight"].is_number()) c.aux_weight = j["aux_weight"].get<double>();
    c.validate();
    return c;
}

Vector encode_multihot(std::span<const std::size_t> indices, std::size_t size) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(size));
    for (auto i : indices) {
        if (i >= size) {
            throw Error("index " + std::to_string(i) + " outside multi-hot of size " + std::to_string(size));
        }
        v(static_cast<Eigen::Index>(i)) = 1.0;
    }
    return v;
}

std::size_t gpa_bin_index(std::optional<double> gpa) {
    if (!gpa) return kMissingGpaBin;
    if (!(*gpa >= 0.0 && *gpa <= 4.0)) throw Error("GPA " + std::to_string(*gpa) + " outside [0, 4]");
    return std::min<std::size_t>(static_cast<std::size_t>(*gpa / 0.5), 7);
}

Vector encode_gpa_bin(std::optional<double> gpa) {
    Vector v = Vector::Zero(kGpaBins);
    v(static_cast<Eigen::Index>(gpa_bin_index(gpa))) = 1.0;
    return v;
}

LstmParams LstmParams::zeros_like() const {
    LstmParams z = *this;
    set_zero(z);
    return z;
}

std::vector<std::span<double>> LstmParams::blocks() {
    std::vector<std::span<double>> out;
    for_each([&](const std::string&, auto& m) {
        out.emplace_back(m.data(), static_cast<std::size_t>(m.size()));
    });
    return out;
}

CellStep lstm_cell_step(const LstmLayer& layer, const Vector& x, const Vector& h_prev,
                        const Vector& c_prev, const Vector* extra) {
    const auto H = layer.wh.cols();
    if (layer.wx.rows() != 4 * H || layer.wh.rows() != 4 * H || layer.b.size() != 4 * H) {
        throw Error("inconsistent LSTM layer shapes");
    }
    if (x.size() != layer.wx.cols() || h_prev.size() != H || c_prev.size() != H ||
        (extra && extra->size() != 4 * H)) {
        throw Error("LSTM step input has the wrong shape");
    }
    Vector a = layer.wx * x + layer.wh * h_prev + layer.b;
    if (extra) a += *extra;
    CellStep s;
    s.gates.f = sigmoid(a.head(H));
    s.gates.i = sigmoid(a.segment(H, H));
    s.gates.g = a.segment(2 * H, H).array().tanh().matrix();
    s.gates.o = sigmoid(a.tail(H));
    s.c = s.gates.f.cwiseProduct(c_prev) + s.gates.i.cwiseProduct(s.gates.g);
    s.h = s.gates.o.cwiseProduct(s.c.array().tanh().matrix());
    return s;
}

void LstmSequence::validate(std::size_t vocab) const {
    if (features.size() != inputs.size() + 1 || targets.size() != features.size()) {
        throw Error("sequence for " + student + " has inconsistent step counts");
    }
    for (const auto& list : {&inputs, &targets}) {
        for (const auto& step : *list) {
            for (auto c : step) {
                if (c >= vocab) throw Error("course index " + std::to_string(c) + " outside vocabulary");
            }
        }
    }
}

int LstmModel::major_index(const std::string& major) const {
    auto it = std::lower_bound(majors.begin(), majors.end(), major);
    if (it == majors.end() || *it != major) return -1;
    return static_cast<int>(it - majors.begin());
}

LstmModel init_lstm(const LstmConfig& config, std::vector<std::string> courses,
                    std::vector<std::string> majors, std::vector<std::string> bow_stems) {
    config.validate();
    if (courses.empty()) throw Error("LSTM needs a nonempty course vocabulary");
    if (config.aux_head && bow_stems.empty()) throw Error("aux head needs a keyword vocabulary");
    LstmModel m;
    m.config = config;
    m.courses = std::move(courses);
    std::sort(majors.begin(), majors.end());
    majors.erase(std::unique(majors.begin(), majors.end()), majors.end());
    m.majors = std::move(majors);
    if (config.aux_head) m.bow_stems = std::move(bow_stems);
    m.aux_weight = config.aux_head ? config.aux_weight.value_or(0.0) : 0.0;

    const auto H = static_cast<Eigen::Index>(config.hidden);
    const auto V = static_cast<Eigen::Index>(m.courses.size());
    const auto B = static_cast<Eigen::Index>(m.bow_stems.size());
    std::mt19937_64 rng(config.seed);
    auto& p = m.params;
    for (std::size_t l = 0; l < config.layers; ++l) {
        const Eigen::Index in = l == 0 ? V : H;
        LstmLayer layer;
        layer.wx.resize(4 * H, in);
        layer.wh.resize(4 * H, H);
        glorot(layer.wx, rng, static_cast<double>(in), static_cast<double>(4 * H));
        glorot(layer.wh, rng, static_cast<double>(H), static_cast<double>(4 * H));
        layer.b = Vector::Zero(4 * H);
        p.layers.push_back(std::move(layer));
    }
    p.bos = Vector::Zero(4 * H);
    p.w_out.resize(V, H);
    glorot(p.w_out, rng, static_cast<double>(H), static_cast<double>(V));
    p.b_out = Vector::Zero(V);
    const Eigen::Index majors_n = config.use_major ? static_cast<Eigen::Index>(m.majors.size()) : 0;
    const Eigen::Index entry_n = config.use_entry_type ? static_cast<Eigen::Index>(kEntryTypes) : 0;
    const Eigen::Index gpa_n = config.use_gpa ? static_cast<Eigen::Index>(kGpaBins) : 0;
    p.w_major.resize(V, majors_n);
    p.w_entry.resize(V, entry_n);
    p.w_gpa.resize(V, gpa_n);
    glorot(p.w_major, rng, static_cast<double>(majors_n), static_cast<double>(V));
    glorot(p.w_entry, rng, static_cast<double>(entry_n), static_cast<double>(V));
    glorot(p.w_gpa, rng, static_cast<double>(gpa_n), static_cast<double>(V));

    std::mt19937_64 aux_rng(config.seed ^ 0xA5A5A5A5DEADBEEFULL);
    p.w_bow.resize(B, H);
    glorot(p.w_bow, aux_rng, static_cast<double>(H), static_cast<double>(B));
    p.b_bow = Vector::Zero(B);
    return m;
}

LstmSequence make_prefix_sequence(const StudentHistory& history, std::size_t semesters,
                                  const LstmModel& model, const std::optional<std::string>& next_major) {
    semesters = std::min(semesters, history.semesters.size());
    LstmSequence s;
    s.student = history.student;
    const int entry = static_cast<int>(history.entry_type);
    for (std::size_t k = 0; k <= semesters; ++k) {
        StepFeatures f;
        f.entry = entry;
        if (k < semesters) {
            f.major = model.major_index(history.semesters[k].major);
            s.targets.push_back(history.semesters[k].courses);
        } else {
            std::string major = next_major ? *next_major
                                           : (semesters > 0 ? history.semesters[semesters - 1].major : "");
            f.major = model.major_index(major);
            s.targets.emplace_back();
        }
        if (k > 0) {
            f.gpa_bin = gpa_bin_index(history.semesters[k - 1].gpa);
            s.inputs.push_back(history.semesters[k - 1].courses);
        }
        s.features.push_back(f);
    }
    return s;
}

LstmSequence make_sequence(const StudentHistory& history, const LstmModel& model,
                           const std::optional<std::string>& next_major) {
    return make_prefix_sequence(history, history.semesters.size(), model, next_major);
}

std::vector<LstmStepOutput> lstm_forward(const LstmModel& model, const LstmSequence& sequence) {
    sequence.validate(model.vocab_size());
    BatchForward fw = forward_batch(model, {&sequence});
    std::vector<LstmStepOutput> out(fw.steps);
    for (std::size_t t = 0; t < fw.steps; ++t) {
        out[t].courses = fw.y[t].col(0);
        if (model.has_aux()) out[t].bow = fw.yb[t].col(0);
        out[t].hidden = fw.cache[t].back().h.col(0);
    }
    return out;
}

std::vector<Vector> final_distributions(const LstmModel& model, const std::vector<LstmSequence>& sequences) {
    std::vector<Vector> out;
    out.reserve(sequences.size());
    for (std::size_t begin = 0; begin < sequences.size(); begin += kEvalChunk) {
        const std::size_t end = std::min(sequences.size(), begin + kEvalChunk);
        auto batch = pointers(sequences, begin, end);
        for (const auto* s : batch) s->validate(model.vocab_size());
        BatchForward fw = forward_batch(model, batch);
        for (std::size_t n = 0; n < batch.size(); ++n) {
            out.push_back(fw.y[batch[n]->steps() - 1].col(static_cast<Eigen::Index>(n)));
        }
    }
    return out;
}

double cross_entropy(const Vector& y, std::span<const std::size_t> target) {
    double loss = 0.0;
    for (auto j : target) loss -= std::log(std::max(y(static_cast<Eigen::Index>(j)), kLogFloor));
    return loss;
}

LstmLoss lstm_loss(const LstmModel& model, const std::vector<LstmSequence>& sequences,
                   const std::vector<BowVector>& course_bow, LstmParams* grad) {
    if (sequences.empty()) throw Error("no sequences to evaluate the loss on");
    if (model.has_aux() && course_bow.size() != model.vocab_size()) {
        throw Error("keyword head needs one keyword vector per course");
    }
    for (const auto& s : sequences) s.validate(model.vocab_size());
    if (grad) {
        *grad = model.params.zeros_like();
    }
    LstmLoss total;
    const double normalizer = static_cast<double>(sequences.size());
    for (std::size_t begin = 0; begin < sequences.size(); begin += kEvalChunk) {
        const std::size_t end = std::min(sequences.size(), begin + kEvalChunk);
        auto part = batch_loss(model, pointers(sequences, begin, end), course_bow, grad, normalizer);
        total.course += part.course;
        total.bow += part.bow;
    }
    total.total = total.course + model.aux_weight * total.bow;
    return total;
}

double lstm_gradient_check(const LstmModel& model, const std::vector<LstmSequence>& sequences,
                           const std::vector<BowVector>& course_bow, double h) {
    LstmParams analytic;
    lstm_loss(model, sequences, course_bow, &analytic);
    LstmModel probe = model;
    auto probe_blocks = probe.params.blocks();
    auto grad_blocks = analytic.blocks();
    double worst = 0.0;
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        for (std::size_t i = 0; i < probe_blocks[b].size(); ++i) {
            double& w = probe_blocks[b][i];
            const double saved = w;
            w = saved + h;
            const double up = lstm_loss(probe, sequences, course_bow).total;
            w = saved - h;
            const double down = lstm_loss(probe, sequences, course_bow).total;
            w = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = grad_blocks[b][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

LstmTrainResult train_lstm(LstmModel model, const std::vector<LstmSequence>& sequences,
                           const std::vector<BowVector>& course_bow) {
    if (sequences.empty()) throw Error("no training sequences for the LSTM");
    LstmTrainResult result;
    const auto& cfg = model.config;
    if (model.has_aux() && !cfg.aux_weight) {
        model.aux_weight = 0.0;
        auto init = lstm_loss(model, sequences, course_bow);
        if (init.bow > 0.0) {
            model.aux_weight = init.course / init.bow;
        } else {
            result.warnings.push_back("keyword loss is zero at initialization; aux weight left at 0");
        }
    }
    result.initial_loss = lstm_loss(model, sequences, course_bow);

    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), 0);
    Adam adam(cfg.adam);
    LstmParams grad = model.params.zeros_like();
    auto param_blocks = model.params.blocks();
    auto grad_blocks = grad.blocks();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<const LstmSequence*> batch;
            for (std::size_t i = begin; i < end; ++i) batch.push_back(&sequences[order[i]]);
            set_zero(grad);
            const double n = static_cast<double>(batch.size());
            auto loss = batch_loss(model, batch, course_bow, &grad, n);
            adam.update(param_blocks, grad_blocks);
            epoch_total += loss.total * n;
        }
        const double mean = epoch_total / static_cast<double>(sequences.size());
        if (!std::isfinite(mean)) throw Error("LSTM training diverged at epoch " + std::to_string(epoch));
        result.epoch_loss.push_back(mean);
    }
    result.model = std::move(model);
    return result;
}

LstmSelection select_and_refit(const std::vector<LstmConfig>& candidates,
                               const std::function<LstmModel(const LstmConfig&)>& make_model,
                               const std::vector<LstmSequence>& sub_training,
                               const std::function<double(const LstmModel&)>& validation_score,
                               const std::vector<LstmSequence>& full_training,
                               const std::vector<BowVector>& course_bow) {
    if (candidates.empty()) throw Error("no candidate configurations to select from");
    LstmSelection sel;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto fitted = train_lstm(make_model(candidates[i]), sub_training, course_bow);
        sel.scores.push_back(validation_score(fitted.model));
        if (sel.scores[i] > sel.scores[sel.best]) sel.best = i;
    }
    sel.refit = train_lstm(make_model(candidates[sel.best]), full_training, course_bow);
    return sel;
}

Prediction predict_next(const LstmModel& model, const LstmSequence& sequence,
                        std::span<const std::size_t> offered, std::size_t k) {
    auto steps = lstm_forward(model, sequence);
    const Vector& y = steps.back().courses;
    return mask_prediction(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), offered, k);
}

std::vector<std::vector<std::string>> top_keywords(const LstmModel& model, const LstmSequence& sequence,
                                                   std::size_t k) {
    if (!model.has_aux()) throw Error("model has no keyword head");
    auto steps = lstm_forward(model, sequence);
    std::vector<std::vector<std::string>> out;
    const auto& stems = model.bow_stems;
    for (const auto& s : steps) {
        std::vector<std::size_t> idx(stems.size());
        std::iota(idx.begin(), idx.end(), 0);
        auto better = [&](std::size_t a, std::size_t b) {
            const double pa = s.bow(static_cast<Eigen::Index>(a));
            const double pb = s.bow(static_cast<Eigen::Index>(b));
            if (pa != pb) return pa > pb;
            return stems[a] < stems[b];
        };
        const std::size_t kk = std::min(k, idx.size());
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(), better);
        std::vector<std::string> words;
        for (std::size_t i = 0; i < kk; ++i) words.push_back(stems[idx[i]]);
        out.push_back(std::move(words));
    }
    return out;
}

Vector extract_hidden_state(const LstmModel& model, const LstmSequence& sequence) {
    return lstm_forward(model, sequence).back().hidden;
}

void save_lstm(std::ostream& out, const LstmModel& model) {
    nlohmann::json meta;
    meta["config"] = to_json(model.config);
    meta["courses"] = model.courses;
    meta["majors"] = model.majors;
    meta["bow_stems"] = model.bow_stems;
    meta["aux_weight"] = model.aux_weight;
    ContainerWriter writer("lstm", kLstmVersion, meta);
    model.params.for_each([&](const std::string& name, const auto& m) { writer.add(name, m); });
    writer.write(out);
}

LstmModel load_lstm(std::istream& in) {
    auto contents = read_container(in, "lstm");
    if (contents.version != kLstmVersion) {
        throw Error("unsupported LSTM model version " + std::to_string(contents.version));
    }
    const auto& meta = contents.meta;
    auto config = lstm_config_from_json(meta.at("config"));
    LstmModel model = init_lstm(config, meta.at("courses").get<std::vector<std::string>>(),
                                meta.at("majors").get<std::vector<std::string>>(),
                                meta.at("bow_stems").get<std::vector<std::string>>());
    model.aux_weight = meta.at("aux_weight").get<double>();
    model.params.for_each([&](const std::string& name, auto& m) {
        const auto& t = contents.require(name, static_cast<std::size_t>(m.rows()),
                                         static_cast<std::size_t>(m.cols()));
        m = to_matrix<Matrix>(t);
    });
    if (contents.tensors.size() != model.params.blocks().size()) {
        throw Error("LSTM container holds unexpected tensors");
    }
    return model;
}

}  // namespace enrollrec

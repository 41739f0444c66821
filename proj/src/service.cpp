#include "enrollrec/service.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "httplib.h"
#include "enrollrec/error.hpp"
#include "enrollrec/projection.hpp"

namespace enrollrec {

namespace {

constexpr std::size_t kMaxK = 1000;

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

const EmbeddingSpace& need_space(const Snapshot& s) {
    if (!s.space) throw ApiError(503, "no course embedding loaded");
    return *s.space;
}

const LstmModel& need_model(const Snapshot& s) {
    if (!s.model) throw ApiError(503, "no recommender model loaded");
    return *s.model;
}

std::size_t read_k(const nlohmann::json& j, std::size_t fallback) {
    if (!j.contains("k")) return fallback;
    if (!j["k"].is_number_integer()) throw ApiError(400, "k must be an integer");
    const auto k = j["k"].get<long long>();
    if (k < 1 || k > static_cast<long long>(kMaxK)) throw ApiError(400, "k must be in [1, 1000]");
    return static_cast<std::size_t>(k);
}

std::size_t parse_k(const std::map<std::string, std::string>& params, std::size_t fallback) {
    auto it = params.find("k");
    if (it == params.end()) return fallback;
    std::size_t used = 0;
    long long k = 0;
    try {
        k = std::stoll(it->second, &used);
    } catch (const std::exception&) {
        throw ApiError(400, "k must be an integer");
    }
    if (used != it->second.size()) throw ApiError(400, "k must be an integer");
    if (k < 1 || k > static_cast<long long>(kMaxK)) throw ApiError(400, "k must be in [1, 1000]");
    return static_cast<std::size_t>(k);
}

std::size_t course_index(const Snapshot& s, const std::string& text, int missing_status) {
    CourseKey key;
    try {
        key = CourseKey::parse(text);
    } catch (const Error& e) {
        throw ApiError(400, e.what());
    }
    auto idx = s.corpus.vocab.find(key);
    if (!idx) throw ApiError(missing_status, "unknown course '" + text + "'");
    return *idx;
}

nlohmann::json course_json(const Snapshot& s, std::size_t course) {
    const auto& key = s.corpus.vocab.key(course);
    nlohmann::json j{{"course", key.to_string()},
                     {"subject", key.subject},
                     {"number", key.number},
                     {"department", s.context.department(course)}};
    const auto* e = s.data.catalog.find(key);
    j["title"] = e ? e->title : "";
    j["description"] = e ? e->description : "";
    return j;
}

struct Student {
    std::optional<std::string> id;
    StudentHistory history;
    std::string major;
};

const StudentHistory& lookup_history(const Snapshot& s, const std::string& id) {
    auto it = s.histories.find(id);
    if (it == s.histories.end()) throw ApiError(404, "unknown student '" + id + "'");
    return it->second;
}

std::string current_major(const Snapshot& s, const StudentHistory& h) {
    if (auto it = s.target_major.find(h.student); it != s.target_major.end()) return it->second;
    return h.semesters.empty() ? "" : h.semesters.back().major;
}

// {"semester": "Fall 5", "courses": ["Economics 11", ...], "major": "...", "grades": ["A", ...]} entries.
StudentHistory parse_history(const Snapshot& s, const nlohmann::json& j) {
    if (!j.is_array()) throw ApiError(400, "history must be an array of semesters");
    StudentHistory h;
    h.student = "(request)";
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("semester") || !item["semester"].is_string()) {
            throw ApiError(400, "history entries need a semester string");
        }
        StudentSemester sem;
        try {
            sem.semester = Semester::parse(item["semester"].get<std::string>());
        } catch (const Error& e) {
            throw ApiError(400, e.what());
        }
        if (!(sem.semester < s.target)) throw ApiError(400, "history must precede " + s.target.to_string());
        if (item.contains("courses")) {
            if (!item["courses"].is_array()) throw ApiError(400, "courses must be an array");
            for (const auto& c : item["courses"]) {
                if (!c.is_string()) throw ApiError(400, "courses must be strings");
                sem.courses.push_back(course_index(s, c.get<std::string>(), 400));
            }
        }
        if (item.contains("major")) {
            if (!item["major"].is_string()) throw ApiError(400, "major must be a string");
            sem.major = item["major"].get<std::string>();
        }
        if (item.contains("grades")) {
            if (!item["grades"].is_array()) throw ApiError(400, "grades must be an array");
            for (const auto& g : item["grades"]) {
                if (!g.is_string()) throw ApiError(400, "grades must be strings");
                if (auto n = normalize_grade(g.get<std::string>())) sem.grades.push_back(*n);
            }
            sem.gpa = mean_grade_points(sem.grades);
        }
        std::sort(sem.courses.begin(), sem.courses.end());
        sem.courses.erase(std::unique(sem.courses.begin(), sem.courses.end()), sem.courses.end());
        if (!sem.courses.empty()) h.semesters.push_back(std::move(sem));
    }
    std::sort(h.semesters.begin(), h.semesters.end(),
              [](const auto& a, const auto& b) { return a.semester < b.semester; });
    for (std::size_t i = 1; i < h.semesters.size(); ++i) {
        if (!(h.semesters[i - 1].semester < h.semesters[i].semester)) {
            throw ApiError(400, "history lists " + h.semesters[i].semester.to_string() + " twice");
        }
    }
    return h;
}

Student resolve_student(const Snapshot& s, const nlohmann::json& request, bool required) {
    const bool has_id = request.contains("student_id") && !request["student_id"].is_null();
    const bool has_history = request.contains("history") && !request["history"].is_null();
    if (has_id && has_history) throw ApiError(400, "give either student_id or history, not both");
    if (required && !has_id && !has_history) throw ApiError(400, "student_id or history is required");
    Student st;
    if (has_id) {
        if (!request["student_id"].is_string()) throw ApiError(400, "student_id must be a string");
        st.id = request["student_id"].get<std::string>();
        st.history = lookup_history(s, *st.id);
        st.major = current_major(s, st.history);
    } else if (has_history) {
        st.history = parse_history(s, request["history"]);
        if (request.contains("entry_type")) {
            if (!request["entry_type"].is_string()) throw ApiError(400, "entry_type must be a string");
            try {
                st.history.entry_type = parse_entry_type(request["entry_type"].get<std::string>());
            } catch (const Error& e) {
                throw ApiError(400, e.what());
            }
        }
        st.major = st.history.semesters.empty() ? "" : st.history.semesters.back().major;
    }
    if (request.contains("major") && !request["major"].is_null()) {
        if (!request["major"].is_string()) throw ApiError(400, "major must be a string");
        st.major = request["major"].get<std::string>();
    }
    return st;
}

QuerySpec read_spec(const nlohmann::json& request) {
    try {
        return query_spec_from_json(request);
    } catch (const Error& e) {
        throw ApiError(400, e.what());
    }
}

std::set<std::size_t> taken_courses(const StudentHistory& h) {
    std::set<std::size_t> out;
    for (const auto& sem : h.semesters) out.insert(sem.courses.begin(), sem.courses.end());
    return out;
}

nlohmann::json ranked(const Snapshot& s, const QuerySpec& spec, const std::set<std::size_t>& taken,
                      std::span<const double> rnn, std::size_t k) {
    if (spec.interest || spec.disinterest) need_space(s);
    std::vector<ScoredCourse> results;
    try {
        results = run_query(spec, s.context, s.space ? &*s.space : nullptr, taken, rnn, k);
    } catch (const NotFoundError& e) {
        throw ApiError(404, e.what());
    } catch (const Error& e) {
        throw ApiError(400, e.what());
    }
    auto list = nlohmann::json::array();
    for (std::size_t r = 0; r < results.size(); ++r) {
        auto c = course_json(s, results[r].course);
        c["rank"] = r + 1;
        c["score"] = results[r].score;
        c["interest_distance"] = results[r].interest_distance;
        c["disinterest_distance"] = results[r].disinterest_distance;
        c["collaborative"] = results[r].collaborative;
        list.push_back(std::move(c));
    }
    return list;
}

}  // namespace

std::string snapshot_version(const Snapshot& s) {
    std::ostringstream buf;
    write_enrollments(buf, s.data.enrollments);
    buf << s.target.to_string() << '\n';
    if (s.space) buf << s.space->vectors().format(Eigen::IOFormat(Eigen::FullPrecision)) << '\n';
    if (s.model) save_lstm(buf, *s.model);
    return hex(stable_hash(buf.str()));
}

std::shared_ptr<const Snapshot> build_snapshot(Dataset data, Semester target, std::size_t bow_top_removed,
                                               std::optional<SkipGramModel> embedding,
                                               std::optional<LstmModel> model) {
    auto s = std::make_shared<Snapshot>();
    s->target = target;
    s->data = std::move(data);
    s->corpus = build_corpus(s->data, bow_top_removed);
    const auto& vocab = s->corpus.vocab;
    if (embedding) {
        check_model_vocabulary(*embedding, vocab);
        s->space = EmbeddingSpace::from_model(*embedding, vocab);
    }
    if (model) {
        check_model_vocabulary(*model, vocab);
        s->model = std::move(*model);
    }

    for (auto& h : build_histories(records_before(s->data.enrollments, target), vocab)) {
        auto id = h.student;
        s->histories.emplace(std::move(id), std::move(h));
    }
    auto& ctx = s->context;
    ctx.vocab = &s->corpus.vocab;
    ctx.catalog = &s->data.catalog;
    for (const auto& r : s->data.enrollments.records) {
        // students seen only from the target on still get an empty history
        if (!s->histories.count(r.student)) {
            StudentHistory h;
            h.student = r.student;
            h.entry_type = r.entry_type;
            s->histories.emplace(r.student, std::move(h));
        }
        if (r.semester != target) continue;
        s->target_major.emplace(r.student, r.major);
        auto idx = vocab.find(r.course);
        if (!idx) continue;
        ctx.enrollment[*idx]++;
        if (!s->data.schedule) ctx.offered.insert(*idx);
    }
    if (s->data.schedule) {
        for (const auto& key : *s->data.schedule) {
            if (auto idx = vocab.find(key)) ctx.offered.insert(*idx);
        }
    }
    for (const auto& [a, b] : s->data.equivalencies) {
        auto ia = vocab.find(a), ib = vocab.find(b);
        if (ia && ib) ctx.equivalencies.emplace_back(*ia, *ib);
    }
    for (const auto& [name, list] : s->data.requirement_lists) {
        auto& set = ctx.requirement_lists[name];
        for (const auto& key : list) {
            if (auto idx = vocab.find(key)) set.insert(*idx);
        }
    }
    for (const auto& key : s->data.registrar_list) {
        if (auto idx = vocab.find(key)) ctx.registrar_list.insert(*idx);
    }
    s->model_version = snapshot_version(*s);
    return s;
}

nlohmann::json handle_health(const Snapshot& s) {
    return {{"status", "ok"},
            {"model_version", s.model_version},
            {"target_semester", s.target.to_string()},
            {"courses", s.corpus.vocab.size()},
            {"students", s.histories.size()},
            {"embedding", s.space.has_value()},
            {"recommender", s.model.has_value()},
            {"keywords", s.model && s.model->has_aux()}};
}

nlohmann::json handle_recommend(const Snapshot& s, const nlohmann::json& request) {
    if (!request.is_object()) throw ApiError(400, "request must be a JSON object");
    const auto k = read_k(request, 10);
    const auto spec = read_spec(request);
    const auto st = resolve_student(s, request, true);
    std::vector<double> rnn;
    if (spec.use_collaborative) {
        const auto& model = need_model(s);
        auto seq = make_sequence(st.history, model, st.major);
        auto y = final_distributions(model, {seq}).front();
        rnn.assign(y.data(), y.data() + y.size());
    }
    nlohmann::json out;
    out["model_version"] = s.model_version;
    out["target_semester"] = s.target.to_string();
    out["student_id"] = st.id ? nlohmann::json(*st.id) : nlohmann::json(nullptr);
    out["major"] = st.major;
    out["k"] = k;
    out["query"] = to_json(spec);
    out["results"] = ranked(s, spec, taken_courses(st.history), rnn, k);
    return out;
}

nlohmann::json handle_query(const Snapshot& s, const nlohmann::json& request) {
    if (!request.is_object()) throw ApiError(400, "request must be a JSON object");
    const auto k = read_k(request, 10);
    const auto spec = read_spec(request);
    if (spec.use_collaborative) throw ApiError(400, "use_collaborative needs a student; use /v1/recommend");
    std::set<std::size_t> taken;
    if (request.contains("taken")) {
        if (!request["taken"].is_array()) throw ApiError(400, "taken must be an array of courses");
        for (const auto& c : request["taken"]) {
            if (!c.is_string()) throw ApiError(400, "taken must be an array of courses");
            taken.insert(course_index(s, c.get<std::string>(), 400));
        }
    }
    nlohmann::json out;
    out["model_version"] = s.model_version;
    out["target_semester"] = s.target.to_string();
    out["k"] = k;
    out["query"] = to_json(spec);
    out["results"] = ranked(s, spec, taken, {}, k);
    return out;
}

nlohmann::json handle_similar(const Snapshot& s, const std::string& course, std::size_t k) {
    const auto& space = need_space(s);
    const auto idx = course_index(s, course, 404);
    auto list = nlohmann::json::array();
    for (const auto& n : nearest_neighbors(space, idx, k)) {
        auto c = course_json(s, n.course);
        c["similarity"] = n.similarity;
        list.push_back(std::move(c));
    }
    return {{"model_version", s.model_version}, {"course", course_json(s, idx)}, {"k", k}, {"neighbors", list}};
}

nlohmann::json handle_keywords(const Snapshot& s, const std::string& student, std::size_t k) {
    const auto& model = need_model(s);
    if (!model.has_aux()) throw ApiError(409, "the loaded model has no keyword head");
    const auto& h = lookup_history(s, student);
    auto seq = make_sequence(h, model, current_major(s, h));
    auto words = top_keywords(model, seq, k);
    auto steps = nlohmann::json::array();
    for (std::size_t t = 0; t < words.size(); ++t) {
        // step t has seen the first t semesters
        nlohmann::json after = t == 0 ? nlohmann::json(nullptr) : nlohmann::json(h.semesters[t - 1].semester.to_string());
        nlohmann::json predicts = t < h.semesters.size() ? nlohmann::json(h.semesters[t].semester.to_string())
                                                         : nlohmann::json(s.target.to_string());
        steps.push_back({{"after", after}, {"predicts", predicts}, {"keywords", words[t]}});
    }
    return {{"model_version", s.model_version}, {"student_id", student}, {"k", k}, {"steps", steps}};
}

nlohmann::json handle_projection(const Snapshot& s, const std::string& method_name) {
    const auto& model = need_model(s);
    ProjectionMethod method;
    try {
        method = parse_projection_method(method_name);
    } catch (const Error& e) {
        throw ApiError(400, e.what());
    }
    std::vector<const StudentHistory*> students;
    for (const auto& [id, h] : s.histories) {
        if (!h.semesters.empty()) students.push_back(&h);
    }
    if (students.size() < 3) throw ApiError(400, "projection needs at least 3 students with history");
    RowMatrix hidden(static_cast<Eigen::Index>(students.size()), static_cast<Eigen::Index>(model.config.hidden));
    for (std::size_t i = 0; i < students.size(); ++i) {
        auto seq = make_sequence(*students[i], model, current_major(s, *students[i]));
        hidden.row(static_cast<Eigen::Index>(i)) = extract_hidden_state(model, seq).transpose();
    }
    auto xy = project_2d(hidden, method, model.config.seed);
    auto points = nlohmann::json::array();
    for (std::size_t i = 0; i < students.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        points.push_back({{"student_id", students[i]->student},
                          {"major", current_major(s, *students[i])},
                          {"x", xy(r, 0)},
                          {"y", xy(r, 1)}});
    }
    return {{"model_version", s.model_version}, {"method", method_name}, {"points", points}};
}

nlohmann::json handle_catalog(const Snapshot& s) {
    auto courses = nlohmann::json::array();
    std::set<std::string> subjects;
    for (std::size_t i = 0; i < s.corpus.vocab.size(); ++i) {
        auto c = course_json(s, i);
        c.erase("description");
        c["offered"] = s.context.offered.count(i) > 0;
        courses.push_back(std::move(c));
        subjects.insert(s.corpus.vocab.key(i).subject);
    }
    auto lists = nlohmann::json::array();
    for (const auto& [name, set] : s.context.requirement_lists) lists.push_back(name);
    return {{"model_version", s.model_version},
            {"courses", courses},
            {"subjects", subjects},
            {"departments", s.context.departments()},
            {"majors", s.corpus.majors},
            {"requirement_lists", lists},
            {"filters", filter_keys()}};
}

ApiResponse route_request(const Snapshot& s, const std::string& method, const std::string& path,
                          const std::map<std::string, std::string>& params, const std::string& body) {
    auto param = [&](const std::string& key, const std::string& fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    auto parse_body = [&] {
        try {
            return nlohmann::json::parse(body.empty() ? std::string("{}") : body);
        } catch (const nlohmann::json::exception& e) {
            throw ApiError(400, std::string("invalid JSON body: ") + e.what());
        }
    };
    auto expect = [&](const char* m) {
        if (method != m) throw ApiError(405, "use " + std::string(m) + " for " + path);
    };
    auto tail = [&](const std::string& prefix) -> std::optional<std::string> {
        if (path.size() > prefix.size() && path.compare(0, prefix.size(), prefix) == 0) return path.substr(prefix.size());
        return std::nullopt;
    };
    try {
        nlohmann::json out;
        if (path == "/v1/health") {
            expect("GET");
            out = handle_health(s);
        } else if (path == "/v1/recommend") {
            expect("POST");
            out = handle_recommend(s, parse_body());
        } else if (path == "/v1/query") {
            expect("POST");
            out = handle_query(s, parse_body());
        } else if (auto course = tail("/v1/similar/")) {
            expect("GET");
            out = handle_similar(s, *course, parse_k(params, 10));
        } else if (auto student = tail("/v1/keywords/")) {
            expect("GET");
            out = handle_keywords(s, *student, parse_k(params, 5));
        } else if (path == "/v1/projection") {
            expect("GET");
            out = handle_projection(s, param("method", "pca"));
        } else if (path == "/v1/catalog") {
            expect("GET");
            out = handle_catalog(s);
        } else {
            throw ApiError(404, "no route for " + path);
        }
        return {200, out.dump()};
    } catch (const ApiError& e) {
        return {e.status(), nlohmann::json{{"error", e.what()}, {"status", e.status()}}.dump()};
    } catch (const NotFoundError& e) {
        return {404, nlohmann::json{{"error", e.what()}, {"status", 404}}.dump()};
    } catch (const Error& e) {
        return {400, nlohmann::json{{"error", e.what()}, {"status", 400}}.dump()};
    } catch (const std::exception& e) {
        return {500, nlohmann::json{{"error", e.what()}, {"status", 500}}.dump()};
    }
}

struct HttpService::Impl {
    SnapshotHolder& holder;
    httplib::Server server;

    explicit Impl(SnapshotHolder& h) : holder(h) {
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            std::map<std::string, std::string> params;
            for (const auto& [key, value] : req.params) params.emplace(key, value);
            auto snapshot = holder.get();
            auto r = route_request(*snapshot, req.method, req.path, params, req.body);
            res.status = r.status;
            res.set_content(r.body, "application/json");
        };
        server.Get(R"(/.*)", handler);
        server.Post(R"(/.*)", handler);
    }
};

HttpService::HttpService(SnapshotHolder& holder) : impl_(std::make_unique<Impl>(holder)) {}

HttpService::~HttpService() = default;

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->server.stop(); }

}  // namespace enrollrec

#include "enrollrec/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "enrollrec/csv.hpp"
#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

bool contains(std::span<const std::size_t> sorted, std::size_t x) {
    return std::binary_search(sorted.begin(), sorted.end(), x);
}

std::vector<std::size_t> sorted_unique(std::span<const std::size_t> v) {
    std::vector<std::size_t> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const std::string kUnknown = "unknown";

}  // namespace

double recall_at_k(std::span<const std::size_t> predicted, std::span<const std::size_t> actual,
                   std::size_t k) {
    if (actual.empty()) throw Error("recall of an empty actual set");
    auto act = sorted_unique(actual);
    std::set<std::size_t> hits;
    for (std::size_t i = 0; i < std::min(k, predicted.size()); ++i) {
        if (contains(act, predicted[i])) hits.insert(predicted[i]);
    }
    return static_cast<double>(hits.size()) / static_cast<double>(act.size());
}

double mrr_at_k(std::span<const std::size_t> predicted, std::span<const std::size_t> actual,
                std::size_t k) {
    if (actual.empty()) throw Error("reciprocal rank of an empty actual set");
    auto act = sorted_unique(actual);
    for (std::size_t i = 0; i < std::min(k, predicted.size()); ++i) {
        if (contains(act, predicted[i])) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

EvalSet build_eval_set(const EnrollmentTable& table, const CourseVocabulary& vocab, Semester target,
                       const std::optional<std::vector<std::size_t>>& schedule) {
    EvalSet set;
    set.target = target;
    EnrollmentTable in_target = records_in(table, target);
    if (in_target.empty()) throw Error("no enrollments in target semester " + target.to_string());

    struct Target {
        std::set<std::size_t> courses;
        std::set<std::string> majors;
        EntryType entry = EntryType::NewFreshman;
    };
    std::map<std::string, Target> targets;
    std::set<std::size_t> offered;
    for (const auto& r : in_target.records) {
        auto& t = targets[r.student];
        t.entry = r.entry_type;
        if (!r.major.empty()) t.majors.insert(r.major);
        if (auto idx = vocab.find(r.course)) {
            t.courses.insert(*idx);
            offered.insert(*idx);
        }
    }
    if (schedule) {
        set.offered = sorted_unique(*schedule);
        for (auto c : set.offered) {
            if (c >= vocab.size()) throw Error("schedule course index outside vocabulary");
        }
    } else {
        set.offered.assign(offered.begin(), offered.end());
    }
    if (set.offered.empty()) throw Error("no offered courses in target semester " + target.to_string());

    EnrollmentTable before = records_before(table, target);
    std::erase_if(before.records, [&](const EnrollmentRecord& r) { return !targets.count(r.student); });
    std::map<std::string, StudentHistory> histories;
    for (auto& h : build_histories(before, vocab)) histories.emplace(h.student, std::move(h));

    for (auto& [student, t] : targets) {
        if (t.courses.empty()) {
            set.excluded.push_back(student);
            continue;
        }
        EvalCase c;
        auto it = histories.find(student);
        if (it != histories.end()) {
            c.history = std::move(it->second);
        } else {
            c.history.student = student;
        }
        c.history.entry_type = t.entry;
        c.major = t.majors.empty() ? "" : *t.majors.begin();
        c.actual.assign(t.courses.begin(), t.courses.end());
        set.cases.push_back(std::move(c));
    }
    return set;
}

BatchPredictor lstm_predictor(const LstmModel& model) {
    return [&model](const std::vector<EvalCase>& cases, std::span<const std::size_t> offered, std::size_t k) {
        std::vector<LstmSequence> seqs;
        seqs.reserve(cases.size());
        for (const auto& c : cases) {
            seqs.push_back(make_sequence(c.history, model, c.major.empty() ? std::nullopt
                                                                            : std::optional<std::string>(c.major)));
        }
        auto dists = final_distributions(model, seqs);
        std::vector<std::vector<std::size_t>> out;
        out.reserve(cases.size());
        for (const auto& y : dists) {
            out.push_back(mask_prediction({y.data(), static_cast<std::size_t>(y.size())}, offered, k).top);
        }
        return out;
    };
}

BatchPredictor popularity_predictor(const PopularityModel& model) {
    return [&model](const std::vector<EvalCase>& cases, std::span<const std::size_t> offered, std::size_t k) {
        std::vector<std::vector<std::size_t>> out;
        for (const auto& c : cases) out.push_back(popularity_predict(model, c.major, offered, k).top);
        return out;
    };
}

BatchPredictor ngram_predictor(const NgramTable& table, std::uint64_t seed, std::size_t shuffles) {
    if (shuffles < 1) throw Error("n-gram prediction needs at least one shuffle");
    return [&table, seed, shuffles](const std::vector<EvalCase>& cases, std::span<const std::size_t> offered,
                                    std::size_t k) {
        std::vector<std::vector<std::size_t>> out;
        for (const auto& c : cases) {
            std::vector<std::vector<std::size_t>> serial;
            for (std::size_t r = 0; r < shuffles; ++r) serial.push_back(serialize_history(c.history, seed + r).tokens);
            out.push_back(ngram_predict(table, serial, offered, k).top);
        }
        return out;
    };
}

EvalReport evaluate(const EvalSet& set, const BatchPredictor& predictor, std::size_t k,
                    const std::map<std::string, std::string>& colleges) {
    if (k < 1) throw Error("k must be >= 1");
    if (set.cases.empty()) throw Error("no students to evaluate in " + set.target.to_string());
    EvalReport report;
    report.k = k;
    report.excluded = set.excluded.size();
    auto ranked = predictor(set.cases, set.offered, k);
    if (ranked.size() != set.cases.size()) throw Error("predictor returned the wrong number of rankings");
    double recall_sum = 0.0, rr_sum = 0.0;
    for (std::size_t i = 0; i < set.cases.size(); ++i) {
        const auto& c = set.cases[i];
        StudentEval e;
        e.student = c.history.student;
        e.recall = recall_at_k(ranked[i], c.actual, k);
        e.rr = mrr_at_k(ranked[i], c.actual, k);
        e.prior_semesters = c.history.semesters.size();
        e.major = c.major.empty() ? kUnknown : c.major;
        auto it = colleges.find(c.major);
        e.college = it == colleges.end() || it->second.empty() ? kUnknown : it->second;
        recall_sum += e.recall;
        rr_sum += e.rr;
        report.students.push_back(std::move(e));
    }
    report.mean_recall = recall_sum / static_cast<double>(report.students.size());
    report.mrr = rr_sum / static_cast<double>(report.students.size());
    return report;
}

std::vector<BreakdownRow> breakdown(const EvalReport& report, BreakdownDimension dimension) {
    struct Acc {
        std::size_t n = 0;
        double recall = 0.0, rr = 0.0;
    };
    std::map<std::pair<std::size_t, std::string>, Acc> groups;
    for (const auto& s : report.students) {
        std::pair<std::size_t, std::string> key;
        switch (dimension) {
            case BreakdownDimension::PriorSemesters: key = {s.prior_semesters, std::to_string(s.prior_semesters)}; break;
            case BreakdownDimension::College: key = {0, s.college.empty() ? kUnknown : s.college}; break;
            case BreakdownDimension::Major: key = {0, s.major.empty() ? kUnknown : s.major}; break;
        }
        auto& a = groups[key];
        ++a.n;
        a.recall += s.recall;
        a.rr += s.rr;
    }
    std::vector<BreakdownRow> out;
    for (const auto& [key, a] : groups) {
        out.push_back({key.second, a.n, a.recall / static_cast<double>(a.n), a.rr / static_cast<double>(a.n)});
    }
    return out;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    csv::write_row(out, {"student_id", "recall", "rr", "prior_semesters", "major", "college"});
    char buf[32];
    for (const auto& s : report.students) {
        std::snprintf(buf, sizeof(buf), "%.6f", s.recall);
        std::string recall = buf;
        std::snprintf(buf, sizeof(buf), "%.6f", s.rr);
        csv::write_row(out, {s.student, recall, buf, std::to_string(s.prior_semesters), s.major, s.college});
    }
}

nlohmann::json report_json(const EvalReport& report) {
    nlohmann::json j;
    j["k"] = report.k;
    j["students"] = report.students.size();
    j["excluded"] = report.excluded;
    j["mean_recall"] = report.mean_recall;
    j["mrr"] = report.mrr;
    auto rows = [&](BreakdownDimension d) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : breakdown(report, d)) {
            arr.push_back({{"group", r.group}, {"count", r.count}, {"mean_recall", r.mean_recall}, {"mrr", r.mrr}});
        }
        return arr;
    };
    j["by_prior_semesters"] = rows(BreakdownDimension::PriorSemesters);
    j["by_college"] = rows(BreakdownDimension::College);
    j["by_major"] = rows(BreakdownDimension::Major);
    return j;
}

}  // namespace enrollrec

#include "enrollrec/query.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

const std::vector<std::pair<FilterKind, std::string>> kFilterNames = {
    {FilterKind::Offered, "offered"},
    {FilterKind::NotTaken, "not_taken"},
    {FilterKind::NoCreditRestriction, "no_credit_restriction"},
    {FilterKind::Department, "department"},
    {FilterKind::RequirementList, "requirement_list"},
    {FilterKind::OpenSeats, "open_seats"},
    {FilterKind::RegistrarList, "registrar_list"},
};

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
    return out;
}

bool needs_name(FilterKind kind) {
    return kind == FilterKind::Department || kind == FilterKind::RequirementList;
}

void min_max(std::vector<double>& v) {
    if (v.empty()) return;
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, b = *hi;
    for (auto& x : v) x = b > a ? (x - a) / (b - a) : 0.0;
}

}  // namespace

std::string filter_key(FilterKind kind) {
    for (const auto& [k, n] : kFilterNames) {
        if (k == kind) return n;
    }
    throw Error("bad filter kind");
}

const std::vector<std::string>& filter_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [k, n] : kFilterNames) out.push_back(n);
        return out;
    }();
    return keys;
}

void QuerySpec::validate() const {
    if (!std::isfinite(collaborative_weight) || collaborative_weight < 0.0) {
        throw Error("collaborative_weight must be a finite value >= 0");
    }
    for (const auto& f : filters) {
        if (needs_name(f.kind) && f.name.empty()) throw Error(filter_key(f.kind) + " filter needs a name");
    }
}

QuerySpec query_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("query must be a JSON object");
    QuerySpec spec;
    auto opt_string = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        if (!j[key].is_string()) throw Error(std::string(key) + " must be a string");
        auto s = j[key].get<std::string>();
        if (s.empty()) return std::nullopt;
        return s;
    };
    spec.interest = opt_string("interest");
    spec.disinterest = opt_string("disinterest");
    if (j.contains("use_collaborative")) {
        if (!j["use_collaborative"].is_boolean()) throw Error("use_collaborative must be a boolean");
        spec.use_collaborative = j["use_collaborative"].get<bool>();
    }
    if (j.contains("collaborative_weight")) {
        if (!j["collaborative_weight"].is_number()) throw Error("collaborative_weight must be a number");
        spec.collaborative_weight = j["collaborative_weight"].get<double>();
    }
    if (j.contains("filters") && !j["filters"].is_null()) {
        const auto& f = j["filters"];
        if (!f.is_object()) throw Error("filters must be an object");
        for (const auto& [key, value] : f.items()) {
            auto it = std::find_if(kFilterNames.begin(), kFilterNames.end(),
                                   [&](const auto& p) { return p.second == key; });
            if (it == kFilterNames.end()) {
                throw Error("unknown filter '" + key + "'; valid filters: " + join(filter_keys()));
            }
            if (needs_name(it->first)) {
                if (!value.is_string()) throw Error("filter " + key + " takes a name");
                spec.filters.push_back({it->first, value.get<std::string>()});
            } else {
                if (!value.is_boolean()) throw Error("filter " + key + " takes true or false");
                if (value.get<bool>()) spec.filters.push_back({it->first, ""});
            }
        }
    }
    std::sort(spec.filters.begin(), spec.filters.end());
    spec.validate();
    return spec;
}

nlohmann::json to_json(const QuerySpec& spec) {
    nlohmann::json j;
    j["interest"] = spec.interest ? nlohmann::json(*spec.interest) : nlohmann::json(nullptr);
    j["disinterest"] = spec.disinterest ? nlohmann::json(*spec.disinterest) : nlohmann::json(nullptr);
    j["use_collaborative"] = spec.use_collaborative;
    j["collaborative_weight"] = spec.collaborative_weight;
    nlohmann::json f = nlohmann::json::object();
    for (const auto& filter : spec.filters) {
        if (needs_name(filter.kind)) {
            f[filter_key(filter.kind)] = filter.name;
        } else {
            f[filter_key(filter.kind)] = true;
        }
    }
    j["filters"] = f;
    return j;
}

std::string QueryContext::department(std::size_t course) const {
    const auto& key = vocab->key(course);
    if (catalog) {
        if (const auto* e = catalog->find(key); e && !e->department.empty()) return e->department;
    }
    return key.subject;
}

std::vector<std::string> QueryContext::departments() const {
    std::set<std::string> out;
    for (std::size_t i = 0; i < vocab->size(); ++i) out.insert(department(i));
    return {out.begin(), out.end()};
}

std::optional<long> QueryContext::capacity(std::size_t course) const {
    if (!catalog) return std::nullopt;
    const auto* e = catalog->find(vocab->key(course));
    if (!e) return std::nullopt;
    return e->capacity;
}

std::vector<std::size_t> apply_filters(std::span<const std::size_t> candidates, const std::vector<Filter>& filters,
                                       const QueryContext& context, const std::set<std::size_t>& taken) {
    if (!context.vocab) throw Error("query context has no vocabulary");
    // validate names up front so errors do not depend on the candidate set
    for (const auto& f : filters) {
        if (f.kind == FilterKind::Department) {
            auto valid = context.departments();
            if (!std::binary_search(valid.begin(), valid.end(), f.name)) {
                throw Error("unknown department '" + f.name + "'; valid departments: " + join(valid));
            }
        } else if (f.kind == FilterKind::RequirementList && !context.requirement_lists.count(f.name)) {
            std::vector<std::string> valid;
            for (const auto& [name, list] : context.requirement_lists) valid.push_back(name);
            throw Error("unknown requirement list '" + f.name + "'; valid lists: " + join(valid));
        }
    }
    std::set<std::size_t> restricted;
    for (const auto& [a, b] : context.equivalencies) {
        if (taken.count(a)) restricted.insert(b);
        if (taken.count(b)) restricted.insert(a);
    }
    auto keep = [&](std::size_t c, const Filter& f) {
        switch (f.kind) {
            case FilterKind::Offered: return context.offered.count(c) > 0;
            case FilterKind::NotTaken: return taken.count(c) == 0;
            case FilterKind::NoCreditRestriction: return restricted.count(c) == 0;
            case FilterKind::Department: return context.department(c) == f.name;
            case FilterKind::RequirementList: return context.requirement_lists.at(f.name).count(c) > 0;
            case FilterKind::OpenSeats: {
                auto cap = context.capacity(c);
                if (!cap) return false;
                auto it = context.enrollment.find(c);
                long enrolled = it == context.enrollment.end() ? 0 : it->second;
                return *cap > enrolled;
            }
            case FilterKind::RegistrarList: return context.registrar_list.count(c) > 0;
        }
        return false;
    };
    std::vector<std::size_t> out;
    for (auto c : candidates) {
        if (c >= context.vocab->size()) throw Error("candidate course index outside vocabulary");
        if (std::all_of(filters.begin(), filters.end(), [&](const Filter& f) { return keep(c, f); })) {
            out.push_back(c);
        }
    }
    return out;
}

std::vector<double> normalized_distances(const EmbeddingSpace& space, std::span<const std::size_t> candidates,
                                         std::span<const double> point) {
    if (point.size() != space.dimension()) throw Error("centroid dimension mismatch");
    std::vector<double> d;
    d.reserve(candidates.size());
    for (auto c : candidates) {
        auto v = space.vector(c);
        double s = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) s += (v[k] - point[k]) * (v[k] - point[k]);
        d.push_back(std::sqrt(s));
    }
    min_max(d);
    return d;
}

std::vector<double> preference_scores(const EmbeddingSpace& space, std::span<const std::size_t> candidates,
                                      const std::optional<std::vector<double>>& centroid_a,
                                      const std::optional<std::vector<double>>& centroid_b) {
    if (candidates.empty()) throw Error("preference score over an empty candidate set");
    std::vector<double> s(candidates.size(), 0.0);
    if (centroid_a) {
        auto da = normalized_distances(space, candidates, *centroid_a);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] -= da[i];
    }
    if (centroid_b) {
        auto db = normalized_distances(space, candidates, *centroid_b);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += db[i];
    }
    return s;
}

bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    auto digit = [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)) != 0; };
    while (i < a.size() && j < b.size()) {
        if (digit(a[i]) && digit(b[j])) {
            std::size_t i2 = i, j2 = j;
            while (i2 < a.size() && digit(a[i2])) ++i2;
            while (j2 < b.size() && digit(b[j2])) ++j2;
            // strip leading zeros, then longer run is larger
            std::size_t zi = i, zj = j;
            while (zi + 1 < i2 && a[zi] == '0') ++zi;
            while (zj + 1 < j2 && b[zj] == '0') ++zj;
            std::string_view ra(a.data() + zi, i2 - zi), rb(b.data() + zj, j2 - zj);
            if (ra.size() != rb.size()) return ra.size() < rb.size();
            if (ra != rb) return ra < rb;
            i = i2;
            j = j2;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) return a.size() - i < b.size() - j;
    return a < b;
}

std::vector<ScoredCourse> rank_courses(std::span<const std::size_t> filtered, const QuerySpec& spec,
                                       const QueryContext& context, const EmbeddingSpace* space,
                                       std::span<const double> rnn) {
    spec.validate();
    std::vector<ScoredCourse> out;
    for (auto c : filtered) out.push_back({c, 0.0, 0.0, 0.0, 0.0});
    if (out.empty()) return out;

    if (!spec.has_sort()) {
        std::vector<std::string> dept;
        for (const auto& s : out) dept.push_back(context.department(s.course));
        std::vector<std::size_t> order(out.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (dept[x] != dept[y]) return dept[x] < dept[y];
            const auto& nx = context.vocab->key(out[x].course).number;
            const auto& ny = context.vocab->key(out[y].course).number;
            if (natural_less(nx, ny)) return true;
            if (natural_less(ny, nx)) return false;
            return out[x].course < out[y].course;
        });
        std::vector<ScoredCourse> sorted;
        for (auto i : order) sorted.push_back(out[i]);
        return sorted;
    }

    if (spec.interest || spec.disinterest) {
        if (!space) throw Error("subject preferences need a course embedding");
        if (spec.interest) {
            auto da = normalized_distances(*space, filtered, subject_centroid(*space, *spec.interest));
            for (std::size_t i = 0; i < out.size(); ++i) out[i].interest_distance = da[i];
        }
        if (spec.disinterest) {
            auto db = normalized_distances(*space, filtered, subject_centroid(*space, *spec.disinterest));
            for (std::size_t i = 0; i < out.size(); ++i) out[i].disinterest_distance = db[i];
        }
    }
    if (spec.use_collaborative) {
        if (rnn.size() != context.vocab->size()) throw Error("collaborative term needs the RNN distribution");
        // masking to the filtered set is a positive rescale, so min-max over
        // the filtered set gives the same values either way
        std::vector<double> p;
        for (auto c : filtered) p.push_back(rnn[c]);
        min_max(p);
        for (std::size_t i = 0; i < out.size(); ++i) out[i].collaborative = p[i];
    }
    for (auto& s : out) {
        s.score = -s.interest_distance + s.disinterest_distance + spec.collaborative_weight * s.collaborative;
    }
    std::stable_sort(out.begin(), out.end(), [](const ScoredCourse& x, const ScoredCourse& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.course < y.course;
    });
    return out;
}

std::vector<ScoredCourse> run_query(const QuerySpec& spec, const QueryContext& context, const EmbeddingSpace* space,
                                    const std::set<std::size_t>& taken, std::span<const double> rnn,
                                    std::size_t k) {
    if (k < 1) throw Error("k must be >= 1");
    if (!context.vocab) throw Error("query context has no vocabulary");
    std::vector<std::size_t> all(context.vocab->size());
    std::iota(all.begin(), all.end(), 0);
    auto filtered = apply_filters(all, spec.filters, context, taken);
    auto ranked = rank_courses(filtered, spec, context, space, rnn);
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

}  // namespace enrollrec

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "enrollrec/embedding_space.hpp"
#include "enrollrec/lstm.hpp"
#include "enrollrec/pipeline.hpp"
#include "enrollrec/query.hpp"

namespace enrollrec {

// Carries the HTTP status a request failure maps to.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

// Immutable state behind every request. Recommendations target `target`;
// a student's history is everything recorded before it.
struct Snapshot {
    std::string model_version;
    Semester target;
    Dataset data;
    Corpus corpus;
    std::map<std::string, StudentHistory> histories;
    std::map<std::string, std::string> target_major;  // major in the target semester, when enrolled
    std::optional<EmbeddingSpace> space;
    std::optional<LstmModel> model;
    QueryContext context;  // points into `data` and `corpus`

    Snapshot() = default;
    Snapshot(const Snapshot&) = delete;
    Snapshot& operator=(const Snapshot&) = delete;
};

// `data` should already be cleaned. Models must match the data's vocabulary.
std::shared_ptr<const Snapshot> build_snapshot(Dataset data, Semester target, std::size_t bow_top_removed,
                                               std::optional<SkipGramModel> embedding,
                                               std::optional<LstmModel> model);

// Hash of the model weights and data, stable across runs.
std::string snapshot_version(const Snapshot& snapshot);

class SnapshotHolder {
public:
    explicit SnapshotHolder(std::shared_ptr<const Snapshot> initial) : current_(std::move(initial)) {}

    std::shared_ptr<const Snapshot> get() const {
        std::lock_guard lock(mutex_);
        return current_;
    }
    void set(std::shared_ptr<const Snapshot> next) {
        std::lock_guard lock(mutex_);
        current_ = std::move(next);
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> current_;
};

nlohmann::json handle_health(const Snapshot& s);
// Body: student_id or history (+ major), QuerySpec fields, k (default 10).
nlohmann::json handle_recommend(const Snapshot& s, const nlohmann::json& request);
// Like recommend without a student: optional "taken" course list.
nlohmann::json handle_query(const Snapshot& s, const nlohmann::json& request);
nlohmann::json handle_similar(const Snapshot& s, const std::string& course, std::size_t k);
nlohmann::json handle_keywords(const Snapshot& s, const std::string& student, std::size_t k);
nlohmann::json handle_projection(const Snapshot& s, const std::string& method);
nlohmann::json handle_catalog(const Snapshot& s);

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
};

// Dispatch without a socket. Errors become {"error": message} bodies.
ApiResponse route_request(const Snapshot& s, const std::string& method, const std::string& path,
                          const std::map<std::string, std::string>& params, const std::string& body);

// httplib server in front of route_request. Each request reads the holder
// once, so a concurrent set() never mixes two snapshots in one response.
class HttpService {
public:
    explicit HttpService(SnapshotHolder& holder);
    ~HttpService();

    // Returns the bound port (an ephemeral one when `port` is 0). Throws on failure.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace enrollrec

#pragma once
// Read-only HTTP service for analytics documents and the viewer's assets.
//
//   GET /api/films        {"films": [{"id", "file", "n_faces"}], "invalid": [{"file", "error"}]}
//   GET /api/films/{id}   the stored document
//
// Errors are JSON bodies {"error", "detail"}.

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace screenrep {

struct FilmEntry {
    std::string id;  // film_id of the document
    std::string file;
    std::size_t n_faces = 0;
    std::string body;  // file contents, served verbatim
};

struct InvalidFile {
    std::string file;
    std::string error;
};

/// Snapshot of a directory of analytics documents, sorted by file name.
/// Files that fail to parse or validate, and later files repeating a
/// film_id, are recorded as invalid and not served.
class FilmStore {
public:
    /// Throws InputError when the directory does not exist.
    static FilmStore scan(const std::filesystem::path& dir);

    const std::vector<FilmEntry>& films() const { return films_; }
    const std::vector<InvalidFile>& invalid() const { return invalid_; }
    const FilmEntry* find(const std::string& id) const;
    nlohmann::ordered_json listing() const;

private:
    std::vector<FilmEntry> films_;
    std::vector<InvalidFile> invalid_;
};

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> static_dir;
};

class AnalyticsServer {
public:
    /// Binds immediately. Throws InputError when the port cannot be bound.
    AnalyticsServer(FilmStore store, const ServeOptions& options);
    ~AnalyticsServer();

    int port() const;
    /// Blocks until stop() is called.
    void run();
    /// Blocks until run() is accepting connections; stop() before that is lost.
    void wait_until_running() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace screenrep

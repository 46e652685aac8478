#include "screenrep/server.hpp"

#include "screenrep/analytics_json.hpp"
#include "screenrep/errors.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

namespace screenrep {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

FilmStore FilmStore::scan(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("analytics directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    FilmStore store;
    std::set<std::string> seen;
    for (const fs::path& path : files) {
        const std::string name = path.filename().string();
        std::ifstream in(path, std::ios::binary);
        std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        json doc;
        try {
            doc = json::parse(body);
        } catch (const json::parse_error& e) {
            store.invalid_.push_back({name, std::string("invalid JSON: ") + e.what()});
            continue;
        }
        if (auto problem = validate_analytics(doc)) {
            store.invalid_.push_back({name, *problem});
            continue;
        }
        std::string id = doc["film_id"].get<std::string>();
        if (!seen.insert(id).second) {
            store.invalid_.push_back({name, "duplicate film_id '" + id + "'"});
            continue;
        }
        store.films_.push_back({std::move(id), name, doc["n_faces"].get<std::size_t>(), std::move(body)});
    }
    return store;
}

const FilmEntry* FilmStore::find(const std::string& id) const {
    for (const FilmEntry& f : films_) {
        if (f.id == id) return &f;
    }
    return nullptr;
}

ordered_json FilmStore::listing() const {
    ordered_json out;
    out["films"] = ordered_json::array();
    for (const FilmEntry& f : films_) out["films"].push_back({{"id", f.id}, {"file", f.file}, {"n_faces", f.n_faces}});
    out["invalid"] = ordered_json::array();
    for (const InvalidFile& f : invalid_) out["invalid"].push_back({{"file", f.file}, {"error", f.error}});
    return out;
}

namespace {

void json_error(httplib::Response& res, int status, const std::string& error, const std::string& detail) {
    res.status = status;
    res.set_content(ordered_json{{"error", error}, {"detail", detail}}.dump(), "application/json");
}

}  // namespace

struct AnalyticsServer::Impl {
    FilmStore store;
    httplib::Server http;
    int port = 0;
};

AnalyticsServer::AnalyticsServer(FilmStore store, const ServeOptions& options) : impl_(std::make_unique<Impl>()) {
    impl_->store = std::move(store);
    httplib::Server& http = impl_->http;
    const FilmStore& films = impl_->store;

    http.Get("/api/films", [&films](const httplib::Request&, httplib::Response& res) {
        res.set_content(films.listing().dump(), "application/json");
    });
    http.Get(R"(/api/films/([^/]+))", [&films](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (const FilmEntry* f = films.find(id)) {
            res.set_content(f->body, "application/json");
        } else {
            json_error(res, 404, "not_found", "no film with id '" + id + "'");
        }
    });
    if (options.static_dir) {
        if (!http.set_mount_point("/", options.static_dir->string())) {
            throw InputError("static asset directory not found: " + options.static_dir->string());
        }
    }
    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) json_error(res, 404, "not_found", "no route for " + req.path);
    });

    // SO_REUSEADDR only: the library default adds SO_REUSEPORT, which lets a
    // second server share a busy port silently
    http.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });

    if (options.port == 0) {
        impl_->port = http.bind_to_any_port(options.host);
        if (impl_->port <= 0) throw InputError("cannot bind to " + options.host);
    } else {
        if (!http.bind_to_port(options.host, options.port)) {
            throw InputError("cannot bind to " + options.host + ":" + std::to_string(options.port) +
                             " (port in use or not permitted)");
        }
        impl_->port = options.port;
    }
}

AnalyticsServer::~AnalyticsServer() { stop(); }

int AnalyticsServer::port() const { return impl_->port; }

void AnalyticsServer::run() { impl_->http.listen_after_bind(); }

void AnalyticsServer::wait_until_running() const { impl_->http.wait_until_ready(); }

void AnalyticsServer::stop() {
    if (impl_) impl_->http.stop();
}

}  // namespace screenrep

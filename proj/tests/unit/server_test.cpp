#include "screenrep/analytics_json.hpp"
#include "screenrep/errors.hpp"
#include "screenrep/server.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <fstream>
#include <thread>

using namespace screenrep;
namespace fs = std::filesystem;

namespace {

std::string document(const std::string& id, std::size_t female, std::size_t male) {
    std::vector<FacePrediction> preds;
    for (std::size_t i = 0; i < female + male; ++i) {
        FacePrediction p;
        const auto gn = class_names(Task::Gender), an = class_names(Task::Age);
        p.gender = ProbDist{{i < female ? 0.9 : 0.1, i < female ? 0.1 : 0.9}, {gn.begin(), gn.end()}};
        std::vector<double> age(9, 0.0);
        age[i % 9] = 1.0;
        p.age = ProbDist{age, {an.begin(), an.end()}};
        preds.push_back(p);
    }
    return serialize_analytics(film_analytics(id, preds));
}

fs::path analytics_dir() {
    const fs::path dir = fixture::scratch_dir("serve");
    std::ofstream(dir / "a.json") << document("film_a", 3, 1);
    std::ofstream(dir / "b.json") << document("film_b", 1, 1);
    std::ofstream(dir / "c.json") << document("film_c", 0, 5);
    std::ofstream(dir / "d.json") << "{\"film_id\": \"broken\"";
    std::ofstream(dir / "e.json") << document("film_a", 1, 0);
    std::ofstream(dir / "notes.txt") << "ignored";
    fs::create_directories(dir / "static");
    std::ofstream(dir / "static" / "index.html") << "<html>viewer</html>";
    return dir;
}

class Running {
public:
    Running(FilmStore store, ServeOptions opt) : server_(std::move(store), opt), thread_([this] { server_.run(); }) {
        server_.wait_until_running();
    }
    ~Running() {
        server_.stop();
        thread_.join();
    }
    int port() const { return server_.port(); }

private:
    AnalyticsServer server_;
    std::thread thread_;
};

}  // namespace

TEST(FilmStore, ScanSortsAndRecordsInvalid) {
    const FilmStore store = FilmStore::scan(analytics_dir());
    ASSERT_EQ(store.films().size(), 3u);
    EXPECT_EQ(store.films()[0].id, "film_a");
    EXPECT_EQ(store.films()[0].n_faces, 4u);
    EXPECT_EQ(store.films()[2].id, "film_c");
    ASSERT_EQ(store.invalid().size(), 2u);
    EXPECT_EQ(store.invalid()[0].file, "d.json");
    EXPECT_EQ(store.invalid()[1].file, "e.json");
    EXPECT_NE(store.invalid()[1].error.find("film_a"), std::string::npos);
    EXPECT_TRUE(store.find("film_b"));
    EXPECT_FALSE(store.find("broken"));
    EXPECT_THROW(FilmStore::scan(fixture::scratch_dir("serve_missing") / "nope"), InputError);
}

TEST(AnalyticsServer, ListingDocumentsAndErrors) {
    const fs::path dir = analytics_dir();
    ServeOptions opt;
    opt.port = 0;
    opt.static_dir = dir / "static";
    Running server(FilmStore::scan(dir), opt);
    httplib::Client client("127.0.0.1", server.port());

    auto list = client.Get("/api/films");
    ASSERT_TRUE(list);
    EXPECT_EQ(list->status, 200);
    const auto j = nlohmann::json::parse(list->body);
    ASSERT_EQ(j["films"].size(), 3u);
    EXPECT_EQ(j["films"][1]["id"], "film_b");
    EXPECT_EQ(j["invalid"].size(), 2u);

    auto film = client.Get("/api/films/film_c");
    ASSERT_TRUE(film);
    EXPECT_EQ(film->status, 200);
    std::ifstream in(dir / "c.json");
    const std::string stored((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(film->body, stored);

    auto missing = client.Get("/api/films/film_z");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
    EXPECT_EQ(nlohmann::json::parse(missing->body)["error"], "not_found");

    auto page = client.Get("/index.html");
    ASSERT_TRUE(page);
    EXPECT_EQ(page->status, 200);
    EXPECT_EQ(page->body, "<html>viewer</html>");
}

TEST(AnalyticsServer, PortInUseIsInputError) {
    const fs::path dir = analytics_dir();
    ServeOptions opt;
    opt.port = 0;
    Running first(FilmStore::scan(dir), opt);
    opt.port = first.port();
    EXPECT_THROW(AnalyticsServer(FilmStore::scan(dir), opt), InputError);
}

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "semloft/config.hpp"
#include "semloft/error.hpp"
#include "semloft/pgm.hpp"
#include "semloft/pipeline.hpp"
#include "semloft/synth.hpp"

using namespace semloft;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("semloft_unit_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct CliResult {
    int status = -1;
    std::string err;
};

CliResult cli(const std::string& args, const TempDir& tmp)
{
    const std::string err_path = tmp / "stderr.txt";
    const std::string cmd = std::string("'") + SEMLOFT_CLI_PATH + "' " + args + " > '" + (tmp / "stdout.txt") +
                            "' 2> '" + err_path + "'";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = read_text_file(err_path);
    return r;
}

std::string data(const std::string& name)
{
    return std::string(SEMLOFT_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("config: keys, comments and validation")
{
    const Config c = parse_config("# tuned\nscoring.sigma = 3.5\nchain.iterations=500  # short\n"
                                  "scoring.lookup = 0.7,0.2,0.1, 0.1,0.8,0.1, 0.1,0.1,0.8\n"
                                  "chain.weight.interchange = 0\ndoor.min_width = 3\nmap.invert = true\n");
    CHECK(c.sigma == 3.5);
    CHECK(c.chain.max_iterations == 500);
    CHECK(c.lookup.p[0][1] == 0.2);
    CHECK(c.chain.kernel_weights[int(KernelKind::Interchange)] == 0.0);
    CHECK(c.rules.door_min_width == 3);
    CHECK(c.door_bounds_explicit);
    CHECK(c.invert);

    CHECK(kind_of([] { parse_config("no.such.key = 1\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("scoring.sigma = abc\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("scoring.sigma = -1\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("scoring.lookup = 0.5,0.5\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("classify.h_o = 0.9\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("just text\n"); }) == ErrorKind::Config);
}

TEST_CASE("config: explicit path, environment fallback, defaults")
{
    TempDir tmp;
    write_text_file(tmp / "a.cfg", "scoring.sigma = 2\n");
    write_text_file(tmp / "b.cfg", "scoring.sigma = 7\n");
    ::setenv("SEMLOFT_CONFIG", (tmp / "b.cfg").c_str(), 1);
    CHECK(load_config(tmp / "a.cfg").sigma == 2.0);
    CHECK(load_config(std::nullopt).sigma == 7.0);
    ::unsetenv("SEMLOFT_CONFIG");
    CHECK(load_config(std::nullopt).sigma == 5.0);
    CHECK(kind_of([&] { load_config(tmp / "missing.cfg"); }) == ErrorKind::Io);
}

TEST_CASE("config: knowledge base file replaces the same-length formulas")
{
    TempDir tmp;
    write_text_file(tmp / "kb.mln", "0.5 | Room(p) ^ Room(q) ^ Adj(p,q) -> SaLe(p,q)\n");
    Config c;
    c.kb_file = tmp / "kb.mln";
    CHECK(c.knowledge_base().formulas.size() == 1);
    c.kb_weights.w5 = 1.0;
    c.kb_file.clear();
    CHECK(c.knowledge_base().formulas[4].weight == 1.0);
}

TEST_CASE("pipeline: parameters follow the map resolution")
{
    Config cfg;
    PreparedMap pm;
    pm.classified = ClassifiedGrid(100, 100);
    CHECK(world_rules(cfg, pm).door_min_width == 2);
    CHECK(world_rules(cfg, pm).door_max_width == 8);
    pm.has_resolution = true;
    pm.resolution = 0.05;
    CHECK(world_rules(cfg, pm).door_min_width == 14);
    CHECK(world_rules(cfg, pm).door_max_width == 24);
    CHECK(scoring_params(cfg, pm, {}).unit_classes.area_big == doctest::Approx(16000.0));
    pm.resolution = 0.1;
    CHECK(scoring_params(cfg, pm, {}).unit_classes.area_big == doctest::Approx(4000.0));

    cfg = parse_config("door.min_width = 3\ndoor.max_width = 9\n");
    CHECK(world_rules(cfg, pm).door_min_width == 3);
    CHECK(world_rules(cfg, pm).door_max_width == 9);
}

TEST_CASE("pipeline: inversion flips the intensity convention")
{
    OccupancyGrid g(4, 4, 0.0);
    Config cfg;
    cfg.invert = true;
    const PreparedMap pm = prepare_map(g, cfg);
    CHECK(count_states(pm.classified)[int(CellState::Free)] == 16);
}

TEST_CASE("pipeline: the bundled two-room map is recovered and rescoring matches")
{
    const OccupancyGrid grid = load_pgm(data("two_rooms.pgm"));
    Config cfg;
    const ExtractResult r = extract(grid, cfg);
    REQUIRE(r.world.size() == 2);
    CHECK(r.world.types == std::vector<UnitType>{UnitType::Room, UnitType::Room});
    CHECK(r.cell_prediction_rate >= 0.95);

    const ScoreReport again = score_report(r.map, r.world, cfg);
    CHECK(metrics_json(again.world, again.score, again.cell_prediction_rate) ==
          metrics_json(r.world, r.score, r.cell_prediction_rate));
    const auto metrics = nlohmann::json::parse(metrics_json(r.world, r.score, r.cell_prediction_rate));
    CHECK(metrics["unit_count"] == 2);
    CHECK(metrics["type_counts"]["room"] == 2);
}

TEST_CASE("cli: error reports and exit codes")
{
    TempDir tmp;
    auto r = cli("extract --map '" + (tmp / "missing.pgm") + "' --out '" + (tmp / "w.json") + "'", tmp);
    CHECK(r.status == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "io");

    write_text_file(tmp / "far.json", R"({"schema":"semworld/1","width":20,"height":20,)"
                                      R"("units":[{"vertices":[[10,10],[30,10],[30,30],[10,30]]}],"doors":[]})");
    r = cli("synth --world '" + (tmp / "far.json") + "' --out '" + (tmp / "far.pgm") + "'", tmp);
    CHECK(r.status == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "geometry");

    write_text_file(tmp / "bad.cfg", "chain.iterations = many\n");
    r = cli("detect --map '" + data("two_rooms.pgm") + "' --config '" + (tmp / "bad.cfg") + "'", tmp);
    CHECK(r.status == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "config");

    write_text_file(tmp / "garbage.pgm", "P5\n10 10\n255\nxx");
    r = cli("detect --map '" + (tmp / "garbage.pgm") + "'", tmp);
    CHECK(r.status == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "format");
}

TEST_CASE("cli: noise-free synth scores perfectly, detect on a blank map, render size")
{
    TempDir tmp;
    REQUIRE(cli("synth --world '" + data("two_rooms.json") + "' --out '" + (tmp / "clean.pgm") + "'", tmp).status == 0);
    REQUIRE(cli("score --map '" + (tmp / "clean.pgm") + "' --world '" + data("two_rooms.json") + "' --out '" +
                    (tmp / "score.json") + "'",
                tmp)
                .status == 0);
    const auto score = nlohmann::json::parse(read_text_file(tmp / "score.json"));
    CHECK(score["K"] == 1.0);

    save_pgm(tmp / "free.pgm", OccupancyGrid(40, 30, 1.0));
    REQUIRE(cli("detect --map '" + (tmp / "free.pgm") + "' --out '" + (tmp / "det.json") + "'", tmp).status == 0);
    const auto det = nlohmann::json::parse(read_text_file(tmp / "det.json"));
    CHECK(det["walls"].empty());
    CHECK(det["doors"].empty());
    CHECK(det["units"].empty());

    REQUIRE(cli("render --map '" + (tmp / "clean.pgm") + "' --world '" + data("two_rooms.json") + "' --out '" +
                    (tmp / "overlay.pgm") + "'",
                tmp)
                .status == 0);
    const OccupancyGrid overlay = load_pgm(tmp / "overlay.pgm");
    CHECK(overlay.width == 120);
    CHECK(overlay.height == 80);
}

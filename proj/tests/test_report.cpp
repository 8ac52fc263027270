#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "distlab/experiments.hpp"
#include "distlab/report.hpp"

using namespace distlab;

namespace {

Report small_report() {
    Report r;
    r.experiment = "demo";
    r.seed = 5;
    r.columns = {"x", "metric", "label"};
    r.svg_x = "x";
    r.svg_y = {"metric"};
    r.add_row({Cell::of(0.0), Cell::of(1.5), Cell::of(std::string("a"))});
    r.add_row({Cell::of(1.0), Cell::of(2.25), Cell::of(std::string("b"))});
    r.add_row({Cell::of(2.0), Cell::of(0.125), Cell::of(std::string("a"))});
    return r;
}

// minimal well-formedness checker: declaration, balanced tags, quoted
// attributes
bool xml_well_formed(const std::string& xml) {
    std::vector<std::string> stack;
    std::size_t pos = 0;
    if (xml.rfind("<?xml", 0) == 0) {
        pos = xml.find("?>");
        if (pos == std::string::npos) return false;
        pos += 2;
    }
    while (pos < xml.size()) {
        const std::size_t open = xml.find('<', pos);
        if (open == std::string::npos) break;
        const std::size_t close = xml.find('>', open);
        if (close == std::string::npos) return false;
        std::string tag = xml.substr(open + 1, close - open - 1);
        pos = close + 1;
        if (tag.empty()) return false;
        if (tag.front() == '/') {
            if (stack.empty()) return false;
            const std::string name = tag.substr(1);
            if (stack.back() != name) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        if (self_closing) tag.pop_back();
        std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
        if (name.empty()) return false;
        // attribute quotes must pair up
        std::size_t quotes = 0;
        for (char c : tag) quotes += c == '"';
        if (quotes % 2 != 0) return false;
        if (!self_closing) stack.push_back(name);
    }
    return stack.empty();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("empty report emits a header-only csv") {
    Report r;
    r.experiment = "empty";
    r.columns = {"a", "b"};
    CHECK(report_csv(r) == "a,b\n");
}

TEST_CASE("csv content round-trips byte identically") {
    const Report r = small_report();
    const std::string csv = report_csv(r);

    // parse and re-emit
    std::stringstream in(csv);
    std::string line;
    std::getline(in, line);
    Report parsed;
    parsed.experiment = r.experiment;
    {
        std::stringstream header(line);
        std::string col;
        while (std::getline(header, col, ',')) parsed.columns.push_back(col);
    }
    while (std::getline(in, line)) {
        std::vector<Cell> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used == cell.size()) {
                    cells.push_back(Cell::of(v));
                    continue;
                }
            } catch (const std::exception&) {
            }
            cells.push_back(Cell::of(cell));
        }
        parsed.add_row(std::move(cells));
    }
    CHECK(report_csv(parsed) == csv);
}

TEST_CASE("json mirrors csv plus config") {
    Report r = small_report();
    r.config_echo = {{"alpha", 1.0}};
    const nlohmann::json j = report_json(r);
    CHECK(j.at("columns").size() == 3);
    CHECK(j.at("rows").size() == 3);
    CHECK(j.at("rows")[0][1].get<double>() == 1.5);
    CHECK(j.at("rows")[0][2].get<std::string>() == "a");
    CHECK(j.at("config").at("alpha").get<double>() == 1.0);
}

TEST_CASE("svg output is well-formed xml") {
    Report r = small_report();
    const std::string svg = report_svg(r);
    CHECK(xml_well_formed(svg));
    CHECK(svg.find("<polyline") != std::string::npos);

    // grouping produces one polyline per (metric, group)
    r.svg_group = "label";
    const std::string grouped = report_svg(r);
    CHECK(xml_well_formed(grouped));
    std::size_t polylines = 0, pos = 0;
    while ((pos = grouped.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        pos += 1;
    }
    CHECK(polylines == 2);

    Report empty;
    empty.experiment = "empty";
    empty.columns = {"a"};
    CHECK(xml_well_formed(report_svg(empty)));
}

TEST_CASE("emit_report writes the requested formats") {
    const Report r = small_report();
    const std::string dir = "/tmp/distlab_report_out";
    std::filesystem::remove_all(dir);
    const auto paths = emit_report(
        r, {ReportFormat::csv, ReportFormat::json, ReportFormat::svg}, dir);
    REQUIRE(paths.size() == 3);
    CHECK(read_file(paths[0]) == report_csv(r));
    CHECK(xml_well_formed(read_file(paths[2])));

    // unwritable target: a file where the directory should be
    const std::string blocker = "/tmp/distlab_blocker";
    std::ofstream(blocker) << "x";
    CHECK_THROWS_AS(emit_report(r, {ReportFormat::csv}, blocker + "/sub"), IoError);
}

TEST_CASE("csv writer streams rows incrementally") {
    const std::string path = "/tmp/distlab_stream.csv";
    {
        CsvWriter w(path, {"a", "b"});
        w.write_row({Cell::of(1.0), Cell::of(2.0)});
        // file already contains the first row while the run continues
        CHECK(read_file(path) == "a,b\n1,2\n");
        w.write_row({Cell::of(3.0), Cell::of(4.0)});
    }
    CHECK(read_file(path) == "a,b\n1,2\n3,4\n");
}

TEST_CASE("config reader rejects unknown keys and wrong types") {
    nlohmann::json j = {{"alpha", 1.0}, {"typo_key", true}};
    ConfigReader r(j, "scope");
    r.number("alpha", 0.0);
    CHECK_THROWS_AS(r.finish(), ConfigError);

    nlohmann::json wrong = {{"students", "many"}};
    ConfigReader r2(wrong, "scope");
    CHECK_THROWS_AS(r2.count("students", 3), ConfigError);

    nlohmann::json scalar = 17;
    CHECK_THROWS_AS(ConfigReader(scalar, "scope"), ConfigError);
}

TEST_CASE("number formatting is deterministic") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(1.5) == "1.5");
    CHECK(format_number(1e-9) == "1e-09");
    CHECK(format_number(123456789.123456) == "123456789.123");
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fracrte/error.hpp"
#include "fracrte/io.hpp"

using namespace fracrte;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fracrte_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0, 0.427583576155807}) {
        const auto s = io::format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
    CHECK(io::format_double(0.0) == "0");
    CHECK(io::format_double(1.5) == "1.5");
    CHECK(io::format_double(-INFINITY) == "-inf");
}

TEST_CASE("format_from_log") {
    CHECK(io::format_from_log(-INFINITY) == "0");
    CHECK(io::format_from_log(std::log(1234.5)) == "1.234500000e3");
    CHECK(io::format_from_log(0.0) == "1.000000000e0");
    // values far outside the double range
    CHECK(io::format_from_log(-1000.0 * std::log(10.0)) == "1.000000000e-1000");
    CHECK(io::format_from_log(std::log(2.0) + 800.0 * std::log(10.0)) == "2.000000000e800");
    // 9.9999999999 rounds up into the next decade
    CHECK(io::format_from_log(std::log(9.99999999999)) == "1.000000000e1");
}

TEST_CASE("binary field round trip") {
    const auto dir = scratch_dir("bin");
    Field u(3, 4, 5);
    for (std::size_t i = 0; i < u.values().size(); ++i) u.values()[i] = std::sin(1.0 + i) * 1e-3 * i;
    io::write_field_binary(dir / "u.bin", u);
    CHECK(fs::file_size(dir / "u.bin") == 5 + 3 * 8 + 60 * 8);
    const Field back = io::read_field_binary(dir / "u.bin");
    CHECK(back.nx() == 3);
    CHECK(back.nv() == 4);
    CHECK(back.nt_nodes() == 5);
    for (std::size_t i = 0; i < u.values().size(); ++i) CHECK(back.values()[i] == u.values()[i]);

    {
        std::ofstream bad(dir / "bad.bin", std::ios::binary);
        bad << "NOPE!xxxxxxxxxxxxxxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(io::read_field_binary(dir / "bad.bin"), Error);
    fs::resize_file(dir / "u.bin", 5 + 24 + 10);
    CHECK_THROWS_AS(io::read_field_binary(dir / "u.bin"), Error);
    CHECK_THROWS_AS(io::read_field_binary(dir / "missing.bin"), Error);
}

TEST_CASE("field csv") {
    const auto dir = scratch_dir("csv");
    auto g = build_grid({1.0, 3, 1.0, 2.0, 2, 1.0, 2, VelocityQuadrature::Trapezoid});
    Field u = g.make_field();
    u(2, 3, 1) = 0.25;
    io::write_field_csv(dir / "u.csv", g, u);
    const auto l = lines(dir / "u.csv");
    REQUIRE(l.size() == 1 + 3 * 4 * 3);
    CHECK(l[0] == "x,v,t,value");
    // last x node, last velocity, middle time
    CHECK(l[1 + (2 * 4 + 3) * 3 + 1] == "1,2,0.5,0.25");
    CHECK_THROWS_AS(io::write_field_csv(dir / "w.csv", g, Field(2, 4, 3)), PreconditionError);
}

TEST_CASE("tables and the run log") {
    const auto dir = scratch_dir("table");
    io::write_table_csv(dir / "t.csv", {"a", "b"}, {{"1", "2"}, {"3", "4"}});
    CHECK(io::read_text(dir / "t.csv") == "a,b\n1,2\n3,4\n");
    CHECK_THROWS_AS(io::write_table_csv(dir / "t.csv", {"a", "b"}, {{"1"}}), PreconditionError);

    io::append_run_log(dir / "log.csv", {"k", "v"}, {"x", "1"});
    io::append_run_log(dir / "log.csv", {"k", "v"}, {"y", "2"});
    CHECK(io::read_text(dir / "log.csv") == "k,v\nx,1\ny,2\n");

    std::vector<CarlemanReport> rows(1);
    rows[0].lambda = 2;
    rows[0].s = 10;
    rows[0].log_lhs = std::log(3.0);
    rows[0].log_rhs_interior = std::log(1.5);
    rows[0].log_rhs_boundary = -INFINITY;
    rows[0].log_rhs_trace0 = -2000.0;
    rows[0].c_emp = 2.0;
    io::write_sweep_csv(dir / "s.csv", rows);
    const auto l = lines(dir / "s.csv");
    REQUIRE(l.size() == 2);
    CHECK(l[0] == "lambda,s,lhs,rhs_interior,rhs_boundary,rhs_trace0,c_emp");
    CHECK(l[1].rfind("2,10,3.000000000e0,1.500000000e0,0,", 0) == 0);
    CHECK(l[1].substr(l[1].size() - 2) == ",2");
}

TEST_CASE("fnv1a64") {
    CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(io::fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(io::hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
    CHECK(io::hex64(1) == "0000000000000001");
}

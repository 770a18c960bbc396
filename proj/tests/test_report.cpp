#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "daugs/core.hpp"
#include "daugs/report.hpp"
#include "support.hpp"

using namespace daugs;

TEST_SUITE("report") {
  TEST_CASE("number formatting") {
    CHECK(fmt(0.1) == "0.1");
    CHECK(fmt(1.0 / 3.0) == "0.3333333333");
    CHECK(fmt(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(fmt(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(fmt(std::nan("")) == "nan");
    CHECK(fmt(42) == "42");
    CHECK(fmt(true) == "1");
  }

  TEST_CASE("csv quoting round trip") {
    Csv c;
    c.header = {"a", "b", "c"};
    c.add({"plain", "with,comma", "say \"hi\""});
    c.add({"", "line\nbreak", "x"});
    CHECK(c.str() == "a,b,c\nplain,\"with,comma\",\"say \"\"hi\"\"\"\n,\"line\nbreak\",x\n");
    const Csv back = parse_csv(c.str());
    CHECK(back.header == c.header);
    CHECK(back.rows == c.rows);
    CHECK(back.cell(0, "c") == "say \"hi\"");
    CHECK_THROWS_AS(back.column("missing"), DataError);
  }

  TEST_CASE("csv errors") {
    CHECK_THROWS_AS(parse_csv(""), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), DataError);
    CHECK_THROWS_AS(parse_csv("a\n\"open\n"), DataError);
    CHECK(parse_csv("a,b\r\n1,2\r\n").cell(0, "b") == "2");
    Csv c;
    c.header = {"a"};
    CHECK_THROWS(c.add({"1", "2"}));
  }

  TEST_CASE("csv file round trip") {
    Csv c;
    c.header = {"x"};
    c.add({"C:\\path"});
    const auto dir = test::scratch_dir("csv");
    c.write(dir / "t.csv");
    CHECK(read_csv(dir / "t.csv").rows == c.rows);
  }

  TEST_CASE("parse numbers") {
    CHECK(parse_double("0.25") == 0.25);
    CHECK(std::isinf(parse_double("inf")));
    CHECK_THROWS_AS(parse_double("1.0x"), DataError);
    CHECK(parse_int("-7") == -7);
    CHECK_THROWS_AS(parse_int("3.5"), DataError);
  }

  TEST_CASE("histogram") {
    const Histogram h = histogram({0.0, 0.1, 0.5, 1.0}, 2);
    CHECK(h.edges == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(h.counts == std::vector<int>{2, 2});
    const Histogram same = histogram({0.3, 0.3, 0.3}, 5);
    CHECK(same.counts[0] == 3);
    CHECK_THROWS(histogram({1.0}, 0));
  }

  TEST_CASE("svg output is well formed") {
    PlotSeries s{"a", {0, 1, 2}, {1, 2, 3}, {}};
    const std::string svg = svg_line_plot("t", "x", "y", {s});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
  }

  TEST_CASE("pgm and ppm bytes") {
    const auto dir = test::scratch_dir("img");
    write_pgm8(dir / "a.pgm", 2, 1, {0, 255});
    std::ifstream f(dir / "a.pgm", std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(f)), {});
    CHECK(data == std::string("P5\n2 1\n255\n") + std::string("\0\xff", 2));
    write_ppm(dir / "a.ppm", 1, 1, {Rgb{1, 2, 3}});
    std::ifstream g(dir / "a.ppm", std::ios::binary);
    std::string pdata((std::istreambuf_iterator<char>(g)), {});
    CHECK(pdata == std::string("P6\n1 1\n255\n\x01\x02\x03"));
  }
}

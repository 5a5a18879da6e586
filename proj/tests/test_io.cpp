#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hcace/csv.hpp"
#include "hcace/dataset.hpp"
#include "hcace/errors.hpp"
#include "hcace/iv_inference.hpp"
#include "hcace/rng.hpp"
#include "hcace/sim.hpp"

using namespace hcace;

namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("csv reader handles the RFC edge cases") {
  SUBCASE("plain fields") {
    const CsvTable t = parse("a,b,c\n1,2,3\n4,5,6\n");
    CHECK(t.header == CsvRow{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1] == CsvRow{"4", "5", "6"});
  }
  SUBCASE("quoted commas, quotes, and line breaks") {
    const CsvTable t = parse("name,note\n\"x,y\",\"she said \"\"hi\"\"\"\n\"two\nlines\",plain\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "x,y");
    CHECK(t.rows[0][1] == "she said \"hi\"");
    CHECK(t.rows[1][0] == "two\nlines");
  }
  SUBCASE("crlf records") {
    const CsvTable t = parse("a,b\r\n1,2\r\n3,4\r\n");
    CHECK(t.header == CsvRow{"a", "b"});
    CHECK(t.rows[0] == CsvRow{"1", "2"});
    CHECK(t.rows[1] == CsvRow{"3", "4"});
  }
  SUBCASE("utf-8 byte order mark") {
    const CsvTable t = parse("\xEF\xBB\xBFid,v\n1,2\n");
    CHECK(t.header[0] == "id");
  }
  SUBCASE("blank lines are skipped") {
    const CsvTable t = parse("a,b\n1,2\n\n3,4\n\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1] == CsvRow{"3", "4"});
  }
  SUBCASE("missing trailing newline") {
    const CsvTable t = parse("a,b\n1,2");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0] == CsvRow{"1", "2"});
  }
  SUBCASE("empty trailing field") {
    const CsvTable t = parse("a,b\n1,\n");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0] == CsvRow{"1", ""});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse("a,b\n\"open,2\n"), DataError);
    CHECK_THROWS_AS(parse(""), DataError);
  }
  SUBCASE("column lookup") {
    const CsvTable t = parse("a,b\n1,2\n");
    CHECK(t.column("b") == 1);
    CHECK(t.has_column("a"));
    CHECK_FALSE(t.has_column("z"));
    CHECK_THROWS_AS(t.column("z"), DataError);
  }
}

TEST_CASE("csv writer quotes minimally and round-trips") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("with,comma") == "\"with,comma\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");

  CsvTable t;
  t.header = {"k", "v"};
  t.rows = {{"a,b", "1"}, {"q\"q", "two\nlines"}, {"", "plain"}};
  std::ostringstream out;
  write_csv(out, t);
  const CsvTable back = parse(out.str());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("format_double round-trips doubles exactly") {
  const std::vector<double> values{0.0,       -0.0,     0.1,
                                   1.0 / 3.0, 2.5,      1e300,
                                   5e-324,    -123.456, 0.94557606347986811};
  for (const double v : values) {
    const std::string s = format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
}

TEST_CASE("file writes are atomic against partial output") {
  const std::string path = tmp_path("hcace_io_atomic.csv");
  CsvTable t;
  t.header = {"a"};
  t.rows = {{"1"}};
  write_csv_file(path, t);
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  const CsvTable back = read_csv_file(path);
  CHECK(back.rows == t.rows);
  std::filesystem::remove(path);

  write_text_file(path, "hello\n");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "hello");
  std::filesystem::remove(path);

  CHECK_THROWS_AS(read_csv_file(tmp_path("hcace_io_missing.csv")), DataError);
}

TEST_CASE("schema ingestion encodes covariates") {
  const std::string text =
      "pid,enc,took,out,age,site\n"
      "u1,1,1,2.5,40,north\n"
      "u2,0,0,1.0,,south\n"
      "u3,1,0,0.5,28,north\n"
      "u4,0,0,-1.0,31,\n"
      "u5,1,1,3.5,55,east\n";
  Schema schema;
  schema.id = "pid";
  schema.instrument = "enc";
  schema.treatment = "took";
  schema.response = "out";
  schema.covariates = {"age", "site"};
  schema.categorical = {"site"};
  const Dataset ds = ingest_table(parse(text), schema);

  REQUIRE(ds.units.size() == 5);
  CHECK(ds.rejected_rows == 0);
  CHECK(ds.units[0].id == "u1");
  CHECK(ds.units[0].z == 1);
  CHECK(ds.units[0].d == 1);
  CHECK(ds.units[0].r == 2.5);

  // age, site, then one indicator per column with missing cells.
  CHECK(ds.covariate_names ==
        std::vector<std::string>{"age", "site", "age_missing", "site_missing"});
  CHECK(ds.covariate_kinds[0] == CovariateKind::numeric);
  CHECK(ds.covariate_kinds[1] == CovariateKind::categorical);

  // Missing age on row 2 imputed with the median of {40, 28, 31, 55} = 35.5.
  CHECK(ds.units[1].x[0] == doctest::Approx(35.5));
  CHECK(ds.units[1].x[2] == 1.0);
  CHECK(ds.units[0].x[2] == 0.0);

  // Sorted observed levels {east, north, south} plus the missing level last.
  REQUIRE(ds.levels[1].size() == 4);
  CHECK(ds.levels[1][0] == "east");
  CHECK(ds.levels[1][1] == "north");
  CHECK(ds.levels[1][2] == "south");
  CHECK(ds.units[0].x[1] == 1.0);  // north
  CHECK(ds.units[4].x[1] == 0.0);  // east
  CHECK(ds.units[3].x[1] == 3.0);  // the missing level
  CHECK(ds.units[3].x[3] == 1.0);

  // Indicator totals match the number of empty cells.
  double age_missing = 0.0, site_missing = 0.0;
  for (const Unit& u : ds.units) {
    age_missing += u.x[2];
    site_missing += u.x[3];
  }
  CHECK(age_missing == 1.0);
  CHECK(site_missing == 1.0);
}

TEST_CASE("ingestion without missing cells adds no indicators") {
  const std::string text = "z,d,y,x\n1,1,2.0,5\n0,0,1.0,7\n";
  Schema schema;
  schema.instrument = "z";
  schema.treatment = "d";
  schema.response = "y";
  schema.covariates = {"x"};
  const Dataset ds = ingest_table(parse(text), schema);
  CHECK(ds.covariate_names == std::vector<std::string>{"x"});
  CHECK(ds.units[0].id == "r1");  // row number fallback
}

TEST_CASE("ingestion errors name the offending row") {
  Schema schema;
  schema.instrument = "z";
  schema.treatment = "d";
  schema.response = "y";
  schema.covariates = {"x"};

  // Non-binary instrument.
  const std::string bad_z = "z,d,y,x\n1,1,2.0,5\n2,0,1.0,7\n";
  try {
    ingest_table(parse(bad_z), schema);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("z") != std::string::npos);
    CHECK(what.find("2") != std::string::npos);
  }

  // Missing treatment cell is an error (only responses may be missing).
  CHECK_THROWS_AS(ingest_table(parse("z,d,y,x\n1,,2.0,5\n"), schema), DataError);

  // Ragged row.
  CHECK_THROWS_AS(ingest_table(parse("z,d,y,x\n1,1,2.0\n"), schema), DataError);

  // Missing declared column.
  Schema wrong = schema;
  wrong.covariates = {"nope"};
  CHECK_THROWS_AS(ingest_table(parse("z,d,y,x\n1,1,2.0,5\n"), wrong), DataError);

  // Non-numeric numeric covariate.
  CHECK_THROWS_AS(ingest_table(parse("z,d,y,x\n1,1,2.0,abc\n"), schema), DataError);
}

TEST_CASE("rows without a response are dropped and counted") {
  const std::string text = "z,d,y,x\n1,1,2.0,5\n0,0,,7\n1,0,1.5,3\n";
  Schema schema;
  schema.instrument = "z";
  schema.treatment = "d";
  schema.response = "y";
  schema.covariates = {"x"};
  const Dataset ds = ingest_table(parse(text), schema);
  CHECK(ds.units.size() == 2);
  CHECK(ds.rejected_rows == 1);
}

TEST_CASE("pairs files round-trip bit for bit") {
  ScenarioConfig c = scenario_by_name("complex");
  c.n_pairs = 120;
  const SimDataset data = generate_dataset(c, 9);

  const std::string path = tmp_path("hcace_io_pairs.csv");
  write_pairs_csv(path, data.pairs, data.covariate_names);
  const PairsFile back = read_pairs_csv(path);
  std::filesystem::remove(path);

  CHECK(back.covariate_names == data.covariate_names);
  REQUIRE(back.pairs.size() == data.pairs.size());
  for (std::size_t i = 0; i < back.pairs.size(); ++i) {
    const MatchedPair& a = data.pairs[i];
    const MatchedPair& b = back.pairs[i];
    CHECK(b.index == a.index);
    CHECK(b.treated.id == a.treated.id);
    CHECK(b.treated.z == 1);
    CHECK(b.control.z == 0);
    CHECK(b.treated.d == a.treated.d);
    CHECK(b.treated.r == a.treated.r);  // 17 significant digits: exact
    CHECK(b.control.r == a.control.r);
    CHECK(b.pair_covariates == a.pair_covariates);
  }

  // The identical bits give identical downstream inference.
  const IvTestResult t0 = pair_statistics(data.pairs, 0.0);
  const IvTestResult t1 = pair_statistics(back.pairs, 0.0);
  CHECK(t0.T == t1.T);
  CHECK(t0.S == t1.S);
  CHECK(t0.z == t1.z);
}

TEST_CASE("pairs table layout") {
  ScenarioConfig c = scenario_by_name("no");
  c.n_pairs = 3;
  c.n_covariates = 2;
  const SimDataset data = generate_dataset(c, 0);
  const CsvTable t = pairs_to_table(data.pairs, data.covariate_names);
  CHECK(t.header.front() == "pair_id");
  CHECK(t.header[1] == "t_id");
  CHECK(t.has_column("t_z"));
  CHECK(t.has_column("c_r"));
  CHECK(t.has_column("pc_x1"));
  CHECK(t.has_column("pc_x2"));
  CHECK(t.header.size() == 1 + 2 * (4 + 2) + 2);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "1");

  // t_z/c_z are fixed by construction and validated on read.
  CsvTable broken = t;
  broken.rows[0][t.column("t_z")] = "0";
  CHECK_THROWS_AS(pairs_from_table(broken), DataError);

  CsvTable truncated = t;
  truncated.header.pop_back();
  for (auto& row : truncated.rows) row.pop_back();
  CHECK_THROWS_AS(pairs_from_table(truncated), DataError);
}

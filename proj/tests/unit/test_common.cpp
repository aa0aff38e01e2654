#include <doctest.h>

#include "rulewise/common/atomic_file.hpp"
#include "rulewise/common/dataset.hpp"
#include "rulewise/common/domain.hpp"
#include "rulewise/common/error.hpp"
#include "rulewise/common/hashing.hpp"
#include "rulewise/common/text_format.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace rulewise;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "rulewise_unit_common";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("tensor grid enumerates the first axis fastest") {
  Box box{{{0.0, 1.0}, {-1.0, 1.0}}};
  auto g = tensor_grid(box, {3, 2});
  REQUIRE(g.cols() == 6);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == 0.5);
  CHECK(g(0, 2) == 1.0);
  CHECK(g(1, 2) == -1.0);
  CHECK(g(1, 3) == 1.0);
  CHECK(g(0, 5) == 1.0);
}

TEST_CASE("linspace hits both endpoints exactly") {
  auto v = linspace(0.0, 0.3, 4);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == 0.3);
  CHECK(linspace(2.0, 4.0, 1)[0] == 3.0);
}

TEST_CASE("box containment with tolerance") {
  Box box{{{0.0, 1.0}}};
  Eigen::VectorXd p(1);
  p << 1.0 + 1e-13;
  CHECK(box.contains(p));
  p << 1.01;
  CHECK_FALSE(box.contains(p));
}

TEST_CASE("double formatting round-trips bit-exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK_THROWS(parse_double("1.0x"));
  CHECK_THROWS(parse_double(""));
}

TEST_CASE("sha256 matches the published test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 3);
  Eigen::MatrixXd b = Eigen::MatrixXd::Ones(3, 2);
  CHECK(matrix_digest(a) != matrix_digest(b));
  CHECK(matrix_digest(a) == matrix_digest(Eigen::MatrixXd::Ones(2, 3)));
}

TEST_CASE("atomic write then read") {
  auto p = scratch("nested/dir/file.txt");
  write_file_atomic(p, "hello\n");
  CHECK(read_file(p) == "hello\n");
  write_file_atomic(p, "again");
  CHECK(read_file(p) == "again");
}

TEST_CASE("csv round trip preserves values") {
  Dataset d;
  d.input_names = {"x", "t"};
  d.output_names = {"u"};
  d.inputs.resize(2, 3);
  d.inputs << 0.1, 0.2, 1.0 / 3.0, 0.0, 0.5, 1.0;
  d.clean_outputs.resize(1, 3);
  d.clean_outputs << -0.7, std::sin(1.0), 1e-17;
  d.outputs = d.clean_outputs;
  auto p = scratch("round.csv");
  write_csv(d, p);
  auto back = read_csv(p, {"x", "t"}, {"u"});
  CHECK(back.inputs == d.inputs);
  CHECK(back.clean_outputs == d.clean_outputs);
  CHECK(back.source == DataSource::Ingested);
}

TEST_CASE("csv reader rejects bad files") {
  auto p = scratch("bad.csv");
  {
    std::ofstream f(p);
    f << "x,t,v\n0,0,1\n";
  }
  CHECK_THROWS_AS(read_csv(p, {"x", "t"}, {"u"}), DataError);
  {
    std::ofstream f(p);
    f << "x,t,u\n0,0\n";
  }
  CHECK_THROWS_AS(read_csv(p, {"x", "t"}, {"u"}), DataError);
  {
    std::ofstream f(p);
    f << "x,t,u\n";
  }
  CHECK_THROWS_AS(read_csv(p, {"x", "t"}, {"u"}), DataError);
  {
    std::ofstream f(p);
    f << "x,t,u\n0,abc,1\n";
  }
  CHECK_THROWS_AS(read_csv(p, {"x", "t"}, {"u"}), DataError);
}

TEST_CASE("dataset select and validate") {
  Dataset d;
  d.input_names = {"a"};
  d.output_names = {"c"};
  d.inputs = Eigen::MatrixXd::Zero(1, 4);
  d.inputs << 0, 1, 2, 3;
  d.outputs = d.inputs * 2.0;
  d.clean_outputs = d.outputs;
  auto s = d.select({3, 1});
  CHECK(s.size() == 2);
  CHECK(s.inputs(0, 0) == 3.0);
  CHECK(s.outputs(0, 1) == 2.0);
  d.outputs.resize(1, 2);
  CHECK_THROWS(d.validate());
}

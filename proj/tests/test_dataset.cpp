// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rsgd/dataset.hpp"
#include "support.hpp"

using namespace rsgd;
using rsgd::test::error_code_of;
using rsgd::test::error_message_of;

namespace {

const char* kSmall =
    "a,b,y\n"
    "1,10,3\n"
    "2,20,5\n"
    "4,60,9\n";

double sample_sd(const Vector& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / double(v.size() - 1));
}

const std::vector<std::string> kWineHeader = {
    "fixed acidity", "volatile acidity",     "citric acid", "residual sugar", "chlorides",
    "free sulfur dioxide", "total sulfur dioxide", "density", "pH", "sulphates",
    "alcohol", "quality"};

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("z-scoring a 3x2 table gives zero means and unit standard deviations") {
  PreprocessFlags flags;
  flags.z_score = true;
  const auto data = parse_csv(kSmall, {"a", "b"}, "y", flags);
  REQUIRE(data.features.rows() == 3);
  REQUIRE(data.features.cols() == 2);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(data.features.col(j).mean()) <= 1e-9);
    CHECK(std::abs(sample_sd(data.features.col(j)) - 1.0) <= 1e-9);
  }
  CHECK(data.applied.z_score);
  CHECK(data.responses == (Vector(3) << 3, 5, 9).finished());
  CHECK(data.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(data.response_name == "y");
}

TEST_CASE("row normalization gives unit rows and rescales responses") {
  PreprocessFlags flags;
  flags.row_normalize = true;
  const auto data = parse_csv(kSmall, {"a", "b"}, "y", flags);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(data.features.row(i).norm() - 1.0) <= 1e-9);
  CHECK(data.responses[0] == doctest::Approx(3.0 / std::sqrt(101.0)).epsilon(1e-14));
}

TEST_CASE("z-scoring is idempotent") {
  PreprocessFlags flags;
  flags.z_score = true;
  auto data = parse_csv(kSmall, {}, "y", flags);
  const Matrix before = data.features;
  z_score_columns(data);
  CHECK((data.features - before).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("empty feature list selects every column except the response") {
  const auto data = parse_csv(kSmall, {}, "b", {});
  CHECK(data.feature_names == std::vector<std::string>{"a", "y"});
  CHECK(data.responses == (Vector(3) << 10, 20, 60).finished());
}

TEST_CASE("centering and response centering") {
  PreprocessFlags flags;
  flags.center = true;
  flags.center_response = true;
  const auto data = parse_csv(kSmall, {"a", "b"}, "y", flags);
  CHECK(std::abs(data.features.col(0).mean()) <= 1e-12);
  CHECK(std::abs(data.responses.mean()) <= 1e-12);
  CHECK(data.features(0, 1) == doctest::Approx(10.0 - 30.0).epsilon(1e-14));
}

TEST_CASE("constant columns cannot be z-scored") {
  PreprocessFlags flags;
  flags.z_score = true;
  CHECK(error_code_of([&] { parse_csv("a,y\n1,2\n1,3\n", {"a"}, "y", flags); }) ==
        ErrorCode::InvalidParameter);
}

TEST_CASE("missing columns and non-numeric cells are reported with their location") {
  CHECK(error_code_of([] { parse_csv(kSmall, {"a", "zz"}, "y", {}); }) == ErrorCode::MissingColumn);
  CHECK(error_code_of([] { parse_csv(kSmall, {"a"}, "nope", {}); }) == ErrorCode::MissingColumn);
  const std::string bad = "a,b,y\n1,2,3\n4,oops,6\n";
  CHECK(error_code_of([&] { parse_csv(bad, {"a", "b"}, "y", {}); }) == ErrorCode::NonNumericCell);
  const std::string msg = error_message_of([&] { parse_csv(bad, {"a", "b"}, "y", {}, ',', "bad.csv"); });
  CHECK(msg.find("bad.csv") != std::string::npos);
  CHECK(msg.find("oops") != std::string::npos);
  CHECK(msg.find("'b'") != std::string::npos);
  CHECK(msg.find("3") != std::string::npos);
  CHECK(error_code_of([] { parse_csv("a,y\n1,2,3\n", {"a"}, "y", {}); }) == ErrorCode::Parse);
  CHECK(error_code_of([] { parse_csv("a,y\n", {"a"}, "y", {}); }) == ErrorCode::EmptyDataset);
  CHECK(error_code_of([] { load_csv("/nonexistent/file.csv", {}, "y", {}); }) == ErrorCode::Io);
}

TEST_CASE("column names match after normalization") {
  CHECK(normalize_column_name("Fixed Acidity") == "fixedacidity");
  CHECK(normalize_column_name("fixedAcidity") == "fixedacidity");
  CHECK(normalize_column_name("pH") == "ph");
}

TEST_CASE("wine-style semicolon file with quoted headers loads every row") {
  std::ostringstream text;
  for (std::size_t j = 0; j < kWineHeader.size(); ++j)
    text << (j ? ";" : "") << '"' << kWineHeader[j] << '"';
  text << "\n";
  Rng rng = make_rng(1, Substream::Measurement);
  std::uniform_real_distribution<double> unif(0.1, 10.0);
  for (int i = 0; i < 1599; ++i) {
    for (std::size_t j = 0; j < kWineHeader.size(); ++j) text << (j ? ";" : "") << unif(rng);
    text << "\n";
  }
  const auto path = std::filesystem::temp_directory_path() / "rsgd_wine_schema.csv";
  std::ofstream(path) << text.str();
  const std::vector<std::string> features = {"fixedAcidity", "volatileAcidity", "citricAcid",
                                             "residualSugar", "chlorides", "freeSulfurDioxide",
                                             "density", "pH", "sulphates", "alcohol"};
  PreprocessFlags flags;
  flags.z_score = true;
  const auto data = load_csv(path.string(), features, "quality", flags, ';');
  CHECK(data.features.rows() == 1599);
  CHECK(data.features.cols() == 10);
  CHECK(data.responses.size() == 1599);
  std::filesystem::remove(path);
}

TEST_CASE("clean loss") {
  Matrix A(2, 2);
  A << 1, 2, 3, 4;
  const Vector x = (Vector(2) << 1.0, -1.0).finished();
  const Vector y = A * x;
  CHECK(evaluate_clean_loss(x, A, y) == 0.0);
  CHECK(evaluate_clean_loss(Vector::Zero(2), A, y) == doctest::Approx(y.squaredNorm() / 2.0).epsilon(1e-15));

  Rng rng = make_rng(2, Substream::Measurement);
  std::normal_distribution<double> normal;
  Matrix B(5, 3);
  Vector z(5), w(3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) B(i, j) = normal(rng);
  for (int i = 0; i < 5; ++i) z[i] = normal(rng);
  for (int j = 0; j < 3; ++j) w[j] = normal(rng);
  double lin = 0.0, rel = 0.0;
  for (int i = 0; i < 5; ++i) {
    double p = 0.0;
    for (int j = 0; j < 3; ++j) p += B(i, j) * w[j];
    lin += (p - z[i]) * (p - z[i]);
    const double r = p > 0.0 ? p : 0.0;
    rel += (r - z[i]) * (r - z[i]);
  }
  CHECK(std::abs(evaluate_clean_loss(w, B, z) - lin / 5.0) <= 1e-12 * lin / 5.0);
  CHECK(std::abs(evaluate_clean_loss(w, B, z, true) - rel / 5.0) <= 1e-12 * rel / 5.0);
  CHECK(error_code_of([&] { evaluate_clean_loss(Vector::Zero(4), B, z); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("least squares on an exactly determined system") {
  Matrix A(2, 2);
  A << 2, 1, 1, 3;
  const Vector x = (Vector(2) << 0.5, -1.5).finished();
  const Vector sol = least_squares_baseline(A, A * x);
  CHECK((sol - x).norm() <= 1e-14);
}

TEST_CASE("least squares recovers a planted signal and leaves an orthogonal residual") {
  Rng rng = make_rng(3, Substream::Measurement);
  std::normal_distribution<double> normal;
  Matrix A(200, 8);
  Vector x(8), noise(200);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 8; ++j) A(i, j) = normal(rng);
  for (int j = 0; j < 8; ++j) x[j] = normal(rng);
  for (int i = 0; i < 200; ++i) noise[i] = normal(rng);
  const Vector clean = least_squares_baseline(A, A * x);
  CHECK((clean - x).norm() <= 1e-8 * x.norm());

  const Vector y = A * x + noise;
  const Vector sol = least_squares_baseline(A, y);
  const Vector residual = y - A * sol;
  CHECK((A.transpose() * residual).cwiseAbs().maxCoeff() <= 1e-8 * A.norm() * y.norm());
}

TEST_CASE("least squares rejects rank-deficient systems") {
  Matrix A(4, 2);
  A << 1, 2, 2, 4, 3, 6, 4, 8;
  CHECK(error_code_of([&] { least_squares_baseline(A, Vector::Ones(4)); }) == ErrorCode::SingularSystem);
  CHECK(error_code_of([] { least_squares_baseline(Matrix::Ones(1, 3), Vector::Ones(1)); }) ==
        ErrorCode::SingularSystem);
}

}  // TEST_SUITE

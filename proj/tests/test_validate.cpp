#include "catch_amalgamated.hpp"
#include "solvflow/validate.hpp"

using namespace solvflow;

TEST_CASE("default validation passes every check") {
  ValidateOptions opts;
  opts.scale = 0.5;
  const ValidateReport rep = run_validation(opts);
  REQUIRE(rep.checks.size() == validation_check_names().size());
  for (const auto& c : rep.checks) {
    INFO(c.name << ": worst " << c.worst << " tol " << c.tolerance << " (" << c.detail << ")");
    CHECK(c.passed);
    CHECK(c.trials > 0);
  }
  CHECK(rep.all_passed());
}

TEST_CASE("report order follows the registry") {
  const ValidateReport rep = run_validation({.seed = 1, .scale = 0.05});
  const auto names = validation_check_names();
  for (std::size_t i = 0; i < names.size(); ++i) CHECK(rep.checks[i].name == names[i]);
}

TEST_CASE("a sign-flipped gradient field is caught") {
  ValidateOptions opts;
  opts.scale = 0.1;
  opts.gradient_field = [](const Mat& a) { return -1.0 * gradient_rhs(a); };
  const ValidateReport rep = run_validation(opts);
  CHECK_FALSE(rep.all_passed());
  for (const auto& c : rep.checks) {
    if (c.name == "flow.gradient_finite_difference") CHECK_FALSE(c.passed);
  }
}

TEST_CASE("reports are identical across runs and thread counts") {
  ValidateOptions one{.seed = 99, .scale = 0.2, .threads = 1};
  ValidateOptions many{.seed = 99, .scale = 0.2, .threads = 4};
  const std::string a = to_json(run_validation(one)).dump();
  const std::string b = to_json(run_validation(many)).dump();
  const std::string c = to_json(run_validation(one)).dump();
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("invalid options are rejected") {
  CHECK_THROWS(run_validation({.scale = 0}));
  ValidateOptions empty;
  empty.gradient_field = nullptr;
  CHECK_THROWS(run_validation(empty));
}

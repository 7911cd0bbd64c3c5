#include <gtest/gtest.h>

#include <set>

#include "json.hpp"
#include "qsage/error.hpp"
#include "qsage/registry.hpp"
#include "test_support.hpp"

using namespace qsage;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

json one(const std::string &descriptor, json params) {
  return {{"id", "x"}, {"descriptor", descriptor}, {"params", std::move(params)}};
}

} // namespace

TEST(Families, FiveRegisteredWithSolvers) {
  std::set<std::string> names;
  for (const auto &f : families()) {
    names.insert(f.descriptor);
    EXPECT_FALSE(f.solver.empty());
    EXPECT_FALSE(f.expected_output_label.empty());
    EXPECT_FALSE(f.convention.empty());
  }
  EXPECT_EQ(names, (std::set<std::string>{"condensedmatter/hubbard", "condensedmatter/tfim", "optimization/maxcut",
                                          "gauge/schwinger", "chem/h2"}));
  EXPECT_EQ(find_family("condensedmatter/hubbard")->default_timeout_s, 3000.0);
  for (const char *d : {"condensedmatter/tfim", "optimization/maxcut", "gauge/schwinger", "chem/h2"})
    EXPECT_EQ(find_family(d)->default_timeout_s, 300.0) << d;
  EXPECT_EQ(find_family("nope/none"), nullptr);
}

TEST(Tolerance, DefaultsAndBand) {
  const Tolerance t;
  EXPECT_EQ(t.absolute, 1e-2);
  EXPECT_EQ(t.relative, 1e-3);
  EXPECT_EQ(t.band(1.0), 1e-2);
  EXPECT_EQ(t.band(-100.0), 1e-3 * 100.0);
}

TEST(Bundled, TwentyValidInstancesFourPerFamily) {
  const auto &all = test::bundled();
  ASSERT_EQ(all.size(), 20u);
  std::map<std::string, int> per;
  for (const auto &in : all) {
    EXPECT_TRUE(validate(in).empty()) << in.id;
    ++per[in.descriptor];
  }
  for (const auto &[d, n] : per) EXPECT_EQ(n, 4) << d;
}

TEST(Bundled, RoundTripAndStableHashes) {
  const auto &all = test::bundled();
  const auto again = parse_instances(serialize_instances(all));
  ASSERT_EQ(again.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(again[i], all[i]) << all[i].id;
    EXPECT_EQ(content_hash(again[i]), content_hash(all[i]));
  }
  std::set<std::string> hashes;
  for (const auto &in : all) hashes.insert(content_hash(in));
  EXPECT_EQ(hashes.size(), all.size());
}

TEST(Instance, DefaultsFilled) {
  const auto h = instance_from_json(one("condensedmatter/hubbard", {{"L", 3}, {"t", 1}, {"U", 4}}));
  EXPECT_EQ(h.integer("n_up"), 2u);
  EXPECT_EQ(h.integer("n_down"), 1u);
  EXPECT_EQ(h.timeout_s, 3000.0);
  const auto s = instance_from_json(one("gauge/schwinger", {{"L", 4}, {"h", 1}, {"g", 1}}));
  EXPECT_EQ(s.number("m"), 0.5);
  EXPECT_EQ(s.number("T"), 1.0);
  EXPECT_EQ(s.text("initial_state"), "vacuum");
  EXPECT_EQ(s.text("observable"), "particle_number");
  const auto m = instance_from_json(one("chem/h2", {{"BL", 0.735}}));
  EXPECT_TRUE(std::filesystem::exists(m.text("integrals")));
}

TEST(Instance, OverridesTimeoutAndTolerance) {
  json j = one("condensedmatter/tfim", {{"L", 2}, {"J", 1}, {"h", 1}});
  j["timeout_s"] = 12.5;
  j["tolerance"] = {{"absolute", 0.1}};
  const auto in = instance_from_json(j);
  EXPECT_EQ(in.timeout_s, 12.5);
  EXPECT_EQ(in.tolerance.absolute, 0.1);
  EXPECT_EQ(in.tolerance.relative, 1e-3);
}

TEST(Instance, SchemaViolations) {
  EXPECT_EQ(code_of([] { instance_from_json(one("quantum/unknown", json::object())); }), ErrorCode::UnknownFamily);
  EXPECT_EQ(code_of([] { instance_from_json(one("condensedmatter/tfim", {{"L", 2}, {"J", 1}})); }),
            ErrorCode::Validation);
  EXPECT_EQ(code_of([] { instance_from_json(one("condensedmatter/tfim", {{"L", 2.5}, {"J", 1}, {"h", 1}})); }),
            ErrorCode::Validation);
  EXPECT_EQ(code_of([] { instance_from_json(one("condensedmatter/tfim", {{"L", "two"}, {"J", 1}, {"h", 1}})); }),
            ErrorCode::Validation);
  EXPECT_EQ(code_of([] { instance_from_json(one("gauge/schwinger", {{"L", 5}, {"h", 1}, {"g", 1}})); }),
            ErrorCode::Validation);
  EXPECT_EQ(code_of([] {
              instance_from_json(one("optimization/maxcut", {{"N", 3}, {"E", json::array({json::array({0, 3, 1})})}}));
            }),
            ErrorCode::Validation);
  EXPECT_EQ(code_of([] { instance_from_json(one("chem/h2", {{"BL", 0.9}})); }), ErrorCode::Validation);
  EXPECT_EQ(code_of([] { instance_from_json(json::array()); }), ErrorCode::Parse);
}

TEST(Instance, ValidationMessageListsEveryViolation) {
  try {
    instance_from_json(one("condensedmatter/tfim", {{"L", 0}}));
    FAIL();
  } catch (const Error &e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'J'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'h'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'L'"), std::string::npos) << msg;
  }
}

TEST(InstanceFile, DuplicateIdsAndFormat) {
  const json dup{{"format", "qsage-instances/1"},
                 {"instances", {one("condensedmatter/tfim", {{"L", 2}, {"J", 1}, {"h", 1}}),
                                one("condensedmatter/tfim", {{"L", 3}, {"J", 1}, {"h", 1}})}}};
  EXPECT_EQ(code_of([&] { parse_instances(dup.dump()); }), ErrorCode::Validation);
  EXPECT_EQ(code_of([] { parse_instances("{\"format\": \"other/2\", \"instances\": []}"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_instances("not json"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { load_instances("/nonexistent/instances.json"); }), ErrorCode::Io);
}

TEST(Accessors, TypedLookups) {
  const auto &in = test::bundled("maxcut-triangle");
  EXPECT_EQ(in.integer("N"), 3u);
  EXPECT_EQ(in.edges("E").size(), 3u);
  EXPECT_THROW(in.text("N"), Error);
  EXPECT_THROW(in.number("missing"), Error);
  EXPECT_EQ(format_param(in.params.at("E")), "[(0, 1, 1), (1, 2, 1), (0, 2, 1)]");
}

#include "hpcadvisor/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace hpcadvisor;

namespace {

const AppInput kCells{"openfoam", "cells", 1e6};

BenchmarkRecord rec(const std::string& sku, int n, double t, Provenance p = Provenance::measured,
                    std::string ts = "2024-05-01T10:00:00Z") {
  std::optional<std::string> method;
  if (p == Provenance::predicted) method = "cross-vm";
  return {{sku, n, 120, kCells}, t, p, method, std::move(ts)};
}

std::string lines(const std::vector<BenchmarkRecord>& rs) {
  std::string out;
  for (const auto& r : rs) out += to_json(r).dump() + "\n";
  return out;
}

}  // namespace

// =============================================================================
// Catalog
// =============================================================================

TEST(Catalog, LoadsHcHbv2Hbv3) {
  std::istringstream in(
      R"({"name":"HC","cores_per_vm":44,"price_per_hour":3.168,"family":"HC"}
{"name":"HBv2","cores_per_vm":120,"price_per_hour":3.6,"family":"HB"}

{"name":"HBv3","cores_per_vm":120,"price_per_hour":3.6,"family":"HB","region":"ignored"}
)");
  auto cat = parse_catalog(in);
  ASSERT_EQ(cat.size(), 3u);
  EXPECT_EQ(cat.at("HC").cores_per_vm, 44);
  EXPECT_EQ(cat.at("HBv2").cores_per_vm, 120);
  EXPECT_EQ(cat.at("HBv3").cores_per_vm, 120);
  EXPECT_DOUBLE_EQ(cat.at("HC").price_per_hour, 3.168);
}

TEST(Catalog, EmptyFileIsEmptyCatalog) {
  std::istringstream in("");
  EXPECT_TRUE(parse_catalog(in).empty());
}

TEST(Catalog, DuplicateNameRejected) {
  std::istringstream in(R"({"name":"HBv3","cores_per_vm":120,"price_per_hour":3.6}
{"name":"HBv3","cores_per_vm":120,"price_per_hour":3.6}
)");
  try {
    parse_catalog(in, "cat.jsonl");
    FAIL() << "expected duplicate-name error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("cat.jsonl:2"), std::string::npos);
  }
}

TEST(Catalog, NonPositiveValuesRejected) {
  std::istringstream zero_price(R"({"name":"X","cores_per_vm":4,"price_per_hour":0})");
  EXPECT_THROW(parse_catalog(zero_price), ValidationError);
  std::istringstream zero_cores(R"({"name":"X","cores_per_vm":0,"price_per_hour":1})");
  EXPECT_THROW(parse_catalog(zero_cores), ValidationError);
}

TEST(Catalog, ParseErrorCarriesLineNumber) {
  std::istringstream in("{\"name\":\"HC\",\"cores_per_vm\":44,\"price_per_hour\":3}\n{not json\n");
  try {
    parse_catalog(in, "cat.jsonl");
    FAIL() << "expected parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Catalog, MissingFileIsNotFound) {
  EXPECT_THROW(load_catalog("/nonexistent/catalog.jsonl"), NotFoundError);
}

// =============================================================================
// Ingestion
// =============================================================================

TEST(Ingest, ThreeValidRecords) {
  std::istringstream in(lines({rec("HC", 1, 100), rec("HC", 2, 60), rec("HC", 4, 35)}));
  auto res = ingest_records(in, Dataset{});
  EXPECT_EQ(res.dataset.size(), 3u);
  EXPECT_EQ(res.accepted, 3u);
  EXPECT_TRUE(res.rejected.empty());
}

TEST(Ingest, LatestDuplicateWins) {
  std::istringstream in(lines({rec("HC", 1, 100), rec("HC", 1, 90, Provenance::measured, "2024-05-02T10:00:00Z")}));
  auto res = ingest_records(in, Dataset{});
  ASSERT_EQ(res.dataset.size(), 1u);
  EXPECT_DOUBLE_EQ(res.dataset.records()[0].exec_time_s, 90.0);
}

TEST(Ingest, MeasuredAndPredictedCoexist) {
  std::istringstream in(lines({rec("HC", 1, 100), rec("HC", 1, 98, Provenance::predicted)}));
  EXPECT_EQ(ingest_records(in, Dataset{}).dataset.size(), 2u);
}

TEST(Ingest, ZeroTimeRejectedOthersKept) {
  std::istringstream in(lines({rec("HC", 1, 100), rec("HC", 2, 0), rec("HC", 4, 35)}));
  auto res = ingest_records(in, Dataset{});
  EXPECT_EQ(res.dataset.size(), 2u);
  ASSERT_EQ(res.rejected.size(), 1u);
  EXPECT_EQ(res.rejected[0].index, 1u);
  EXPECT_EQ(res.rejected[0].line, 2u);
}

TEST(Ingest, MethodRequiredExactlyForPredicted) {
  auto r = rec("HC", 1, 100);
  r.method = "cross-vm";
  auto p = rec("HC", 2, 50, Provenance::predicted);
  p.method.reset();
  std::istringstream in(lines({r, p, rec("HC", 4, 30)}));
  auto res = ingest_records(in, Dataset{});
  EXPECT_EQ(res.dataset.size(), 1u);
  EXPECT_EQ(res.rejected.size(), 2u);
}

TEST(Ingest, MissingFieldAndBadTimestampRejected) {
  std::istringstream in(
      R"({"app_name":"openfoam","param_name":"cells","param_value":1e6,"sku_name":"HC","n_vms":1,"procs_per_vm":44,"provenance":"measured","timestamp":"2024-05-01T10:00:00Z"}
{"app_name":"openfoam","param_name":"cells","param_value":1e6,"sku_name":"HC","n_vms":1,"procs_per_vm":44,"exec_time_s":5,"provenance":"measured","timestamp":"yesterday"}
)");
  auto res = ingest_records(in, Dataset{});
  EXPECT_TRUE(res.dataset.empty());
  EXPECT_EQ(res.rejected.size(), 2u);
}

TEST(Ingest, MalformedLineIsParseError) {
  std::istringstream in(lines({rec("HC", 1, 100)}) + "{\"broken\": \n");
  EXPECT_THROW(ingest_records(in, Dataset{}), ParseError);
}

TEST(Ingest, IdempotentAndOrderIndependent) {
  std::vector<BenchmarkRecord> rs;
  for (int n : {1, 2, 4, 8, 16})
    for (const char* sku : {"HC", "HBv2", "HBv3"}) rs.push_back(rec(sku, n, 1000.0 / n + sku[1]));
  std::istringstream once(lines(rs));
  auto a = ingest_records(once, Dataset{}).dataset;
  std::istringstream again(lines(rs));
  auto b = ingest_records(again, a).dataset;
  EXPECT_EQ(a, b);

  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(rs.begin(), rs.end(), rng);
    std::istringstream shuffled(lines(rs));
    EXPECT_EQ(ingest_records(shuffled, Dataset{}).dataset, a);
  }
}

TEST(Ingest, SerializeRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(0.5, 5000.0);
  std::uniform_int_distribution<int> n(1, 64);
  Dataset d;
  for (int i = 0; i < 200; ++i) {
    auto p = static_cast<Provenance>(i % 3);
    auto r = rec(i % 2 ? "HBv3" : "HC", n(rng), t(rng), p);
    r.scenario.input.value = 1e6 * (1 + i % 3) / 3.0;  // non-terminating decimals
    d.upsert(r);
  }
  std::istringstream in(serialize(d));
  auto back = ingest_records(in, Dataset{});
  EXPECT_TRUE(back.rejected.empty());
  EXPECT_EQ(back.dataset, d);
  EXPECT_EQ(serialize(back.dataset), serialize(d));
}

// =============================================================================
// Curve extraction
// =============================================================================

TEST(ExtractCurve, SortsByNodeCount) {
  Dataset d;
  d.upsert(rec("HC", 1, 100));
  d.upsert(rec("HC", 4, 35));
  d.upsert(rec("HC", 2, 60));
  auto c = extract_curve(d, "HC", kCells, 120);
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.points[0], (CurvePoint{1, 100}));
  EXPECT_EQ(c.points[1], (CurvePoint{2, 60}));
  EXPECT_EQ(c.points[2], (CurvePoint{4, 35}));
}

TEST(ExtractCurve, FilterExcludesPredicted) {
  Dataset d;
  d.upsert(rec("HC", 1, 100));
  d.upsert(rec("HC", 2, 55, Provenance::predicted));
  auto c = extract_curve(d, "HC", kCells, 120, ProvenanceFilter::only(Provenance::measured));
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0].n_vms, 1);
}

TEST(ExtractCurve, ObservedPreferredOverPredictedAtSameNode) {
  Dataset d;
  d.upsert(rec("HC", 1, 100));
  d.upsert(rec("HC", 1, 97, Provenance::predicted));
  d.upsert(rec("HC", 2, 55, Provenance::predicted));
  auto c = extract_curve(d, "HC", kCells, 120, ProvenanceFilter::all());
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_DOUBLE_EQ(c.points[0].exec_time_s, 100.0);
  EXPECT_NO_THROW(validate(c));
}

TEST(ExtractCurve, NoMatchIsError) {
  Dataset d;
  d.upsert(rec("HC", 1, 100));
  EXPECT_THROW(extract_curve(d, "HBv3", kCells, 120), NotFoundError);
  EXPECT_THROW(extract_curve(d, "HC", {"openfoam", "cells", 2e6}, 120), NotFoundError);
}

TEST(ExtractCurve, AlwaysSatisfiesCurveInvariants) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> n(1, 16), prov(0, 2);
  std::uniform_real_distribution<double> t(1.0, 1e4);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset d;
    for (int i = 0; i < 20; ++i) d.upsert(rec("HC", n(rng), t(rng), static_cast<Provenance>(prov(rng))));
    for (auto filter : {ProvenanceFilter::all(), ProvenanceFilter::observed()}) {
      ScalingCurve c;
      try {
        c = extract_curve(d, "HC", kCells, 120, filter);
      } catch (const NotFoundError&) {
        continue;
      }
      EXPECT_NO_THROW(validate(c));
    }
  }
}

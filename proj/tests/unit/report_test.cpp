#include <doctest.h>

#include <charconv>
#include <sstream>

#include "mislab/report.hpp"
#include "oracles.hpp"

using mislab::cplx;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

mislab::DensityProfile small_profile() {
  const auto local = oracle::quad_family().shifted(-2.0);
  mislab::DiagnosticsConfig cfg;
  cfg.k0 = 0.5;
  return mislab::density_profile(local, cfg, 1, 100, 4);
}

}  // namespace

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(mislab::hex64(mislab::fnv1a64("")) == "cbf29ce484222325");
  CHECK(mislab::hex64(mislab::fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(mislab::hex64(mislab::fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("format_double round-trips") {
  oracle::Gen gen(17);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(gen.range(-1.0, 1.0), gen.integer(-300, 300));
    const std::string s = mislab::format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(mislab::format_double(0.5) == "0.5");
}

TEST_CASE("sphere points serialize infinity") {
  CHECK(mislab::to_json(mislab::SpherePoint::infinity()) == "inf");
  const auto j = mislab::to_json(mislab::SpherePoint::from_complex(cplx(1.0, -2.0)));
  CHECK(j.dump() == mislab::to_json(cplx(1.0, -2.0)).dump());
}

TEST_CASE("manifest hash ignores wall clock, output dir and family path") {
  mislab::RunManifest m;
  m.command = "scan";
  m.family_path = "a.json";
  m.seed = 7;
  m.output_dir = "/tmp/x";
  m.wall_clock = "2026-01-01T00:00:00Z";
  const std::string h = m.hash();
  auto m2 = m;
  m2.output_dir = "/tmp/y";
  m2.wall_clock = "2027-01-01T00:00:00Z";
  m2.family_path = "b.json";
  CHECK(m2.hash() == h);
  auto m3 = m;
  m3.seed = 8;
  CHECK(m3.hash() != h);
  auto m4 = m;
  m4.config.delta = 0.4;
  CHECK(m4.hash() != h);
  auto m5 = m;
  m5.extra["family_sha"] = "00";
  CHECK(m5.hash() != h);
  CHECK(h.size() == 16);
  const auto j = m.to_json();
  CHECK(j.at("seed") == 7);
  CHECK(j.at("wall_clock") == m.wall_clock);
}

TEST_CASE("scan CSV and JSONL structure") {
  const auto prof = small_profile();
  const auto csv = lines_of(mislab::scan_csv(prof, "abcd"));
  REQUIRE(csv.size() == prof.disks.size() + 1);
  CHECK(csv[0] ==
        "level,index,center_re,center_im,radius,samples,n_escape,return_time,frac_return,frac_sink,frac_candidate,"
        "frac_indeterminate,f_hat,ci_lo,ci_hi,manifest");
  for (std::size_t i = 1; i < csv.size(); ++i) {
    CHECK(std::count(csv[i].begin(), csv[i].end(), ',') == 15);
    CHECK(csv[i].substr(csv[i].size() - 5) == ",abcd");
  }

  const auto jl = lines_of(mislab::scan_jsonl(prof, "abcd"));
  REQUIRE(jl.size() == prof.disks.size() + prof.levels.size() + 1);
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const auto j = nlohmann::json::parse(jl[i]);
    CHECK(j.at("manifest") == "abcd");
    const std::string rec = j.at("record");
    if (i < prof.disks.size()) {
      CHECK(rec == "disk");
      CHECK(j.at("samples") == 100);
    } else if (i < prof.disks.size() + prof.levels.size()) {
      CHECK(rec == "level");
    } else {
      CHECK(rec == "profile");
    }
  }
}

TEST_CASE("verdict JSON carries the decision fields") {
  const auto v = mislab::classify_map(oracle::quad_map(-0.5), 0.5, 0, 200, 4);
  const auto j = mislab::to_json(v);
  CHECK(j.at("record") == "verdict");
  CHECK(j.contains("reason"));
  CHECK(j.contains("incomplete_periods"));
}

#include "mislab/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace mislab {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

template <class T>
ojson optional_json(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

}  // namespace

ojson to_json(cplx z) { return ojson::array({z.real(), z.imag()}); }

ojson to_json(const SpherePoint& p) {
  if (p.is_infinity()) return "inf";
  return to_json(p.to_complex());
}

ojson to_json(const DiagnosticsConfig& c) {
  ojson j;
  j["delta"] = c.delta;
  j["delta_prime"] = c.delta_prime;
  j["delta_dprime"] = c.delta_dprime;
  j["S"] = c.S;
  j["S1"] = c.S1;
  j["N_tilde"] = c.N_tilde;
  j["k0"] = c.k0;
  j["gamma_floor"] = c.gamma_floor;
  j["growth_horizon"] = c.growth_horizon;
  j["margin_factor"] = c.margin_factor;
  ojson tol = ojson::object();
  for (const auto& [k, v] : c.tolerances) tol[k] = v;
  j["tolerances"] = tol;
  ojson asym = ojson::object();
  for (const auto& [k, v] : c.asymptotic_targets) asym[k] = v;
  j["asymptotic_targets"] = asym;
  return j;
}

ojson to_json(const DyadicDisk& d) {
  ojson j;
  j["level"] = d.level;
  j["index"] = d.index;
  j["center"] = to_json(d.center);
  j["radius"] = d.radius;
  return j;
}

ojson to_json(const ScanReport& r) {
  ojson j;
  j["record"] = "disk";
  j["disk"] = to_json(r.disk);
  j["samples"] = r.samples;
  j["rng_seed"] = r.rng_seed;
  j["n_escape"] = optional_json(r.n_escape);
  j["return_time"] = optional_json(r.return_time);
  j["counts"] = {{"return", r.count_return},
                 {"sink", r.count_sink},
                 {"sink_super_attracting", r.count_sink_super_attracting},
                 {"candidate", r.count_candidate},
                 {"indeterminate", r.count_indeterminate}};
  j["frac_return"] = r.frac_return;
  j["frac_sink"] = r.frac_sink;
  j["frac_candidate"] = r.frac_candidate;
  j["frac_indeterminate"] = r.frac_indeterminate;
  j["f_hat"] = r.f_hat;
  j["candidate_ci95"] = {r.candidate_ci.lo, r.candidate_ci.hi};
  j["escalation"] = {{"checked", r.escalated}, {"sinks", r.escalation_sinks}};
  j["growth"] = {{"stop", to_string(r.growth_stop)}, {"argument_distortion", r.argument_distortion}};
  j["budgets"] = {{"k", r.k},
                  {"horizon", r.horizon},
                  {"cycle_period_max", r.cycle_period_max},
                  {"delta", r.delta},
                  {"N_tilde", r.N_tilde}};
  return j;
}

ojson to_json(const LevelSummary& s) {
  ojson j;
  j["record"] = "level";
  j["level"] = s.level;
  j["disks"] = s.disks;
  j["samples"] = s.samples;
  j["candidates"] = s.candidates;
  j["min_frac_candidate"] = s.min_frac_candidate;
  j["max_frac_candidate"] = s.max_frac_candidate;
  j["inf_deficit"] = s.inf_deficit;
  j["pooled_candidate_ci95"] = {s.pooled_ci.lo, s.pooled_ci.hi};
  return j;
}

ojson to_json(const ClassificationVerdict& v) {
  ojson j;
  j["record"] = "verdict";
  j["verdict"] = to_string(v.verdict);
  j["reason"] = to_string(v.reason);
  ojson ev = ojson::object();
  if (v.evidence.orbit_index >= 0) ev["orbit_index"] = v.evidence.orbit_index;
  if (v.evidence.critical) ev["critical"] = to_json(*v.evidence.critical);
  if (v.evidence.point) ev["point"] = to_json(*v.evidence.point);
  if (v.evidence.orbit_index >= 0 && v.evidence.point) ev["distance"] = v.evidence.distance;
  if (v.evidence.cycle) {
    ojson cyc = ojson::array();
    for (const auto& p : v.evidence.cycle->cycle) cyc.push_back(to_json(p));
    ev["cycle"] = cyc;
    ev["period"] = v.evidence.cycle->period;
    ev["multiplier"] = to_json(v.evidence.cycle->multiplier);
    ev["kind"] = to_string(v.evidence.cycle->kind);
  }
  if (!v.evidence.note.empty()) ev["note"] = v.evidence.note;
  j["evidence"] = ev;
  j["gap"] = number_or_null(v.gap);
  j["cycles_found"] = v.cycles_found;
  j["incomplete_periods"] = v.incomplete_periods;
  j["parameters"] = {{"delta", v.delta},
                     {"k", v.k},
                     {"n_max", v.n_max},
                     {"p_max", v.p_max},
                     {"margin_factor", v.margin_factor}};
  return j;
}

ojson to_json(const DiskGrowthRecord& r) {
  ojson j;
  j["record"] = "growth";
  j["disk"] = to_json(r.disk);
  j["n_escape"] = optional_json(r.n_escape);
  j["stop"] = to_string(r.stop);
  j["diam_sequence"] = r.diam_sequence;
  j["planar_diam_sequence"] = r.planar_diam_sequence;
  ojson tube = ojson::array();
  for (const bool b : r.inside_tube) tube.push_back(b);
  j["inside_tube"] = tube;
  j["argument_distortion"] = r.argument_distortion;
  ojson comp = ojson::array();
  for (const double q : r.comparability) comp.push_back(number_or_null(q));
  j["comparability"] = comp;
  j["comparability_range"] = {r.comparability_min, r.comparability_max};
  j["order_k"] = r.order_k;
  j["k0_condition_ok"] = r.k0_condition_ok;
  j["growth_step"] = r.growth_step;
  j["growth_step_exact"] = r.growth_step_exact;
  j["M0_estimate"] = r.M0;
  return j;
}

std::string RunManifest::hash() const {
  ojson j = to_json();
  j.erase("wall_clock");
  j.erase("output_dir");
  j.erase("family");
  return hex64(fnv1a64(j.dump()));
}

ojson RunManifest::to_json() const {
  ojson j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["family"] = family_path;
  j["config"] = mislab::to_json(config);
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["tool_version"] = tool_version;
  j["wall_clock"] = wall_clock;
  j["flags"] = extra;
  return j;
}

std::string scan_jsonl(const DensityProfile& prof, const std::string& manifest_hash) {
  std::string out;
  for (const auto& d : prof.disks) {
    ojson j = to_json(d);
    j["manifest"] = manifest_hash;
    out += j.dump();
    out += '\n';
  }
  for (const auto& s : prof.levels) {
    ojson j = to_json(s);
    j["manifest"] = manifest_hash;
    out += j.dump();
    out += '\n';
  }
  ojson j;
  j["record"] = "profile";
  j["inf_deficit"] = prof.inf_deficit;
  j["manifest"] = manifest_hash;
  out += j.dump();
  out += '\n';
  return out;
}

std::string scan_csv(const DensityProfile& prof, const std::string& manifest_hash) {
  std::string out =
      "level,index,center_re,center_im,radius,samples,n_escape,return_time,frac_return,frac_sink,"
      "frac_candidate,frac_indeterminate,f_hat,ci_lo,ci_hi,manifest\n";
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& d : prof.disks) {
    out += std::to_string(d.disk.level) + ',' + std::to_string(d.disk.index) + ',' +
           format_double(d.disk.center.real()) + ',' + format_double(d.disk.center.imag()) + ',' +
           format_double(d.disk.radius) + ',' + std::to_string(d.samples) + ',' + opt(d.n_escape) + ',' +
           opt(d.return_time) + ',' + format_double(d.frac_return) + ',' + format_double(d.frac_sink) + ',' +
           format_double(d.frac_candidate) + ',' + format_double(d.frac_indeterminate) + ',' +
           format_double(d.f_hat) + ',' + format_double(d.candidate_ci.lo) + ',' +
           format_double(d.candidate_ci.hi) + ',' + manifest_hash + '\n';
  }
  return out;
}

}  // namespace mislab

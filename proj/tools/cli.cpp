#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mislab/classifier.hpp"
#include "mislab/density.hpp"
#include "mislab/distortion.hpp"
#include "mislab/error.hpp"
#include "mislab/family.hpp"
#include "mislab/parallel.hpp"
#include "mislab/report.hpp"
#include "mislab/rng.hpp"
#include "mislab/transfer.hpp"

namespace mislab::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kMaxPixels = 1e8;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string family_path;
  std::string at = "0";
  std::string offset;
  std::string lemma;
  DiagnosticsConfig config;
  int k = 0;
  int levels = 2;
  int samples = 1000;
  std::uint64_t seed = 1;
  int horizon = -1;
  int pmax = -1;
  int threads = 1;
  int width = 256;
  int height = 256;
  double span = 0.05;
  double radius = 0.0;
  std::string out;
};

std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Accepts "re", "re,im", "re+imi", "imi" and "i".
cplx parse_complex(const std::string& text) {
  std::string s;
  for (const char c : text)
    if (c != ' ') s += c;
  const auto comma = s.find(',');
  if (comma != std::string::npos) {
    const auto re = parse_real(std::string_view(s).substr(0, comma));
    const auto im = parse_real(std::string_view(s).substr(comma + 1));
    if (re && im) return {*re, *im};
  } else if (!s.empty() && s.back() == 'i') {
    const std::string body = s.substr(0, s.size() - 1);
    // Split at the last sign that does not belong to an exponent.
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
      if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
        split = i;
        break;
      }
    }
    auto imag_of = [](std::string_view t) -> std::optional<double> {
      if (t.empty() || t == "+") return 1.0;
      if (t == "-") return -1.0;
      return parse_real(t);
    };
    if (split == std::string::npos) {
      if (const auto im = imag_of(body)) return {0.0, *im};
    } else {
      const auto re = parse_real(std::string_view(body).substr(0, split));
      const auto im = imag_of(std::string_view(body).substr(split));
      if (re && im) return {*re, *im};
    }
  } else if (const auto re = parse_real(s)) {
    return {*re, 0.0};
  }
  throw UsageError("cannot parse complex number '" + text + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read family file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open '" + path.string() + "' for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw IoFailure("write to '" + path.string() + "' failed");
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoFailure("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Loaded {
  ParamFamily family;
  std::string content_hash;
};

Loaded load_family(const Options& o) {
  if (o.family_path.empty()) throw UsageError("--family is required");
  const std::string text = read_file(o.family_path);
  try {
    return {ParamFamily::from_json(text), hex64(fnv1a64(text))};
  } catch (const Error& e) {
    throw UsageError("family file '" + o.family_path + "': " + e.message());
  }
}

int resolved_threads(int flag) {
  if (const char* env = std::getenv("MISLAB_THREADS")) {
    int v = 0;
    const std::string_view s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && v > 0) return v;
    throw UsageError("MISLAB_THREADS must be a positive integer");
  }
  if (flag < 1) throw UsageError("--threads must be positive");
  return flag;
}

RunManifest make_manifest(const std::string& command, const Options& o, const Loaded& fam, ojson flags) {
  RunManifest m;
  m.command = command;
  m.family_path = o.family_path;
  m.config = o.config;
  m.seed = o.seed;
  m.output_dir = o.out;
  m.wall_clock = utc_now();
  flags["family_sha"] = fam.content_hash;
  m.extra = std::move(flags);
  return m;
}

void echo_manifest(std::ostream& out, const RunManifest& m, const std::string& hash) {
  ojson j;
  j["record"] = "manifest";
  j["manifest"] = hash;
  j["run"] = m.to_json();
  out << j.dump() << '\n';
}

void write_manifest(const fs::path& dir, const RunManifest& m, const std::string& hash) {
  ojson j = m.to_json();
  j["hash"] = hash;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

int cmd_classify(const Options& o, std::ostream& out) {
  const Loaded fam = load_family(o);
  const cplx a = parse_complex(o.at);
  const int n_max = o.horizon > 0 ? o.horizon : 200;
  const int p_max = o.pmax > 0 ? o.pmax : 8;
  const RationalMap map = fam.family.map_at(a);
  ClassifyOptions copts;
  copts.margin_factor = o.config.margin_factor;
  const ClassificationVerdict v = classify_map(map, o.config.delta, o.k, n_max, p_max, copts);

  const RunManifest m =
      make_manifest("classify", o, fam, {{"at", to_json(a)}, {"k", o.k}, {"horizon", n_max}, {"pmax", p_max}});
  const std::string hash = m.hash();
  echo_manifest(out, m, hash);
  ojson rec = to_json(v);
  rec["at"] = to_json(a);
  rec["manifest"] = hash;
  const std::string line = rec.dump() + "\n";
  out << line;
  if (!o.out.empty()) {
    const fs::path dir = prepare_out_dir(o.out);
    write_file(dir / "classify.jsonl", line);
    write_manifest(dir, m, hash);
  }
  switch (v.verdict) {
    case Verdict::misiurewicz_candidate: return kOk;
    case Verdict::rejected: return kRejected;
    case Verdict::indeterminate: return kIndeterminate;
  }
  return kInternal;
}

ScanOptions scan_options(const Options& o, int default_horizon) {
  ScanOptions s;
  s.k = o.k;
  s.horizon = o.horizon > 0 ? o.horizon : default_horizon;
  s.cycle_period_max = o.pmax > 0 ? o.pmax : 16;
  s.threads = resolved_threads(o.threads);
  return s;
}

int cmd_scan(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out is required for scan");
  if (o.samples < 100) throw UsageError("--samples must be at least 100");
  if (o.levels < 1) throw UsageError("--levels must be at least 1");
  const Loaded fam = load_family(o);
  const cplx at = parse_complex(o.at);
  const double radius = o.radius > 0.0 ? o.radius : fam.family.base_radius();
  const ParamFamily local = fam.family.shifted(at, radius, fam.family.marked_critical());
  const ScanOptions sopts = scan_options(o, 1000);
  const fs::path dir = prepare_out_dir(o.out);
  const DensityProfile prof = density_profile(local, o.config, o.levels, o.samples, o.seed, sopts);

  const RunManifest m = make_manifest("scan", o, fam,
                                      {{"at", to_json(at)},
                                       {"radius", radius},
                                       {"k", sopts.k},
                                       {"levels", o.levels},
                                       {"samples", o.samples},
                                       {"horizon", sopts.horizon},
                                       {"pmax", sopts.cycle_period_max}});
  const std::string hash = m.hash();
  echo_manifest(out, m, hash);
  write_file(dir / "scan.csv", scan_csv(prof, hash));
  write_file(dir / "scan.jsonl", scan_jsonl(prof, hash));
  write_manifest(dir, m, hash);
  for (const auto& s : prof.levels) {
    ojson j = to_json(s);
    j["manifest"] = hash;
    out << j.dump() << '\n';
  }
  return kOk;
}

struct Rgb {
  unsigned char r, g, b;
};

constexpr Rgb kCandidate{255, 255, 255};
constexpr Rgb kReturn{40, 90, 200};
constexpr Rgb kSink{30, 160, 60};
constexpr Rgb kSuperAttracting{0, 0, 0};
constexpr Rgb kIndeterminate{220, 40, 40};

int cmd_render(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out is required for render");
  if (o.width < 1 || o.height < 1) throw UsageError("--width and --height must be positive");
  if (static_cast<double>(o.width) * static_cast<double>(o.height) > kMaxPixels)
    throw UsageError("grid larger than 1e8 pixels");
  if (!(o.span > 0.0)) throw UsageError("--span must be positive");
  const Loaded fam = load_family(o);
  const cplx at = parse_complex(o.at);
  const ParamFamily local = fam.family.shifted(at);
  ScanOptions sopts = scan_options(o, 1000);
  sopts.escalation_samples = 0;
  const fs::path dir = prepare_out_dir(o.out);

  const std::size_t w = static_cast<std::size_t>(o.width), h = static_cast<std::size_t>(o.height);
  std::vector<Rgb> pixels(w * h);
  parallel_for(w * h, sopts.threads, [&](std::size_t idx) {
    const std::size_t i = idx % w, j = idx / w;
    const double x = (2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(w) - 1.0) * o.span;
    const double y = (1.0 - 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(h)) * o.span;
    Rgb c = kIndeterminate;
    try {
      const SampleResult r = classify_sample(local, cplx{x, y}, o.config, sopts);
      switch (r.outcome) {
        case SampleOutcome::candidate: c = kCandidate; break;
        case SampleOutcome::returned: c = kReturn; break;
        case SampleOutcome::sink: c = r.super_attracting_capture ? kSuperAttracting : kSink; break;
        case SampleOutcome::indeterminate: c = kIndeterminate; break;
      }
    } catch (const Error&) {
    }
    pixels[idx] = c;
  });

  const RunManifest m = make_manifest("render", o, fam,
                                      {{"at", to_json(at)},
                                       {"span", o.span},
                                       {"width", o.width},
                                       {"height", o.height},
                                       {"k", sopts.k},
                                       {"horizon", sopts.horizon},
                                       {"pmax", sopts.cycle_period_max}});
  const std::string hash = m.hash();
  echo_manifest(out, m, hash);

  std::string ppm = "P6\n# manifest " + hash + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t header = ppm.size();
  ppm.resize(header + 3 * w * h);
  long counts[5] = {0, 0, 0, 0, 0};
  auto same = [](Rgb a, Rgb b) { return a.r == b.r && a.g == b.g && a.b == b.b; };
  const Rgb palette[5] = {kCandidate, kReturn, kSink, kSuperAttracting, kIndeterminate};
  for (std::size_t p = 0; p < w * h; ++p) {
    ppm[header + 3 * p] = static_cast<char>(pixels[p].r);
    ppm[header + 3 * p + 1] = static_cast<char>(pixels[p].g);
    ppm[header + 3 * p + 2] = static_cast<char>(pixels[p].b);
    for (int c = 0; c < 5; ++c)
      if (same(pixels[p], palette[c])) ++counts[c];
  }
  std::ostringstream legend;
  legend << "mislab render legend\n"
         << "manifest " << hash << "\n"
         << "grid " << w << "x" << h << " center " << format_double(at.real()) << "," << format_double(at.imag())
         << " half-width " << format_double(o.span) << "\n"
         << "row 0 is the top edge (largest imaginary part)\n";
  const char* names[5] = {"candidate", "return", "sink", "sink (super-attracting capture)", "indeterminate"};
  for (int c = 0; c < 5; ++c)
    legend << static_cast<int>(palette[c].r) << " " << static_cast<int>(palette[c].g) << " "
           << static_cast<int>(palette[c].b) << "  " << names[c] << "  " << counts[c] << "\n";

  write_file(dir / "render.ppm", ppm);
  write_file(dir / "render.legend.txt", legend.str());
  write_manifest(dir, m, hash);
  return kOk;
}

// ---------------------------------------------------------------------------

struct DiagnosticSink {
  std::string hash;
  std::string lines;
  bool all_pass = true;

  void emit(const std::string& lemma, ojson fixture, double measured, std::optional<double> target,
            std::optional<double> asymptotic, bool pass, ojson extra = ojson::object()) {
    ojson j;
    j["record"] = "diagnostic";
    j["lemma"] = lemma;
    j["fixture"] = std::move(fixture);
    j["measured"] = std::isfinite(measured) ? ojson(measured) : ojson(nullptr);
    j["target"] = target ? ojson(*target) : ojson(nullptr);
    j["asymptotic_target"] = asymptotic ? ojson(*asymptotic) : ojson(nullptr);
    j["pass"] = pass;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    j["manifest"] = hash;
    lines += j.dump() + "\n";
    all_pass = all_pass && pass;
  }
};

cplx default_offset(const Options& o, double fallback) {
  return o.offset.empty() ? cplx{fallback, 0.0} : parse_complex(o.offset);
}

// Repelling fixed point of largest multiplier modulus.
SpherePoint strongest_fixed_point(const RationalMap& map) {
  const PeriodicSearch s = find_periodic_orbits(map, 1);
  const PeriodicOrbitRecord* best = nullptr;
  for (const auto& orb : s.orbits)
    if (!best || std::abs(orb.multiplier) > std::abs(best->multiplier)) best = &orb;
  if (!best) throw Error(ErrorKind::RootFindingDivergence, "no fixed point found");
  return best->cycle.front();
}

void diag_prod_dist(const Options& o, DiagnosticSink& sink) {
  const int count = o.samples;
  for (int s = 0; s < count; ++s) {
    SplitMix64 rng = SplitMix64::stream(o.seed, 0, static_cast<std::uint64_t>(s));
    const int len = 1 + static_cast<int>(rng.uniform() * 20.0);
    const double budget = 3.0 * rng.uniform();
    std::vector<cplx> u(static_cast<std::size_t>(len));
    double total = 0.0;
    for (auto& x : u) {
      const double r = rng.uniform(), th = 2.0 * M_PI * rng.uniform();
      x = std::polar(r, th);
      total += r;
    }
    if (total > 0.0)
      for (auto& x : u) x *= budget / total;
    const ProductBound b = product_distortion_bound(u);
    sink.emit("prod-dist", {{"index", s}, {"length", len}, {"sum_abs", budget}}, b.lhs, b.rhs, std::nullopt,
              b.lhs <= b.rhs);
  }
}

void diag_smallep(const Options& o, const Loaded& fam, DiagnosticSink& sink) {
  const cplx a = parse_complex(o.at);
  const RationalMap map = fam.family.map_at(a);
  const SpherePoint w = strongest_fixed_point(map);
  const int n = o.horizon > 0 ? o.horizon : 10;
  const cplx eps = default_offset(o, 1e-8);
  const Chart ch = w.chart();
  for (int halving = 0; halving < 3; ++halving) {
    const cplx e = eps / std::pow(2.0, halving);
    const SpherePoint z = SpherePoint::from_homogeneous(ch == Chart::standard ? w.value() + e : cplx{1.0, 0.0},
                                                        ch == Chart::standard ? cplx{1.0, 0.0} : w.value() + e, ch);
    const LinearizationError le = linearization_error(map, z, w, n, o.config.delta_prime);
    sink.emit("smallep",
              {{"at", to_json(a)}, {"w", to_json(w)}, {"offset", to_json(e)}, {"n", n}},
              le.max_separation, o.config.delta_prime, std::nullopt, !le.separation_exceeded,
              {{"linearization_error", le.error}});
  }
}

void diag_distortion1(const Options& o, const Loaded& fam, DiagnosticSink& sink) {
  const cplx at = parse_complex(o.at);
  const ParamFamily local = fam.family.shifted(at);
  const cplx t = default_offset(o, 1e-7);
  const int horizon = o.horizon > 0 ? o.horizon : 64;
  // Largest n for which both orbits stay in the tube.
  int n_used = 0;
  ParameterDistortion best{};
  for (int n = 1; n <= horizon; ++n) {
    const ParameterDistortion pd = parameter_distortion_ratio(local, t, -t, n, o.config.delta_prime);
    if (!pd.tube_a || !pd.tube_b) break;
    n_used = n;
    best = pd;
  }
  const double tol = o.config.tolerance("argument_distortion");
  const double asym = o.config.asymptotic_targets.at("argument_distortion");
  sink.emit("distortion1", {{"at", to_json(at)}, {"a", to_json(t)}, {"b", to_json(-t)}, {"n", n_used}},
            best.ratio, tol, asym, n_used > 0 && best.ratio <= tol,
            {{"tube_a", best.tube_a}, {"tube_b", best.tube_b}});
}

void diag_distortion23(const Options& o, const Loaded& fam, DiagnosticSink& sink, bool global) {
  const cplx at = parse_complex(o.at);
  const ParamFamily local = fam.family.shifted(at);
  const RationalMap map = local.map_at(0.0);
  const SpherePoint fixed = strongest_fixed_point(map);
  if (fixed.is_infinity()) throw Error(ErrorKind::InvalidArgument, "fixture needs a finite repelling fixed point");
  const cplx w = fixed.to_complex();
  const cplx t = default_offset(o, 1e-8);
  const int n = std::min(o.horizon > 0 ? o.horizon : 5, o.config.N_tilde);
  const cplx z = w + cplx{global ? 1e-3 : 1e-5, 0.0};
  const ojson fixture = {{"at", to_json(at)}, {"a", to_json(t)}, {"b", to_json(0.0)},
                         {"z", to_json(z)},   {"w", to_json(w)}, {"n", n}};
  if (!global) {
    const PairDistortion pd = extended_distortion_ratio(local, t, 0.0, z, w, n, o.config.S1, o.config.delta);
    // |prod(1 + u) - 1| <= exp(sum |u|) - 1 with u the relative derivative errors.
    const double bound = std::expm1(pd.relative_derivative_sum);
    const bool clean = pd.proximity_violation < 0 && pd.avoidance_violation < 0;
    sink.emit("distortion2", fixture, pd.ratio, bound, std::nullopt, clean && pd.ratio <= bound * (1 + 1e-12),
              {{"proximity_violation", pd.proximity_violation},
               {"avoidance_violation", pd.avoidance_violation},
               {"separation_sum", pd.separation_sum},
               {"measured_constant",
                pd.separation_sum > 0.0 ? pd.relative_derivative_sum / pd.separation_sum : 0.0}});
  } else {
    const PairDistortion pd = global_distortion_ratio(local, t, 0.0, z, w, n, o.config.delta);
    sink.emit("distortion3", fixture, pd.ratio, std::nullopt, std::nullopt,
              std::isfinite(pd.ratio) && pd.avoidance_violation < 0,
              {{"avoidance_violation", pd.avoidance_violation}});
  }
}

void diag_initdist(const Options& o, const Loaded& fam, DiagnosticSink& sink) {
  const cplx at = parse_complex(o.at);
  const ParamFamily local = fam.family.shifted(at);
  const cplx t0 = default_offset(o, 1e-5);
  DyadicDisk disk{t0, o.config.k0 * std::abs(t0), 0, 0};
  DiagnosticsConfig cfg = o.config;
  if (o.horizon > 0) cfg.growth_horizon = o.horizon;
  const DiskGrowthRecord rec = disk_growth_trace(local, disk, cfg);
  ojson growth = to_json(rec);
  growth["manifest"] = sink.hash;
  sink.lines += growth.dump() + "\n";
  const ojson fixture = {{"at", to_json(at)}, {"center", to_json(t0)}, {"radius", disk.radius}};
  const bool reached = rec.stop == GrowthStop::reached_scale;
  sink.emit("initdist.diameter", fixture, rec.diam_sequence.empty() ? 0.0 : rec.diam_sequence.back(), cfg.S,
            std::nullopt, reached, {{"stop", to_string(rec.stop)}});
  const double tol = cfg.tolerance("argument_distortion");
  sink.emit("initdist.argument_distortion", fixture, rec.argument_distortion, tol,
            cfg.asymptotic_targets.at("argument_distortion"), rec.argument_distortion <= tol);
  const double lo = cfg.tolerance("comparability_low"), hi = cfg.tolerance("comparability_high");
  sink.emit("initdist.comparability_min", fixture, rec.comparability_min, lo, std::nullopt,
            rec.comparability_min >= lo);
  sink.emit("initdist.comparability_max", fixture, rec.comparability_max, hi, std::nullopt,
            rec.comparability_max <= hi);
}

void diag_q_stability(const Options& o, const Loaded& fam, DiagnosticSink& sink) {
  const cplx at = parse_complex(o.at);
  const ParamFamily local = fam.family.shifted(at);
  const cplx t = default_offset(o, 1e-4);
  const int n = o.horizon > 0 ? o.horizon : 64;
  const QStability q = q_stability_check(local, t, o.config.delta_dprime, n, o.config.delta);
  const double tol = o.config.tolerance("q_drift");
  sink.emit("q-stability", {{"at", to_json(at)}, {"a", to_json(t)}, {"n", n}}, q.max_rel_drift, tol,
            o.config.asymptotic_targets.at("q_drift"), q.N >= 0 && q.max_rel_drift <= tol,
            {{"N", q.N}, {"return_index", q.return_index}, {"last_index", q.last_index}});
}

void diag_transversality(const Options& o, const Loaded& fam, DiagnosticSink& sink) {
  const cplx at = parse_complex(o.at);
  const ParamFamily local = fam.family.shifted(at);
  const TransversalityFit fit = transversality_probe(local, {1e-3, 3e-4, 1e-4, 3e-5}, 8);
  sink.emit("transversality", {{"at", to_json(at)}}, fit.fit_error, 0.2, std::nullopt, fit.fit_error <= 0.2,
            {{"order_k", fit.k}, {"K1", to_json(fit.K1)}, {"slope", fit.slope}});
}

const std::vector<std::string> kLemmas = {"prod-dist",   "smallep", "distortion1",  "distortion2",
                                          "distortion3", "initdist", "q-stability", "transversality"};

int cmd_diagnose(const Options& o, std::ostream& out) {
  if (std::find(kLemmas.begin(), kLemmas.end(), o.lemma) == kLemmas.end())
    throw UsageError("unknown lemma selector '" + o.lemma + "'");
  const Loaded fam = load_family(o);
  const RunManifest m = make_manifest("diagnose", o, fam,
                                      {{"lemma", o.lemma},
                                       {"at", o.at},
                                       {"offset", o.offset},
                                       {"samples", o.samples},
                                       {"horizon", o.horizon}});
  DiagnosticSink sink;
  sink.hash = m.hash();
  echo_manifest(out, m, sink.hash);
  if (o.lemma == "prod-dist") diag_prod_dist(o, sink);
  else if (o.lemma == "smallep") diag_smallep(o, fam, sink);
  else if (o.lemma == "distortion1") diag_distortion1(o, fam, sink);
  else if (o.lemma == "distortion2") diag_distortion23(o, fam, sink, false);
  else if (o.lemma == "distortion3") diag_distortion23(o, fam, sink, true);
  else if (o.lemma == "initdist") diag_initdist(o, fam, sink);
  else if (o.lemma == "q-stability") diag_q_stability(o, fam, sink);
  else diag_transversality(o, fam, sink);
  out << sink.lines;
  if (!o.out.empty()) {
    const fs::path dir = prepare_out_dir(o.out);
    write_file(dir / "diagnose.jsonl", sink.lines);
    write_manifest(dir, m, sink.hash);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_orbit(const Options& o, std::ostream& out) {
  const Loaded fam = load_family(o);
  const cplx a = parse_complex(o.at);
  const RationalMap map = fam.family.map_at(a);
  const TrackedCritical c = track_critical_point(fam.family, a);
  const int n = o.horizon > 0 ? o.horizon : 20;
  const OrbitTrace trace = iterate_orbit(map, c.point, n);
  const RunManifest m = make_manifest("orbit", o, fam, {{"at", to_json(a)}, {"horizon", n}});
  const std::string hash = m.hash();
  echo_manifest(out, m, hash);
  const auto crit = critical_points(map).non_super_attracting();
  for (std::size_t j = 0; j < trace.points.size(); ++j) {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& cp : crit) gap = std::min(gap, chordal_distance(trace.points[j], cp));
    ojson rec = {{"record", "orbit"},
                 {"n", j},
                 {"point", to_json(trace.points[j])},
                 {"critical_distance", std::isfinite(gap) ? ojson(gap) : ojson(nullptr)},
                 {"manifest", hash}};
    out << rec.dump() << '\n';
  }
  return kOk;
}

ojson to_json_x(const xcplx& z) {
  return ojson::array({static_cast<double>(z.real()), static_cast<double>(z.imag())});
}

int cmd_transfer(const Options& o, std::ostream& out) {
  const Loaded fam = load_family(o);
  const cplx a = parse_complex(o.at);
  const int n = o.horizon > 0 ? o.horizon : 15;
  const TransferTrace tr = transfer_recursion(fam.family, a, n);
  const RunManifest m = make_manifest("transfer", o, fam, {{"at", to_json(a)}, {"horizon", n}});
  const std::string hash = m.hash();
  echo_manifest(out, m, hash);
  for (const auto& s : tr.states) {
    ojson rec = {{"record", "transfer"}, {"n", s.n},         {"xi", to_json(s.xi)}, {"dz", to_json_x(s.dz)},
                 {"da", to_json_x(s.da)}, {"q", to_json_x(s.q)}, {"manifest", hash}};
    out << rec.dump() << '\n';
  }
  if (tr.collision_index >= 0) {
    ojson rec = {{"record", "collision"}, {"n", tr.collision_index}, {"manifest", hash}};
    out << rec.dump() << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

void add_family(CLI::App* sub, Options& o) {
  sub->add_option("--family", o.family_path, "family file (JSON, schema mislab.family/1)");
  sub->add_option("--at", o.at, "parameter value: re, re,im or re+imi")->capture_default_str();
}

void add_config(CLI::App* sub, Options& o) {
  DiagnosticsConfig& c = o.config;
  sub->add_option("--delta", c.delta, "critical neighborhood radius (chordal)")->capture_default_str();
  sub->add_option("--delta-prime", c.delta_prime, "postcritical tube radius")->capture_default_str();
  sub->add_option("--delta-dprime", c.delta_dprime, "separation that starts the transfer-ratio window")
      ->capture_default_str();
  sub->add_option("--scale-S", c.S, "target disk diameter")->capture_default_str();
  sub->add_option("--scale-S1", c.S1, "pair proximity scale")->capture_default_str();
  sub->add_option("--n-tilde", c.N_tilde, "return window after growth")->capture_default_str();
  sub->add_option("--k0", c.k0, "dyadic disk radius factor")->capture_default_str();
  sub->add_option("--margin", c.margin_factor, "scale applied to delta in the avoidance test")
      ->capture_default_str();
  sub->add_option("--k", o.k, "first postcritical index tested")->capture_default_str();
}

void add_budget(CLI::App* sub, Options& o) {
  sub->add_option("--horizon", o.horizon, "orbit length budget (command default when omitted)");
  sub->add_option("--pmax", o.pmax, "largest cycle period searched (command default when omitted)");
}

void add_threads(CLI::App* sub, Options& o) {
  sub->add_option("--threads", o.threads, "worker count (MISLAB_THREADS overrides)")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"mislab: Misiurewicz-map diagnostics for families of rational maps", "mislab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CLI::App* classify = app.add_subcommand("classify", "classify the map at one parameter");
  add_family(classify, o);
  add_config(classify, o);
  add_budget(classify, o);
  classify->add_option("--out", o.out, "output directory");

  CLI::App* scan = app.add_subcommand("scan", "density scan over dyadic disks around --at");
  add_family(scan, o);
  add_config(scan, o);
  add_budget(scan, o);
  add_threads(scan, o);
  scan->add_option("--radius", o.radius, "scan radius (family base radius when omitted)");
  scan->add_option("--levels", o.levels, "dyadic levels")->capture_default_str();
  scan->add_option("--samples", o.samples, "samples per disk")->capture_default_str();
  scan->add_option("--seed", o.seed, "random seed")->capture_default_str();
  scan->add_option("--out", o.out, "output directory")->required();

  CLI::App* render = app.add_subcommand("render", "parameter-plane image around --at");
  add_family(render, o);
  add_config(render, o);
  add_budget(render, o);
  add_threads(render, o);
  render->add_option("--width", o.width, "grid columns")->capture_default_str();
  render->add_option("--height", o.height, "grid rows")->capture_default_str();
  render->add_option("--span", o.span, "half-width of the square window")->capture_default_str();
  render->add_option("--out", o.out, "output directory")->required();

  CLI::App* diagnose = app.add_subcommand("diagnose", "distortion and transfer checks as JSONL records");
  add_family(diagnose, o);
  add_config(diagnose, o);
  add_budget(diagnose, o);
  diagnose->add_option("--lemma", o.lemma, "prod-dist, smallep, distortion1, distortion2, distortion3, initdist, "
                                           "q-stability or transversality")
      ->required();
  diagnose->add_option("--offset", o.offset, "parameter or phase offset used by the fixture");
  diagnose->add_option("--samples", o.samples, "random cases for prod-dist")->capture_default_str();
  diagnose->add_option("--seed", o.seed, "random seed")->capture_default_str();
  diagnose->add_option("--out", o.out, "output directory");

  CLI::App* orbit = app.add_subcommand("orbit", "marked critical orbit at one parameter");
  add_family(orbit, o);
  add_budget(orbit, o);

  CLI::App* transfer = app.add_subcommand("transfer", "derivative transfer along the critical-value orbit");
  add_family(transfer, o);
  add_budget(transfer, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "mislab: " << e.what() << '\n';
    return kUsage;
  }

  try {
    o.config.validate();
    if (*classify) return cmd_classify(o, out);
    if (*scan) return cmd_scan(o, out);
    if (*render) return cmd_render(o, out);
    if (*diagnose) return cmd_diagnose(o, out);
    if (*orbit) return cmd_orbit(o, out);
    if (*transfer) return cmd_transfer(o, out);
    err << "mislab: no command\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "mislab: " << e.what() << '\n';
    return kUsage;
  } catch (const IoFailure& e) {
    err << "mislab: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "mislab: " << to_string(e.kind()) << ": " << e.message();
    if (e.index() >= 0) err << " (index " << e.index() << ")";
    err << '\n';
    return e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::FormatError ? kUsage : kInternal;
  } catch (const std::exception& e) {
    err << "mislab: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace mislab::cli

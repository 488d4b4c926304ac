#include "mislab/family.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mislab/error.hpp"

namespace mislab {

namespace {

constexpr const char* kSchema = "mislab.family/1";

cplx eval_poly(const std::vector<cplx>& p, cplx a) { return horner(p, a); }

xcplx eval_poly_x(const std::vector<cplx>& p, xcplx a, xcplx* deriv) {
  xcplx v{0.0L, 0.0L};
  xcplx d{0.0L, 0.0L};
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    d = d * a + v;
    v = v * a + xcplx(it->real(), it->imag());
  }
  if (deriv) *deriv = d;
  return v;
}

cplx parse_complex(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::FormatError, "expected a complex number [re, im]");
}

ParamFamily::CoeffPolys parse_coeffs(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::FormatError, std::string(name) + " must be a nonempty list");
  ParamFamily::CoeffPolys out;
  for (const auto& poly : j) {
    if (!poly.is_array()) throw Error(ErrorKind::FormatError, std::string(name) + " entries must be lists");
    std::vector<cplx> p;
    for (const auto& c : poly) p.push_back(parse_complex(c));
    if (p.empty()) p.push_back({0.0, 0.0});
    out.push_back(std::move(p));
  }
  return out;
}

nlohmann::json coeffs_json(const ParamFamily::CoeffPolys& c) {
  auto out = nlohmann::json::array();
  for (const auto& poly : c) {
    auto p = nlohmann::json::array();
    for (const auto& v : poly) p.push_back({v.real(), v.imag()});
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<cplx> taylor_shift(const std::vector<cplx>& p, cplx a0) {
  // Repeated synthetic division by (a - a0).
  std::vector<cplx> c = p;
  const std::size_t n = c.size();
  for (std::size_t k = 0; k + 1 < n; ++k)
    for (std::size_t i = n - 1; i > k; --i) c[i - 1] += a0 * c[i];
  return c;
}

ParamFamily::ParamFamily(int degree, CoeffPolys numer, CoeffPolys denom, double base_radius, MarkedCritical marked)
    : degree_(degree), numer_(std::move(numer)), denom_(std::move(denom)), base_radius_(base_radius), marked_(marked) {
  if (degree_ < 2) throw Error(ErrorKind::InvalidArgument, "family degree must be at least 2");
  if (!(base_radius_ > 0.0)) throw Error(ErrorKind::InvalidArgument, "base radius must be positive");
  const auto limit = static_cast<std::size_t>(degree_) + 1;
  if (numer_.size() > limit || denom_.size() > limit)
    throw Error(ErrorKind::InvalidArgument, "more coefficients than the declared degree allows");
  numer_.resize(limit, {cplx{0.0, 0.0}});
  denom_.resize(limit, {cplx{0.0, 0.0}});
}

ParamFamily ParamFamily::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("family file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::FormatError, "family file must hold an object");
  if (j.value("schema", std::string()) != kSchema)
    throw Error(ErrorKind::FormatError, std::string("family schema must be ") + kSchema);
  for (const char* key : {"degree", "numer", "denom", "base_radius", "marked_critical"})
    if (!j.contains(key)) throw Error(ErrorKind::FormatError, std::string("missing field ") + key);
  if (!j["degree"].is_number_integer()) throw Error(ErrorKind::FormatError, "degree must be an integer");
  if (!j["base_radius"].is_number()) throw Error(ErrorKind::FormatError, "base_radius must be a number");

  MarkedCritical marked;
  const auto& m = j["marked_critical"];
  if (m.is_string()) {
    if (m.get<std::string>() != "inf") throw Error(ErrorKind::FormatError, "marked_critical string must be \"inf\"");
    marked.at_infinity = true;
  } else {
    marked.point = parse_complex(m);
  }
  try {
    return ParamFamily(j["degree"].get<int>(), parse_coeffs(j["numer"], "numer"), parse_coeffs(j["denom"], "denom"),
                       j["base_radius"].get<double>(), marked);
  } catch (const Error& e) {
    throw Error(ErrorKind::FormatError, e.message());
  }
}

ParamFamily ParamFamily::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FormatError, "cannot read family file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ParamFamily::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = kSchema;
  j["degree"] = degree_;
  j["numer"] = coeffs_json(numer_);
  j["denom"] = coeffs_json(denom_);
  j["base_radius"] = base_radius_;
  if (marked_.at_infinity)
    j["marked_critical"] = "inf";
  else
    j["marked_critical"] = {marked_.point.real(), marked_.point.imag()};
  return j.dump();
}

RationalMap ParamFamily::map_at(cplx a) const {
  std::vector<cplx> p, q;
  for (const auto& c : numer_) p.push_back(eval_poly(c, a));
  for (const auto& c : denom_) q.push_back(eval_poly(c, a));
  return RationalMap(std::move(p), std::move(q));
}

FamilySlice ParamFamily::slice(xcplx a) const { return FamilySlice(*this, a); }

ParamFamily ParamFamily::shifted(cplx a0, double radius, MarkedCritical marked) const {
  CoeffPolys n, d;
  for (const auto& c : numer_) n.push_back(taylor_shift(c, a0));
  for (const auto& c : denom_) d.push_back(taylor_shift(c, a0));
  return ParamFamily(degree_, std::move(n), std::move(d), radius, marked);
}

void ParamFamily::validate(int samples) const {
  auto check = [&](cplx a) {
    const RationalMap m = map_at(a);
    if (m.degree() != degree_)
      throw Error(ErrorKind::DegenerateMap, "family member drops degree at a = " + std::to_string(a.real()) + "+" +
                                                std::to_string(a.imag()) + "i");
  };
  check({0.0, 0.0});
  for (int i = 0; i < samples; ++i) check(std::polar(base_radius_, 2.0 * std::numbers::pi * i / samples));
}

FamilySlice::FamilySlice(const ParamFamily& family, xcplx a) : a_(a) {
  for (const auto& c : family.numer()) {
    xcplx d;
    p_.push_back(eval_poly_x(c, a, &d));
    pa_.push_back(d);
  }
  for (const auto& c : family.denom()) {
    xcplx d;
    q_.push_back(eval_poly_x(c, a, &d));
    qa_.push_back(d);
  }
}

Partials FamilySlice::partials(xcplx z) const {
  xcplx P{0, 0}, Pz{0, 0}, Pa{0, 0}, Q{0, 0}, Qz{0, 0}, Qa{0, 0};
  for (std::size_t i = p_.size(); i-- > 0;) {
    Pz = Pz * z + P;
    P = P * z + p_[i];
    Pa = Pa * z + pa_[i];
    Qz = Qz * z + Q;
    Q = Q * z + q_[i];
    Qa = Qa * z + qa_[i];
  }
  const xcplx inv = 1.0L / Q;
  const xcplx r = P * inv;
  return {r, (Pz - r * Qz) * inv, (Pa - r * Qa) * inv};
}

Partials FamilySlice::partials_at_infinity() const {
  const std::size_t d = p_.size() - 1;
  const xcplx lead_q = q_[d];
  if (std::abs(lead_q) == 0.0L) throw Error(ErrorKind::NonFinite, "R maps infinity to infinity");
  const xcplx r = p_[d] / lead_q;
  return {r, {0.0L, 0.0L}, (pa_[d] - r * qa_[d]) / lead_q};
}

}  // namespace mislab

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rmtlab/limits.hpp"
#include "rmtlab/verify.hpp"

#ifndef RMTLAB_VERSION
#define RMTLAB_VERSION "unknown"
#endif

namespace rmtlab::cli {

namespace mp = boost::multiprecision;
using json = nlohmann::ordered_json;

const char* version() { return RMTLAB_VERSION; }

namespace {

struct RunConfig {
  std::string command;
  std::string a = "1", c = "1", t = "crit", s;
  std::string N = "24";
  long n = -1;
  std::string tau;
  unsigned bits = 256;
  std::string X = "-20:20:41", Y = "-5:5:21";
  long finite_N = 0;
  std::string regime = "merging-pii", grid, base, theta;
  std::string s_min = "-6", s_max = "9", step = "0.1";
  int trace = 256;
  std::uint64_t seed = 0;
  long corrupt_h = -1;
  std::string corrupt_rel = "1e-6";
  std::string output, format = "csv";
};

Real parse_real(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    (void)std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return Real(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, std::string("cannot read ") + what + " from '" + text + "'");
  }
}

std::vector<long> parse_N_list(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "N must be a positive integer list, got '" + text + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::config, "empty N list");
  return out;
}

// "v" or "lo:hi:count"
std::vector<Real> parse_range(const std::string& text, const char* what) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.size() == 1) return {parse_real(parts[0], what)};
  if (parts.size() != 3) throw Error(ErrorKind::config, std::string(what) + " range must be lo:hi:count");
  Real lo = parse_real(parts[0], what), hi = parse_real(parts[1], what);
  long count = 0;
  try {
    count = std::stol(parts[2]);
  } catch (const std::exception&) {
  }
  if (count < 1) throw Error(ErrorKind::config, std::string(what) + " count must be positive");
  std::vector<Real> v;
  for (long i = 0; i < count; ++i) v.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return v;
}

std::string num(const Real& x) { return to_string(x, 19); }  // 20 significant digits

json jnum(const Real& x) { return num(x); }
json jcx(const Complex& z) { return json{{"re", num(z.re)}, {"im", num(z.im)}}; }

// t from --t (value, crit, <f>crit) or --s
Real resolve_t(const RunConfig& cfg, const Real& a, const Real& c, const Real& N) {
  if (!cfg.s.empty()) return t_from_s(a, c, parse_real(cfg.s, "s"), N);
  CriticalData cr = critical_data(a, c, Real(1), N);
  const std::string& t = cfg.t;
  const std::string suffix = "crit";
  if (t.size() >= suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0) {
    std::string factor = t.substr(0, t.size() - suffix.size());
    return factor.empty() ? cr.t_c : parse_real(factor, "t factor") * cr.t_c;
  }
  return parse_real(t, "t");
}

ModelParams model(const RunConfig& cfg, long Nv) {
  Real a = parse_real(cfg.a, "a"), c = parse_real(cfg.c, "c"), N(Nv);
  ModelParams p = cfg.n >= 0 ? ModelParams::from_n(a, c, cfg.n, N) : ModelParams::from_t(a, c, resolve_t(cfg, a, c, N), N);
  p.validate();
  return p;
}

struct Artifact {
  json header;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> footer;
};

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string q = "\"";
  for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

void emit(const Artifact& art, const std::string& format, std::ostream& os) {
  os << art.header.dump() << '\n';
  if (format == "json") {
    json body{{"columns", art.columns}, {"rows", art.rows}};
    json foot = json::object();
    for (const auto& [k, v] : art.footer) foot[k] = v;
    body["footer"] = foot;
    os << body.dump() << '\n';
    return;
  }
  for (std::size_t i = 0; i < art.columns.size(); ++i) os << (i ? "," : "") << art.columns[i];
  os << '\n';
  for (const auto& r : art.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
    os << '\n';
  }
  for (const auto& [k, v] : art.footer) os << "# " << k << " = " << v << '\n';
}

json base_header(const RunConfig& cfg) {
  json h;
  h["tool"] = "rmtlab";
  h["version"] = version();
  h["command"] = cfg.command;
  h["precision_bits"] = cfg.bits;
  return h;
}

json model_json(const ModelParams& p) {
  return json{{"a", num(p.a)}, {"c", num(p.c)}, {"t", num(p.t)}, {"N", num(p.N)}, {"n", p.n}};
}

// ---------------------------------------------------------------- commands

Artifact cmd_droplet(const RunConfig& cfg, const PrecisionContext& ctx) {
  ModelParams p = model(cfg, parse_N_list(cfg.N).front());
  DropletGeometry geo = make_geometry(p, ctx, 0);
  TraceReport tr = trace_boundary_report(p, geo, cfg.trace, ctx);
  CriticalData cr = critical_data(p);
  Artifact art;
  art.header = base_header(cfg);
  art.header["config"] = model_json(p);
  art.header["config"]["t_spec"] = cfg.s.empty() ? cfg.t : "s=" + cfg.s;
  art.header["config"]["trace_count"] = cfg.trace;
  art.header["geometry"] = json{{"t_c", num(cr.t_c)},
                                {"b_c", num(cr.b_c)},
                                {"gamma_c", num(cr.gamma_c)},
                                {"s", num(cr.s)},
                                {"b", jcx(geo.b)},
                                {"beta", jcx(geo.beta)},
                                {"b_c_star", jcx(geo.b_c_star)},
                                {"ell", jcx(geo.ell)},
                                {"s_hat", jcx(geo.s_hat)},
                                {"disk_radius", num(geo.disk_radius)},
                                {"closure_gap", num(tr.closure_gap)},
                                {"max_residual", num(tr.max_residual)}};
  art.columns = {"idx", "re", "im"};
  for (std::size_t i = 0; i <= tr.points.size(); ++i) {
    const Complex& z = tr.points[i % tr.points.size()];  // closing row repeats the start
    art.rows.push_back({std::to_string(i), num(z.re), num(z.im)});
  }
  return art;
}

Artifact cmd_pii_table(const RunConfig& cfg, const PrecisionContext& ctx) {
  PiiTable t = hastings_mcleod(parse_real(cfg.s_min, "s-min"), parse_real(cfg.s_max, "s-max"),
                               parse_real(cfg.step, "step"), ctx, true);
  PrecisionGuard g(t.bits);
  Artifact art;
  art.header = base_header(cfg);
  art.header["config"] = json{{"s_min", num(t.s_min())}, {"s_max", num(t.s_max())}, {"step", cfg.step}};
  art.header["error_estimate"] = num(t.error_estimate);
  std::ostringstream os;
  write_pii_csv(os, t);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  std::stringstream hs(line);
  for (std::string col; std::getline(hs, col, ',');) art.columns.push_back(col);
  while (std::getline(is, line)) {
    std::vector<std::string> r;
    std::stringstream ls(line);
    for (std::string v; std::getline(ls, v, ',');) r.push_back(v);
    art.rows.push_back(r);
  }
  // five-point stencils through the table evaluator
  Real ode(0), ham(0), defn(0);
  const Real h2("1e-5"), h1("1e-4");
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    const Real& s = t.grid[i];
    PiiPoint pt = t.row(i);
    defn = mp::max(defn, mp::abs(pt.p12 - (pt.q * pt.r + pt.qp) / 4));
    if (s - 2 * h1 < t.s_min() || s + 2 * h1 > t.s_max()) continue;
    Real q2 = (-t.at(s + 2 * h2).q + 16 * t.at(s + h2).q - 30 * pt.q + 16 * t.at(s - h2).q - t.at(s - 2 * h2).q) /
              (12 * h2 * h2);
    ode = mp::max(ode, mp::abs(q2 - s * pt.q - 2 * pt.q * pt.q * pt.q));
    Real r1 = (-t.at(s + 2 * h1).r + 8 * t.at(s + h1).r - 8 * t.at(s - h1).r + t.at(s - 2 * h1).r) / (12 * h1);
    ham = mp::max(ham, mp::abs(r1 + pt.q * pt.q));
  }
  art.footer = {{"max |q''-s q-2q^3|", num(ode)}, {"max |r'+q^2|", num(ham)}, {"max |p12-(q r+qp)/4|", num(defn)}};
  return art;
}

Artifact cmd_density(const RunConfig& cfg, const PrecisionContext& ctx) {
  Real a = parse_real(cfg.a, "a"), c = parse_real(cfg.c, "c");
  CriticalData cr = critical_data(a, c, Real(1), Real(1));
  std::vector<Real> Xs = parse_range(cfg.X, "X"), Ys = parse_range(cfg.Y, "Y");
  Artifact art;
  art.header = base_header(cfg);
  art.header["config"] = json{{"a", num(a)},    {"c", num(c)},          {"t_c", num(cr.t_c)},
                              {"X", cfg.X},     {"Y", cfg.Y},           {"finite_N", cfg.finite_N}};
  art.columns = {"X", "Y", "value"};
  std::unique_ptr<OrthoSystem> sys;
  if (cfg.finite_N > 0) {
    ModelParams p = model(cfg, cfg.finite_N);
    sys = std::make_unique<OrthoSystem>(ortho_system(p, ctx, 0));
    art.header["config"]["finite_model"] = model_json(p);
    art.columns.push_back("finite_N_" + std::to_string(cfg.finite_N));
  }
  for (const auto& X : Xs)
    for (const auto& Y : Ys) {
      std::vector<std::string> r{num(X), num(Y), num(density_profile(X, Y, cr))};
      if (sys) r.push_back(num(rescaled_kernel(RegimeSpec::density(), {X, Y}, *sys, ctx).re));
      art.rows.push_back(r);
    }
  return art;
}

std::vector<std::string> coord_names(RegimeTag t) {
  switch (t) {
    case RegimeTag::bulk_ginibre:
    case RegimeTag::edge_faddeeva: return {"nu_re", "nu_im", "eta_re", "eta_im"};
    case RegimeTag::merging_pii: return {"x", "y", "xp", "yp"};
    case RegimeTag::tau_quarter: return {"X", "Y", "nu_re", "nu_im", "eta_re", "eta_im"};
    case RegimeTag::sine: return {"Y", "x", "y", "xp", "yp"};
    case RegimeTag::density_profile: return {"X", "Y"};
  }
  return {};
}

Artifact cmd_kernel(const RunConfig& cfg, const PrecisionContext& ctx) {
  RegimeTag tag = parse_regime(cfg.regime);
  Real a = parse_real(cfg.a, "a"), c = parse_real(cfg.c, "c");
  std::vector<long> Ns = parse_N_list(cfg.N);
  RegimeSpec r;
  switch (tag) {
    case RegimeTag::bulk_ginibre:
    case RegimeTag::edge_faddeeva: {
      // defaults: a bulk point and the outer edge on the negative axis, radius sqrt(t+c)
      Real rad = mp::sqrt(critical_data(a, c, Real(1), Real(1)).t_c + c);
      Complex base(tag == RegimeTag::bulk_ginibre ? Real(-rad / 2) : Real(-rad));
      if (!cfg.base.empty()) {
        auto comma = cfg.base.find(',');
        if (comma == std::string::npos) throw Error(ErrorKind::config, "--base takes re,im");
        base = Complex(parse_real(cfg.base.substr(0, comma), "base"), parse_real(cfg.base.substr(comma + 1), "base"));
      }
      Real theta = cfg.theta.empty() ? real_pi() : parse_real(cfg.theta, "theta");
      r = tag == RegimeTag::bulk_ginibre ? RegimeSpec::bulk(base) : RegimeSpec::edge(base, theta);
      break;
    }
    case RegimeTag::merging_pii: r = RegimeSpec::merging(); break;
    case RegimeTag::tau_quarter: r = RegimeSpec::tau_regime(cfg.tau.empty() ? Real(1) / 4 : parse_real(cfg.tau, "tau")); break;
    case RegimeTag::sine: r = RegimeSpec::sine(parse_real(cfg.tau.empty() ? "0.27" : cfg.tau, "tau")); break;
    case RegimeTag::density_profile: r = RegimeSpec::density(); break;
  }
  std::vector<std::string> names = coord_names(tag);
  if (cfg.grid.empty()) throw Error(ErrorKind::config, "kernel needs --grid with one entry per coordinate");
  std::vector<std::vector<Real>> axes;
  {
    std::stringstream ss(cfg.grid);
    for (std::string tok; std::getline(ss, tok, ',');) axes.push_back(parse_range(tok, "grid"));
  }
  if (axes.size() != names.size())
    throw Error(ErrorKind::config, std::string(regime_name(tag)) + " grid needs " + std::to_string(names.size()) +
                                       " entries, got " + std::to_string(axes.size()));
  std::vector<std::vector<Real>> points{{}};
  for (const auto& ax : axes) {
    std::vector<std::vector<Real>> next;
    for (const auto& pt : points)
      for (const auto& v : ax) {
        next.push_back(pt);
        next.back().push_back(v);
      }
    points = std::move(next);
  }

  Artifact art;
  art.header = base_header(cfg);
  art.header["config"] = json{{"regime", regime_name(tag)}, {"a", num(a)}, {"c", num(c)}, {"N", Ns},
                              {"t_spec", cfg.s.empty() ? cfg.t : "s=" + cfg.s}, {"grid", cfg.grid}};
  if (tag == RegimeTag::tau_quarter || tag == RegimeTag::sine) art.header["config"]["tau"] = num(r.tau);
  if (tag == RegimeTag::bulk_ginibre || tag == RegimeTag::edge_faddeeva) {
    art.header["config"]["base"] = jcx(r.base);
    art.header["config"]["theta"] = num(r.theta);
  }
  art.columns = {"N"};
  for (const auto& nm : names) art.columns.push_back(nm);
  for (const char* col : {"re", "im", "log_mag", "limit_re", "limit_im", "error"}) art.columns.push_back(col);

  json models = json::array();
  for (long Nv : Ns) {
    ModelParams p = model(cfg, Nv);
    models.push_back(model_json(p));
    OrthoSystem sys = ortho_system(p, ctx, 0);
    CriticalData cr = critical_data(p.a, p.c, Real(p.n) / p.N, p.N);
    std::vector<Complex> lim(points.size());
    if (tag == RegimeTag::merging_pii) {
      if (cr.s < -6 || cr.s > 9) throw Error(ErrorKind::range, "merging limit needs -6 <= s <= 9");
      PiiTable table = hastings_mcleod(mp::max(Real(-6), mp::floor(cr.s) - 1), Real(9), Real("0.1"), ctx, false);
      PsiSolver psi(cr.s, table, ctx);
      std::vector<Real> ys;
      auto index_of = [&](const Real& y) {
        for (std::size_t i = 0; i < ys.size(); ++i)
          if (ys[i] == y) return i;
        ys.push_back(y);
        return ys.size() - 1;
      };
      std::vector<std::pair<std::size_t, std::size_t>> idx;
      for (const auto& pt : points) {
        std::size_t i = index_of(pt[1]);
        std::size_t j = index_of(pt[3]);
        idx.emplace_back(i, j);
      }
      LimitKernelEvaluator ev(psi, ys);
      for (std::size_t k = 0; k < points.size(); ++k) lim[k] = ev(points[k][0], idx[k].first, points[k][2], idx[k].second);
    } else {
      for (std::size_t k = 0; k < points.size(); ++k) lim[k] = limit_value(r, points[k], cr);
    }
    Real sup(0);
    for (std::size_t k = 0; k < points.size(); ++k) {
      Complex v = rescaled_kernel(r, points[k], sys, ctx);
      PrecisionGuard g(ctx);
      Real err = abs(v - lim[k]);
      sup = mp::max(sup, err);
      std::vector<std::string> row{std::to_string(Nv)};
      for (const auto& x : points[k]) row.push_back(num(x));
      Real mag = abs(v);
      row.insert(row.end(), {num(v.re), num(v.im), mag > 0 ? num(mp::log(mag)) : "-inf", num(lim[k].re),
                             num(lim[k].im), num(err)});
      art.rows.push_back(row);
    }
    art.footer.emplace_back("sup error N=" + std::to_string(Nv), num(sup));
  }
  art.header["config"]["models"] = models;
  return art;
}

Artifact cmd_verify(const RunConfig& cfg, const PrecisionContext& ctx, bool& all_pass) {
  ModelParams p = model(cfg, parse_N_list(cfg.N).front());
  VerifyConfig vc;
  vc.a = p.a;
  vc.c = p.c;
  vc.t = p.t;
  vc.N = static_cast<long>(mp::round(p.N).convert_to<long>());
  vc.seed = cfg.seed;
  vc.corrupt_h = cfg.corrupt_h;
  vc.corrupt_rel = parse_real(cfg.corrupt_rel, "corrupt-rel");
  auto rows = verify_battery(vc, ctx);
  Artifact art;
  art.header = base_header(cfg);
  art.header["config"] = model_json(p);
  art.header["config"]["seed"] = cfg.seed;
  if (cfg.corrupt_h >= 0) art.header["config"]["corrupt_h"] = json{{"index", cfg.corrupt_h}, {"rel", cfg.corrupt_rel}};
  art.columns = {"check", "value", "tolerance", "status", "detail"};
  all_pass = true;
  for (const auto& r : rows) {
    art.rows.push_back({r.name, num(r.value), num(r.tolerance), r.pass ? "PASS" : "FAIL", r.detail});
    all_pass = all_pass && r.pass;
  }
  return art;
}

// config file entries become flags placed before the command-line ones, so later flags win
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad config file: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::config, "config file must hold a JSON object");
  std::vector<std::string> rest = args;
  std::string command;
  if (!rest.empty() && rest[0].rfind("-", 0) != 0) {
    command = rest[0];
    rest.erase(rest.begin());
  } else if (j.contains("command") && j["command"].is_string()) {
    command = j["command"].get<std::string>();
  }
  std::vector<std::string> out{command};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "command" || it.key() == "config") continue;
    const json& v = it.value();
    std::string flag = "--" + it.key();
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      out.insert(out.end(), {flag, joined});
    } else {
      out.insert(out.end(), {flag, v.is_string() ? v.get<std::string>() : v.dump()});
    }
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

void add_model_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--a", cfg.a, "charge position a > 0");
  sub->add_option("--c", cfg.c, "charge strength c > 0");
  sub->add_option("--t", cfg.t, "total mass: a number, 'crit', or '<factor>crit'");
  sub->add_option("--s", cfg.s, "critical scaling variable; sets t = t_c + 2 b_c s/(gamma_c N^(2/3))");
  sub->add_option("--N", cfg.N, "N, or a comma list for kernel sweeps");
  sub->add_option("--n", cfg.n, "degree override (replaces rounding t N)");
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (const char* env = std::getenv("RMTLAB_PRECISION_BITS")) {
    try {
      cfg.bits = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      err << "error: RMTLAB_PRECISION_BITS is not an integer\n";
      return exit_code(ErrorKind::config);
    }
  }
  try {
    std::vector<std::string> args = merge_config(args_in);

    CLI::App app{"rmtlab: finite-n kernels of the normal matrix model with a point charge"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));
    std::string config_path;
    auto common = [&](CLI::App* sub) {
      sub->add_option("--config", config_path, "JSON file of flag values; explicit flags override it");
      sub->add_option("--precision-bits", cfg.bits, "working precision (default 256 or RMTLAB_PRECISION_BITS)");
      sub->add_option("--output", cfg.output, "output file (default stdout)");
      sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };

    CLI::App* droplet = app.add_subcommand("droplet", "critical data, branch points and the traced contour B");
    common(droplet);
    add_model_flags(droplet, cfg);
    droplet->add_option("--trace-count", cfg.trace, "points on B");

    CLI::App* pii = app.add_subcommand("pii-table", "Hastings-McLeod table with residual footer");
    common(pii);
    pii->add_option("--s-min", cfg.s_min);
    pii->add_option("--s-max", cfg.s_max);
    pii->add_option("--step", cfg.step);

    CLI::App* dens = app.add_subcommand("density", "limiting density profile on an X, Y grid");
    common(dens);
    add_model_flags(dens, cfg);
    dens->add_option("--X", cfg.X, "lo:hi:count");
    dens->add_option("--Y", cfg.Y, "lo:hi:count");
    dens->add_option("--finite-N", cfg.finite_N, "add the rescaled finite-n density at this N");

    CLI::App* kern = app.add_subcommand("kernel", "rescaled finite-n kernel against its limit");
    common(kern);
    add_model_flags(kern, cfg);
    kern->add_option("--regime", cfg.regime,
                     "bulk-ginibre, edge-faddeeva, merging-pii, tau-quarter, sine or density-profile");
    kern->add_option("--tau", cfg.tau);
    kern->add_option("--grid", cfg.grid, "comma list, one value or lo:hi:count per coordinate");
    kern->add_option("--base", cfg.base, "re,im of the base point for bulk and edge");
    kern->add_option("--theta", cfg.theta, "outer normal angle for the edge regime");

    CLI::App* ver = app.add_subcommand("verify", "identity battery; exit 1 on any failure");
    common(ver);
    add_model_flags(ver, cfg);
    ver->add_option("--seed", cfg.seed, "seed for the identity probe points");
    ver->add_option("--corrupt-h", cfg.corrupt_h, "fault injection: perturb h_k before checking");
    ver->add_option("--corrupt-rel", cfg.corrupt_rel, "relative size of the perturbation");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForVersion& e) {
      out << version() << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      return exit_code(ErrorKind::config);
    }
    if (cfg.bits < 64 || cfg.bits > 16384) throw Error(ErrorKind::config, "precision bits must lie in [64, 16384]");
    cfg.command = app.get_subcommands().front()->get_name();

    PrecisionContext ctx(cfg.bits);
    PrecisionGuard g(ctx);
    Artifact art;
    bool pass = true;
    if (cfg.command == "droplet") art = cmd_droplet(cfg, ctx);
    else if (cfg.command == "pii-table") art = cmd_pii_table(cfg, ctx);
    else if (cfg.command == "density") art = cmd_density(cfg, ctx);
    else if (cfg.command == "kernel") art = cmd_kernel(cfg, ctx);
    else art = cmd_verify(cfg, ctx, pass);

    if (cfg.output.empty()) {
      emit(art, cfg.format, out);
    } else {
      std::ofstream f(cfg.output, std::ios::binary);
      if (!f) throw Error(ErrorKind::config, "cannot write '" + cfg.output + "'");
      emit(art, cfg.format, f);
    }
    if (!pass) {
      std::string names;
      for (const auto& r : art.rows)
        if (r[3] == "FAIL") names += (names.empty() ? "" : ", ") + r[0];
      err << "verification failed: " << names << '\n';
      return 1;
    }
    return 0;
  } catch (const Error& e) {
    err << "error (" << error_kind_name(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::numerics);
  }
}

}  // namespace rmtlab::cli

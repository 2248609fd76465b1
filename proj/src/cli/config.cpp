#include "ofw/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ofw/overloaded.hpp"

namespace ofw::cli {

using nlohmann::json;

ConfigError::ConfigError(const std::string& source, int line, const std::string& pointer, const std::string& message)
    : ArgumentError(source + ":" + std::to_string(line) + ": " + (pointer.empty() ? "/" : pointer) + ": " + message),
      line_(line) {}

const char* to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::LassoFixed: return "lasso-fixed";
    case WorkloadKind::LassoRandom: return "lasso-random";
    case WorkloadKind::Mc: return "mc";
    case WorkloadKind::Classification: return "classification";
  }
  return "?";
}

const char* to_string(DataFormat format) {
  return format == DataFormat::McTriplets ? "mc-triplets" : "labeled-sparse";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Line lookup

namespace {

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

}  // namespace

std::map<std::string, int> pointer_lines(const std::string& text) {
  struct Frame {
    bool array;
    std::string base;
    int index = 0;
    bool expect_key = true;  // objects: next string is a key
    bool value_seen = false;  // arrays: current element already recorded
    std::string key;
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  int line = 1;
  lines[""] = 1;

  auto value_pointer = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    return f.array ? f.base + "/" + std::to_string(f.index) : f.base + "/" + escape_pointer(f.key);
  };
  auto note_value = [&]() {
    if (!stack.empty() && stack.back().array && !stack.back().value_seen) {
      lines.emplace(value_pointer(), line);
      stack.back().value_seen = true;
    }
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') continue;
    if (c == '"') {
      const int start_line = line;
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) {
          ++i;
          s += text[i];  // close enough for key lookup
        } else {
          if (text[i] == '\n') ++line;
          s += text[i];
        }
      }
      if (!stack.empty() && !stack.back().array && stack.back().expect_key) {
        stack.back().key = s;
        stack.back().expect_key = false;
        lines.emplace(value_pointer(), start_line);
      } else {
        note_value();
      }
      continue;
    }
    if (c == '{' || c == '[') {
      note_value();
      Frame f;
      f.array = c == '[';
      f.base = value_pointer();
      stack.push_back(f);
      continue;
    }
    if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      continue;
    }
    if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().array) {
          ++stack.back().index;
          stack.back().value_seen = false;
        } else {
          stack.back().expect_key = true;
        }
      }
      continue;
    }
    if (c == ':') continue;
    note_value();  // number, true, false, null
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Validation helpers

namespace {

struct Ctx {
  std::string source;
  std::map<std::string, int> lines;

  int line_of(std::string ptr) const {
    while (true) {
      auto it = lines.find(ptr);
      if (it != lines.end()) return it->second;
      const auto cut = ptr.rfind('/');
      if (cut == std::string::npos) return 1;
      ptr = ptr.substr(0, cut);
    }
  }

  [[noreturn]] void fail(const std::string& ptr, const std::string& message) const {
    throw ConfigError(source, line_of(ptr), ptr, message);
  }
};

std::string type_name(const json& j) { return j.type_name(); }

class Obj {
 public:
  Obj(const json& j, std::string ptr, const Ctx& ctx) : j_(j), ptr_(std::move(ptr)), ctx_(ctx) {
    if (!j_.is_object()) ctx_.fail(ptr_, "expected an object, got " + type_name(j_));
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + escape_pointer(key); }
  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::optional<double> number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (!v.is_number()) ctx_.fail(at(key), "expected a number, got " + type_name(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) ctx_.fail(at(key), "must be finite");
    return d;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (v.is_number_integer()) {
      if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        ctx_.fail(at(key), "integer out of range");
      return v.get<std::int64_t>();
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    ctx_.fail(at(key), "expected an integer, got " + (v.is_number() ? v.dump() : type_name(v)));
  }

  std::optional<std::uint64_t> seed(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) ctx_.fail(at(key), "seed must be nonnegative");
    ctx_.fail(at(key), "expected an unsigned integer seed, got " + type_name(v));
  }

  std::optional<std::string> string(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (!v.is_string()) ctx_.fail(at(key), "expected a string, got " + type_name(v));
    return v.get<std::string>();
  }

  std::optional<Obj> object(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Obj(j_.at(key), at(key), ctx_);
  }

  /// Rejects any key no getter asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) ctx_.fail(at(it.key()), "unknown field '" + it.key() + "'");
    }
  }

  const Ctx& ctx() const { return ctx_; }

 private:
  const json& j_;
  std::string ptr_;
  const Ctx& ctx_;
  std::set<std::string> used_;
};

template <class T>
void set_if(std::optional<T> v, T& out) {
  if (v) out = *v;
}

void require(bool ok, const Obj& o, const std::string& ptr, const std::string& message) {
  if (!ok) o.ctx().fail(ptr, message);
}

Index positive_index(Obj& o, const std::string& key, Index fallback) {
  auto v = o.integer(key);
  if (!v) return fallback;
  require(*v >= 1, o, o.at(key), "must be >= 1");
  return static_cast<Index>(*v);
}

PowerIterConfig parse_power(Obj& o) {
  PowerIterConfig p;
  if (auto tol = o.number("tol")) {
    require(*tol > 0.0, o, o.at("tol"), "must be > 0");
    p.tol = *tol;
  }
  if (auto it = o.integer("max_iter")) {
    require(*it >= 1 && *it <= std::numeric_limits<int>::max(), o, o.at("max_iter"), "must be >= 1");
    p.max_iter = static_cast<int>(*it);
  }
  set_if(o.seed("seed"), p.seed);
  o.finish();
  return p;
}

void parse_lasso(Obj& w, WorkloadSpec& spec) {
  LassoParams& p = spec.lasso;
  p.n = positive_index(w, "n", p.n);
  p.m = positive_index(w, "m", p.m);
  if (auto v = w.number("sparsity_frac")) {
    require(*v > 0.0 && *v <= 1.0, w, w.at("sparsity_frac"), "must be in (0, 1]");
    p.sparsity_frac = *v;
  }
  if (auto v = w.number("sigma_w")) {
    require(*v >= 0.0, w, w.at("sigma_w"), "must be >= 0");
    p.sigma_w = *v;
  }
  if (auto v = w.number("r_factor")) {
    require(*v > 0.0, w, w.at("r_factor"), "must be > 0");
    p.r_factor = *v;
  }
  if (auto v = w.integer("reference_budget")) {
    require(*v >= 1, w, w.at("reference_budget"), "must be >= 1");
    spec.reference_budget = *v;
  }
  set_if(w.seed("seed"), p.seed);
}

Link parse_link(Obj& w) {
  auto s = w.string("link");
  if (!s || *s == "gaussian") return Link::Gaussian;
  if (*s == "logistic") return Link::Logistic;
  if (*s == "poisson") return Link::Poisson;
  w.ctx().fail(w.at("link"), "unknown link '" + *s + "' (expected gaussian, logistic or poisson)");
}

void parse_mc(Obj& w, WorkloadSpec& spec) {
  McParams& p = spec.mc;
  p.m1 = positive_index(w, "m1", p.m1);
  p.m2 = positive_index(w, "m2", p.m2);
  p.rank = positive_index(w, "rank", p.rank);
  require(p.rank <= std::min(p.m1, p.m2), w, w.at("rank"), "must be <= min(m1, m2)");
  if (auto v = w.number("noise_var")) {
    require(*v >= 0.0, w, w.at("noise_var"), "must be >= 0");
    p.noise_var = *v;
  }
  if (auto v = w.number("r_factor")) {
    require(*v > 0.0, w, w.at("r_factor"), "must be > 0");
    p.r_factor = *v;
  }
  p.link = parse_link(w);
  set_if(w.seed("seed"), p.seed);
}

void parse_classification(Obj& w, WorkloadSpec& spec) {
  ClassificationParams& p = spec.classification;
  p.m1 = positive_index(w, "m1", p.m1);
  p.m2 = positive_index(w, "m2", p.m2);
  p.rank = positive_index(w, "rank", p.rank);
  require(p.rank <= std::min(p.m1, p.m2), w, w.at("rank"), "must be <= min(m1, m2)");
  if (auto v = w.integer("n_train")) {
    require(*v >= 1, w, w.at("n_train"), "must be >= 1");
    p.n_train = *v;
  }
  if (auto v = w.number("flip_frac")) {
    require(*v >= 0.0 && *v < 1.0, w, w.at("flip_frac"), "must be in [0, 1)");
    p.flip_frac = *v;
  }
  if (auto s = w.string("loss")) {
    if (*s == "sigmoid") p.loss = LossKind::Sigmoid;
    else if (*s == "logistic") p.loss = LossKind::Logistic;
    else w.ctx().fail(w.at("loss"), "unknown loss '" + *s + "' (expected sigmoid or logistic)");
  }
  if (auto s = w.string("constraint")) {
    if (*s == "l1") p.constraint = ClassConstraint::L1;
    else if (*s == "trace") p.constraint = ClassConstraint::Trace;
    else w.ctx().fail(w.at("constraint"), "unknown constraint '" + *s + "' (expected l1 or trace)");
  }
  set_if(w.seed("seed"), p.seed);
}

json schedule_json(const StepSchedule& s) {
  return std::visit(Overloaded{
                        [](const Harmonic& h) { return json{{"kind", "harmonic"}, {"K", h.k}}; },
                        [](const Power& p) { return json{{"kind", "power"}, {"alpha", p.alpha}}; },
                    },
                    s);
}

bool uses_trace_ball(const WorkloadSpec& w) {
  return w.kind == WorkloadKind::Mc ||
         (w.kind == WorkloadKind::Classification && w.classification.constraint == ClassConstraint::Trace);
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) line += text[i] == '\n';
    std::string msg = e.what();
    if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError(source, line, "", "invalid JSON: " + msg);
  }

  const Ctx ctx{source, pointer_lines(text)};
  Obj top(root, "", ctx);
  RunConfig cfg;

  // workload
  auto wl = top.object("workload");
  if (!wl) ctx.fail("", "missing required field 'workload'");
  {
    Obj& w = *wl;
    auto kind = w.string("kind");
    if (!kind) ctx.fail(w.at("kind"), "missing required field 'kind'");
    WorkloadSpec& spec = cfg.workload;
    if (*kind == "lasso-fixed") spec.kind = WorkloadKind::LassoFixed;
    else if (*kind == "lasso-random") spec.kind = WorkloadKind::LassoRandom;
    else if (*kind == "mc") spec.kind = WorkloadKind::Mc;
    else if (*kind == "classification") spec.kind = WorkloadKind::Classification;
    else ctx.fail(w.at("kind"), "unknown workload kind '" + *kind + "' (expected lasso-fixed, lasso-random, mc or classification)");

    switch (spec.kind) {
      case WorkloadKind::LassoFixed:
      case WorkloadKind::LassoRandom: parse_lasso(w, spec); break;
      case WorkloadKind::Mc: parse_mc(w, spec); break;
      case WorkloadKind::Classification: parse_classification(w, spec); break;
    }
    if (auto r = w.number("radius")) {
      require(*r > 0.0, w, w.at("radius"), "must be > 0");
      spec.radius = *r;
      spec.classification.radius = *r;
    }
    if (spec.kind == WorkloadKind::Mc || spec.kind == WorkloadKind::Classification) {
      if (auto p = w.object("power")) spec.power = parse_power(*p);
    }
    w.finish();
  }

  // solver
  if (auto sv = top.object("solver")) {
    Obj& s = *sv;
    if (auto kind = s.string("kind")) {
      if (*kind == "ofw") cfg.solver = SolverKind::OFW;
      else if (*kind == "oaw") cfg.solver = SolverKind::OAW;
      else ctx.fail(s.at("kind"), "unknown solver '" + *kind + "' (expected ofw or oaw)");
    }
    if (cfg.solver == SolverKind::OAW && uses_trace_ball(cfg.workload)) {
      ctx.fail(s.at("kind"), "oaw needs an atomic constraint set; this workload uses a trace-norm ball");
    }
    if (auto sch = s.object("schedule")) {
      Obj& o = *sch;
      auto kind = o.string("kind");
      if (!kind) ctx.fail(o.at("kind"), "missing required field 'kind'");
      if (*kind == "harmonic") {
        Harmonic h;
        if (auto k = o.integer("K")) {
          require(*k >= 1 && *k <= 1000000, o, o.at("K"), "must be a positive integer");
          h.k = static_cast<int>(*k);
        }
        cfg.schedule = h;
      } else if (*kind == "power") {
        Power p;
        if (auto a = o.number("alpha")) {
          require(*a >= 0.5 && *a < 1.0, o, o.at("alpha"), "must be in [0.5, 1)");
          p.alpha = *a;
        }
        cfg.schedule = p;
      } else {
        ctx.fail(o.at("kind"), "unknown schedule '" + *kind + "' (expected harmonic or power)");
      }
      o.finish();
    }
    s.finish();
  }

  auto horizon = top.integer("horizon");
  if (!horizon) ctx.fail("", "missing required field 'horizon'");
  require(*horizon >= 1, top, top.at("horizon"), "must be >= 1");
  cfg.run.horizon = *horizon;
  if (auto b = top.integer("batch")) {
    require(*b >= 1, top, top.at("batch"), "must be >= 1");
    cfg.run.batch = *b;
  }
  if (auto r = top.integer("inner_repeats")) {
    require(*r >= 1, top, top.at("inner_repeats"), "must be >= 1");
    cfg.run.inner_repeats = *r;
  }
  if (cfg.run.horizon > (std::int64_t{1} << 40) / cfg.run.inner_repeats) {
    ctx.fail(top.at("horizon"), "horizon * inner_repeats is too large");
  }
  if (auto c = top.string("cadence")) {
    if (*c == "every") cfg.cadence = Cadence::Every;
    else if (*c == "geometric") cfg.cadence = Cadence::Geometric;
    else ctx.fail(top.at("cadence"), "unknown cadence '" + *c + "' (expected every or geometric)");
  }
  if (auto o = top.string("output")) {
    require(!o->empty(), top, top.at("output"), "must not be empty");
    cfg.output = *o;
  }

  if (auto dv = top.object("data")) {
    Obj& d = *dv;
    DataSpec data;
    auto path = d.string("path");
    if (!path || path->empty()) ctx.fail(d.at("path"), "missing required field 'path'");
    data.path = *path;
    auto fmt = d.string("format");
    if (!fmt) ctx.fail(d.at("format"), "missing required field 'format'");
    if (*fmt == "mc-triplets") data.format = DataFormat::McTriplets;
    else if (*fmt == "labeled-sparse") data.format = DataFormat::LabeledSparse;
    else ctx.fail(d.at("format"), "unknown format '" + *fmt + "' (expected mc-triplets or labeled-sparse)");
    if (auto dim = d.integer("dim")) {
      require(*dim >= 1, d, d.at("dim"), "must be >= 1");
      require(data.format == DataFormat::LabeledSparse, d, d.at("dim"), "only applies to labeled-sparse data");
      data.dim = static_cast<Index>(*dim);
    }
    if (data.format == DataFormat::McTriplets && cfg.workload.kind != WorkloadKind::Mc) {
      ctx.fail(d.at("format"), "mc-triplets data needs an mc workload");
    }
    if (data.format == DataFormat::LabeledSparse && cfg.workload.kind != WorkloadKind::Classification) {
      ctx.fail(d.at("format"), "labeled-sparse data needs a classification workload");
    }
    if (data.format == DataFormat::McTriplets && !cfg.workload.radius) {
      ctx.fail("/workload", "runs on mc-triplets data need an absolute 'radius'");
    }
    d.finish();
    cfg.data = data;
  }
  top.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

// ---------------------------------------------------------------------------

nlohmann::json RunConfig::canonical() const {
  json w;
  w["kind"] = to_string(workload.kind);
  switch (workload.kind) {
    case WorkloadKind::LassoFixed:
    case WorkloadKind::LassoRandom: {
      const auto& p = workload.lasso;
      w["n"] = p.n;
      w["m"] = p.m;
      w["sparsity_frac"] = p.sparsity_frac;
      w["sigma_w"] = p.sigma_w;
      w["r_factor"] = p.r_factor;
      w["seed"] = p.seed;
      w["reference_budget"] = workload.reference_budget;
      break;
    }
    case WorkloadKind::Mc: {
      const auto& p = workload.mc;
      w["m1"] = p.m1;
      w["m2"] = p.m2;
      w["rank"] = p.rank;
      w["noise_var"] = p.noise_var;
      w["r_factor"] = p.r_factor;
      w["link"] = ofw::to_string(p.link);
      w["seed"] = p.seed;
      break;
    }
    case WorkloadKind::Classification: {
      const auto& p = workload.classification;
      w["m1"] = p.m1;
      w["m2"] = p.m2;
      w["rank"] = p.rank;
      w["n_train"] = p.n_train;
      w["flip_frac"] = p.flip_frac;
      w["loss"] = ofw::to_string(p.loss);
      w["constraint"] = p.constraint == ClassConstraint::L1 ? "l1" : "trace";
      w["seed"] = p.seed;
      break;
    }
  }
  if (workload.radius) w["radius"] = *workload.radius;
  if (workload.kind == WorkloadKind::Mc || workload.kind == WorkloadKind::Classification) {
    w["power"] = {{"tol", workload.power.tol}, {"max_iter", workload.power.max_iter}, {"seed", workload.power.seed}};
  }

  json j;
  j["workload"] = w;
  j["solver"] = {{"kind", ofw::to_string(solver)}, {"schedule", schedule_json(schedule)}};
  j["horizon"] = run.horizon;
  j["batch"] = run.batch;
  j["inner_repeats"] = run.inner_repeats;
  j["cadence"] = cadence == Cadence::Every ? "every" : "geometric";
  if (data) {
    json d{{"path", data->path}, {"format", to_string(data->format)}};
    if (data->dim) d["dim"] = *data->dim;
    j["data"] = d;
  }
  return j;
}

std::string RunConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical().dump())));
  return buf;
}

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out;
  switch (workload.kind) {
    case WorkloadKind::LassoFixed:
    case WorkloadKind::LassoRandom: out.push_back(workload.lasso.seed); break;
    case WorkloadKind::Mc: out.push_back(workload.mc.seed); break;
    case WorkloadKind::Classification: out.push_back(workload.classification.seed); break;
  }
  if (uses_trace_ball(workload)) out.push_back(workload.power.seed);
  return out;
}

}  // namespace ofw::cli

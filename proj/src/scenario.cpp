#include "otdp/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "otdp/error.hpp"
#include "otdp/measures_json.hpp"

namespace otdp {
namespace {

using nlohmann::json;

std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// A JSON node together with its pointer, so every complaint can say where.
class Node {
 public:
  Node(const json& value, std::string pointer) : value_(&value), pointer_(std::move(pointer)) {}

  const json& value() const { return *value_; }
  const std::string& pointer() const { return pointer_; }
  [[noreturn]] void fail(const std::string& what) const { throw ValidationError(pointer_.empty() ? "/" : pointer_, what); }

  const Node& object() const {
    if (!value_->is_object()) fail("expected an object");
    return *this;
  }
  bool has(const std::string& key) const { return object().value_->contains(key); }
  Node at(const std::string& key) const {
    if (!has(key)) Node(*value_, pointer_ + "/" + escape_pointer_token(key)).fail("required key is missing");
    return Node((*value_)[key], pointer_ + "/" + escape_pointer_token(key));
  }
  std::optional<Node> find(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }
  void allow_only(std::initializer_list<const char*> keys) const {
    object();
    for (const auto& [key, _] : value_->items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        Node(*value_, pointer_ + "/" + escape_pointer_token(key)).fail("unknown key");
      }
    }
  }

  std::size_t size() const {
    if (!value_->is_array()) fail("expected an array");
    return value_->size();
  }
  std::size_t size(std::size_t expected, const char* what) const {
    const std::size_t n = size();
    if (n != expected) {
      fail(std::string("expected ") + std::to_string(expected) + " entries (" + what + "), got " + std::to_string(n));
    }
    return n;
  }
  Node operator[](std::size_t i) const { return Node((*value_)[i], pointer_ + "/" + std::to_string(i)); }

  std::string string() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
  }
  double number() const {
    if (!value_->is_number()) fail("expected a number");
    const double v = value_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  std::size_t count() const {
    if (!value_->is_number_unsigned()) fail("expected a nonnegative integer");
    return value_->get<std::size_t>();
  }
  std::uint64_t u64() const {
    if (!value_->is_number_unsigned()) fail("expected a nonnegative integer");
    return value_->get<std::uint64_t>();
  }
  bool boolean() const {
    if (!value_->is_boolean()) fail("expected true or false");
    return value_->get<bool>();
  }
  ExtReal cost() const {
    if (value_->is_string()) {
      if (value_->get<std::string>() != "+inf") fail("the only string allowed for a cost is \"+inf\"");
      return ExtReal::infinity();
    }
    const double v = number();
    if (v < 0.0) fail("costs must be nonnegative");
    return v;
  }

 private:
  const json* value_;
  std::string pointer_;
};

json cost_json(ExtReal c) { return c.is_infinite() ? json("+inf") : json(c.value()); }

template <class F>
auto with_pointer(const Node& node, F&& f) {
  try {
    return f();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    node.fail(e.what());
  }
}

Labels read_labels(const Node& node, const char* what) {
  Labels out;
  const std::size_t n = node.size();
  if (n == 0) node.fail(std::string(what) + " space is empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(node[i].string());
    if (!seen.insert(out.back()).second) node[i].fail(std::string("duplicate ") + what + " label");
  }
  return out;
}

std::size_t read_label_index(const Node& node, const Labels& labels, const char* what) {
  const std::string label = node.string();
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) node.fail(std::string("unknown ") + what + " '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

LabeledMeasure read_measure(const Node& node) {
  node.allow_only({"support", "atoms"});
  if (node.at("support").string() != "labeled") node.at("support").fail("expected \"labeled\"");
  const Node atoms = node.at("atoms");
  const std::size_t n = atoms.size();
  if (n == 0) atoms.fail("a measure needs at least one atom");
  std::vector<LabeledMeasure::Atom> list;
  std::set<std::string> seen;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Node a = atoms[i];
    a.allow_only({"point", "weight"});
    const std::string point = a.at("point").string();
    const double w = a.at("weight").number();
    if (w <= 0.0) a.at("weight").fail("weights must be positive");
    if (!seen.insert(point).second) a.at("point").fail("duplicate atom");
    list.push_back({point, w});
    total += w;
  }
  if (std::abs(total - 1.0) > kInputMassTolerance) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "weights sum to " << total << "; measures must be normalized";
    atoms.fail(msg.str());
  }
  return with_pointer(atoms, [&] { return LabeledMeasure::from_atoms(std::move(list), kInputMassTolerance); });
}

void require_labels_in(const Node& node, const LabeledMeasure& m, const Labels& labels, const char* what) {
  for (const auto& a : m.atoms()) {
    if (std::find(labels.begin(), labels.end(), a.point) == labels.end()) {
      node.fail(std::string("atom '") + a.point + "' is not a " + what + " label");
    }
  }
}

// ---------------------------------------------------------------------------
// Finite and noisy systems share the table layout; noisy stages add a noise
// axis after the input axis.

struct RawStage {
  Labels states, inputs, refs, noise;
  Eigen::VectorXd noise_law;
  std::optional<Node> dynamics, stage_cost;
};

struct RawSystem {
  std::vector<RawStage> stages;
  Labels final_states, final_refs;
  std::optional<Node> terminal;
};

void read_stage_spaces(const Node& node, RawStage& st, bool noisy) {
  st.states = read_labels(node.at("states"), "state");
  st.inputs = read_labels(node.at("inputs"), "input");
  st.refs = read_labels(node.at("references"), "reference");
  if (noisy) {
    st.noise = read_labels(node.at("noise"), "noise");
    const Node law = node.at("noise_law");
    law.size(st.noise.size(), "one weight per noise label");
    st.noise_law.resize(static_cast<Eigen::Index>(st.noise.size()));
    for (std::size_t i = 0; i < st.noise.size(); ++i) {
      const double w = law[i].number();
      if (w < 0.0) law[i].fail("noise weights must be nonnegative");
      st.noise_law[static_cast<Eigen::Index>(i)] = w;
    }
    if (std::abs(st.noise_law.sum() - 1.0) > kInputMassTolerance) law.fail("noise law must sum to one");
  }
  st.dynamics = node.at("dynamics");
  st.stage_cost = node.at("stage_cost");
}

RawSystem read_raw_system(const Node& node, bool noisy) {
  RawSystem raw;
  if (node.has("stages")) {
    node.allow_only({"stages", "final"});
    const Node stages = node.at("stages");
    const std::size_t n = stages.size();
    if (n == 0) stages.fail("horizon must be positive");
    for (std::size_t k = 0; k < n; ++k) {
      const Node s = stages[k];
      if (noisy) {
        s.allow_only({"states", "inputs", "references", "noise", "noise_law", "dynamics", "stage_cost"});
      } else {
        s.allow_only({"states", "inputs", "references", "dynamics", "stage_cost"});
      }
      RawStage st;
      read_stage_spaces(s, st, noisy);
      raw.stages.push_back(std::move(st));
    }
    const Node fin = node.at("final");
    fin.allow_only({"states", "references", "terminal_cost"});
    raw.final_states = read_labels(fin.at("states"), "state");
    raw.final_refs = read_labels(fin.at("references"), "reference");
    raw.terminal = fin.at("terminal_cost");
    return raw;
  }
  if (noisy) {
    node.allow_only({"horizon", "states", "inputs", "references", "noise", "noise_law", "dynamics", "stage_cost",
                     "terminal_cost"});
  } else {
    node.allow_only({"horizon", "states", "inputs", "references", "dynamics", "stage_cost", "terminal_cost"});
  }
  const std::size_t n = node.at("horizon").count();
  if (n == 0) node.at("horizon").fail("horizon must be positive");
  RawStage st;
  read_stage_spaces(node, st, noisy);
  raw.final_states = st.states;
  raw.final_refs = st.refs;
  raw.terminal = node.at("terminal_cost");
  raw.stages.assign(n, st);
  return raw;
}

// Reads next-state labels [x][u] or [x][u][w] and stage costs with an
// optional trailing reference axis.
void read_stage_tables(const RawStage& st, const Labels& next_states, std::vector<std::size_t>& next,
                       std::vector<ExtReal>& cost) {
  const std::size_t nx = st.states.size(), nu = st.inputs.size(), ny = st.refs.size();
  const std::size_t nw = st.noise.empty() ? 0 : st.noise.size();
  const Node& dyn = *st.dynamics;
  const Node& sc = *st.stage_cost;
  dyn.size(nx, "one row per state");
  sc.size(nx, "one row per state");
  // Reference-free tables drop the last axis.
  bool per_reference = false;
  {
    Node probe = sc[0].size() > 0 ? sc[0][0] : sc[0];
    if (nw > 0 && probe.value().is_array() && probe.size() > 0) probe = probe[0];
    per_reference = probe.value().is_array();
  }
  auto read_costs = [&](const Node& leaf) {
    if (per_reference) {
      leaf.size(ny, "one cost per reference");
      for (std::size_t r = 0; r < ny; ++r) cost.push_back(leaf[r].cost());
    } else {
      if (leaf.value().is_array()) leaf.fail("mixes reference-free and per-reference costs");
      const ExtReal c = leaf.cost();
      for (std::size_t r = 0; r < ny; ++r) cost.push_back(c);
    }
  };
  for (std::size_t x = 0; x < nx; ++x) {
    const Node drow = dyn[x], crow = sc[x];
    drow.size(nu, "one entry per input");
    crow.size(nu, "one entry per input");
    for (std::size_t u = 0; u < nu; ++u) {
      if (nw == 0) {
        next.push_back(read_label_index(drow[u], next_states, "next-state"));
        read_costs(crow[u]);
        continue;
      }
      drow[u].size(nw, "one entry per noise label");
      crow[u].size(nw, "one entry per noise label");
      for (std::size_t w = 0; w < nw; ++w) {
        next.push_back(read_label_index(drow[u][w], next_states, "next-state"));
        read_costs(crow[u][w]);
      }
    }
  }
}

std::vector<ExtReal> read_terminal(const Node& node, std::size_t nx, std::size_t ny) {
  std::vector<ExtReal> out;
  node.size(nx, "one row per final state");
  for (std::size_t x = 0; x < nx; ++x) {
    node[x].size(ny, "one cost per final reference");
    for (std::size_t r = 0; r < ny; ++r) out.push_back(node[x][r].cost());
  }
  return out;
}

template <class System>
System build_system(const Node& node, bool noisy) {
  const RawSystem raw = read_raw_system(node, noisy);
  const std::size_t n = raw.stages.size();
  std::vector<Labels> states, inputs, refs;
  std::vector<typename System::Stage> stages;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& st = raw.stages[k];
    states.push_back(st.states);
    inputs.push_back(st.inputs);
    refs.push_back(st.refs);
    const Labels& next_states = k + 1 < n ? raw.stages[k + 1].states : raw.final_states;
    typename System::Stage out;
    if constexpr (std::is_same_v<System, NoisyGroundSystem>) {
      out.noise = st.noise;
      out.noise_law = st.noise_law;
    }
    read_stage_tables(st, next_states, out.next, out.cost);
    stages.push_back(std::move(out));
  }
  states.push_back(raw.final_states);
  refs.push_back(raw.final_refs);
  auto terminal = read_terminal(*raw.terminal, raw.final_states.size(), raw.final_refs.size());
  return with_pointer(node, [&] {
    return System(std::move(states), std::move(inputs), std::move(refs), std::move(stages), std::move(terminal));
  });
}

// ---------------------------------------------------------------------------
// Writers.

ExtReal cell_cost(const GroundSystem& sys, std::size_t k, std::size_t cell, std::size_t r) {
  const std::size_t nu = sys.inputs(k).size();
  return sys.stage_cost(k, cell / nu, cell % nu, r);
}

ExtReal cell_cost(const NoisyGroundSystem& sys, std::size_t k, std::size_t cell, std::size_t r) {
  const std::size_t nu = sys.inputs(k).size(), nw = sys.noise(k).size();
  return sys.stage_cost(k, cell / (nu * nw), (cell / nw) % nu, cell % nw, r);
}

std::size_t cell_next(const GroundSystem& sys, std::size_t k, std::size_t cell) {
  const std::size_t nu = sys.inputs(k).size();
  return sys.next(k, cell / nu, cell % nu);
}

std::size_t cell_next(const NoisyGroundSystem& sys, std::size_t k, std::size_t cell) {
  const std::size_t nu = sys.inputs(k).size(), nw = sys.noise(k).size();
  return sys.next(k, cell / (nu * nw), (cell / nw) % nu, cell % nw);
}

template <class System>
bool reference_free_stage(const System& sys, std::size_t k) {
  const std::size_t ny = sys.refs(k).size();
  std::size_t cells = sys.states(k).size() * sys.inputs(k).size();
  if constexpr (std::is_same_v<System, NoisyGroundSystem>) cells *= sys.noise(k).size();
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t r = 1; r < ny; ++r) {
      if (!(cell_cost(sys, k, c, r) == cell_cost(sys, k, c, 0))) return false;
    }
  }
  return true;
}

template <class System>
json stage_tables(const System& sys, std::size_t k, json& dynamics) {
  constexpr bool noisy = std::is_same_v<System, NoisyGroundSystem>;
  const bool reduced = reference_free_stage(sys, k);
  const std::size_t nx = sys.states(k).size(), nu = sys.inputs(k).size(), ny = sys.refs(k).size();
  std::size_t nw = 1;
  if constexpr (noisy) nw = sys.noise(k).size();
  const Labels& next_states = sys.states(k + 1);
  json costs = json::array();
  dynamics = json::array();
  for (std::size_t x = 0; x < nx; ++x) {
    json drow = json::array(), crow = json::array();
    for (std::size_t u = 0; u < nu; ++u) {
      json dw = json::array(), cw = json::array();
      for (std::size_t w = 0; w < nw; ++w) {
        const std::size_t cell = (x * nu + u) * nw + w;
        dw.push_back(next_states[cell_next(sys, k, cell)]);
        if (reduced) {
          cw.push_back(cost_json(cell_cost(sys, k, cell, 0)));
        } else {
          json per = json::array();
          for (std::size_t r = 0; r < ny; ++r) per.push_back(cost_json(cell_cost(sys, k, cell, r)));
          cw.push_back(std::move(per));
        }
      }
      if (noisy) {
        drow.push_back(std::move(dw));
        crow.push_back(std::move(cw));
      } else {
        drow.push_back(std::move(dw[0]));
        crow.push_back(std::move(cw[0]));
      }
    }
    dynamics.push_back(std::move(drow));
    costs.push_back(std::move(crow));
  }
  return costs;
}

template <class System>
json stage_json(const System& sys, std::size_t k) {
  json s;
  s["states"] = sys.states(k);
  s["inputs"] = sys.inputs(k);
  s["references"] = sys.refs(k);
  if constexpr (std::is_same_v<System, NoisyGroundSystem>) {
    s["noise"] = sys.noise(k);
    json law = json::array();
    for (Eigen::Index i = 0; i < sys.noise_law(k).size(); ++i) law.push_back(sys.noise_law(k)[i]);
    s["noise_law"] = std::move(law);
  }
  json dynamics;
  s["stage_cost"] = stage_tables(sys, k, dynamics);
  s["dynamics"] = std::move(dynamics);
  return s;
}

template <class System>
json system_json(const System& sys) {
  const std::size_t n = sys.horizon();
  std::vector<json> stages;
  for (std::size_t k = 0; k < n; ++k) stages.push_back(stage_json(sys, k));
  json terminal = json::array();
  for (std::size_t x = 0; x < sys.states(n).size(); ++x) {
    json row = json::array();
    for (std::size_t r = 0; r < sys.refs(n).size(); ++r) row.push_back(cost_json(sys.terminal_cost(x, r)));
    terminal.push_back(std::move(row));
  }
  const bool invariant = std::all_of(stages.begin(), stages.end(), [&](const json& s) { return s == stages[0]; }) &&
                         sys.states(n) == sys.states(0) && sys.refs(n) == sys.refs(0);
  if (invariant) {
    json out = stages[0];
    out["horizon"] = n;
    out["terminal_cost"] = std::move(terminal);
    return out;
  }
  json out;
  out["stages"] = stages;
  out["final"] = {{"states", sys.states(n)}, {"references", sys.refs(n)}, {"terminal_cost", std::move(terminal)}};
  return out;
}

// ---------------------------------------------------------------------------
// Continuous payloads.

Eigen::MatrixXd read_matrix(const Node& node, std::optional<Eigen::Index> rows, std::optional<Eigen::Index> cols) {
  const std::size_t r = node.size();
  if (r == 0) node.fail("matrix has no rows");
  if (rows && r != static_cast<std::size_t>(*rows)) node.fail("expected " + std::to_string(*rows) + " rows");
  const std::size_t c = node[0].size();
  if (c == 0) node[0].fail("matrix has no columns");
  if (cols && c != static_cast<std::size_t>(*cols)) node[0].fail("expected " + std::to_string(*cols) + " columns");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    node[i].size(c, "rows must have equal length");
    for (std::size_t j = 0; j < c; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = node[i][j].number();
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

ParticleSource read_particles(const Node& node, std::size_t dimension) {
  ParticleSource src;
  if (node.has("sample")) {
    node.allow_only({"sample"});
    const Node s = node.at("sample");
    s.allow_only({"count", "low", "high"});
    ParticleSource::Sample sample{s.at("count").count(), s.at("low").number(), s.at("high").number()};
    if (sample.count == 0) s.at("count").fail("at least one particle is required");
    if (!(sample.low < sample.high)) s.fail("low must be below high");
    src.sample = sample;
    return src;
  }
  node.allow_only({"points"});
  const Node pts = node.at("points");
  const std::size_t n = pts.size();
  if (n == 0) pts.fail("at least one particle is required");
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].size(dimension, "one coordinate per dimension");
    Eigen::VectorXd p(static_cast<Eigen::Index>(dimension));
    for (std::size_t d = 0; d < dimension; ++d) p[static_cast<Eigen::Index>(d)] = pts[i][d].number();
    src.points.push_back(std::move(p));
  }
  return src;
}

std::size_t particle_count(const ParticleSource& src) { return src.sample ? src.sample->count : src.points.size(); }

json particles_json(const ParticleSource& src) {
  if (src.sample) {
    return {{"sample", {{"count", src.sample->count}, {"low", src.sample->low}, {"high", src.sample->high}}}};
  }
  json pts = json::array();
  for (const auto& p : src.points) {
    json row = json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(p[i]);
    pts.push_back(std::move(row));
  }
  return {{"points", std::move(pts)}};
}

void check_fleet_sizes(const Node& root, const ParticleSource& a, const ParticleSource& b) {
  if (particle_count(a) != particle_count(b)) root.at("target").fail("target must have as many particles as the initial fleet");
}

// ---------------------------------------------------------------------------

const char* mode_name(LiftMode m) {
  switch (m) {
    case LiftMode::multi:
      return "multi";
    case LiftMode::two:
      return "two";
    case LiftMode::both:
      return "both";
  }
  return "multi";
}

SolverOptions read_options(const Node& node) {
  node.allow_only({"mode", "rollout", "memory_cap", "particles", "oracle", "noise_splits", "seed"});
  SolverOptions o;
  if (auto m = node.find("mode")) {
    const std::string v = m->string();
    if (v == "multi") {
      o.mode = LiftMode::multi;
    } else if (v == "two") {
      o.mode = LiftMode::two;
    } else if (v == "both") {
      o.mode = LiftMode::both;
    } else {
      m->fail("expected \"multi\", \"two\" or \"both\"");
    }
  }
  if (auto r = node.find("rollout")) {
    const std::string v = r->string();
    if (v == "feedback") {
      o.rollout = RolloutKind::feedback;
    } else if (v == "openloop") {
      o.rollout = RolloutKind::openloop;
    } else {
      r->fail("expected \"feedback\" or \"openloop\"");
    }
  }
  if (auto c = node.find("memory_cap")) {
    o.memory_cap = c->count();
    if (o.memory_cap == 0) c->fail("memory cap must be positive");
  }
  if (auto p = node.find("particles")) {
    o.particles = p->count();
    if (*o.particles == 0) p->fail("fleet size must be positive");
  }
  if (auto b = node.find("oracle")) o.oracle = b->boolean();
  if (auto s = node.find("noise_splits")) {
    o.noise_splits = s->count();
    if (o.noise_splits == 0) s->fail("at least one chunk per atom is required");
  }
  if (auto s = node.find("seed")) o.seed = s->u64();
  return o;
}

json options_json(const SolverOptions& o) {
  json out{{"mode", mode_name(o.mode)},
           {"rollout", o.rollout == RolloutKind::feedback ? "feedback" : "openloop"},
           {"memory_cap", o.memory_cap},
           {"oracle", o.oracle},
           {"noise_splits", o.noise_splits},
           {"seed", o.seed}};
  if (o.particles) out["particles"] = *o.particles;
  return out;
}

template <class System>
std::vector<LabeledMeasure> read_references(const Node& node, const System& sys) {
  const std::size_t n = sys.horizon();
  const std::size_t count = node.size();
  if (count != 1 && count != n + 1) {
    node.fail("expected rho_N alone or one reference per stage (" + std::to_string(n + 1) + "), got " +
              std::to_string(count));
  }
  std::vector<LabeledMeasure> refs;
  for (std::size_t i = 0; i < count; ++i) {
    refs.push_back(read_measure(node[i]));
    if (count == 1) {
      for (std::size_t k = 0; k <= n; ++k) require_labels_in(node[i], refs.back(), sys.refs(k), "reference");
    } else {
      require_labels_in(node[i], refs.back(), sys.refs(i), "reference");
    }
  }
  return refs;
}

template <class System>
std::vector<Eigen::VectorXd> reference_weights_impl(const System& sys, const std::vector<LabeledMeasure>& refs) {
  const std::size_t n = sys.horizon();
  if (refs.size() != 1 && refs.size() != n + 1) throw DomainError("scenario", "reference count does not match the horizon");
  std::vector<Eigen::VectorXd> out;
  for (std::size_t k = 0; k <= n; ++k) out.push_back(weights_over(refs.size() == 1 ? refs[0] : refs[k], sys.refs(k)));
  return out;
}

}  // namespace

std::string Scenario::kind() const {
  switch (payload.index()) {
    case 0:
      return "finite";
    case 1:
      return "noisy";
    case 2:
      return "integrator";
    default:
      return "lqr";
  }
}

Eigen::VectorXd weights_over(const LabeledMeasure& m, const Labels& labels) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels.size()));
  for (const auto& a : m.atoms()) {
    auto it = std::find(labels.begin(), labels.end(), a.point);
    if (it == labels.end()) throw DomainError("scenario", "atom '" + a.point + "' is not in the space");
    w[it - labels.begin()] += a.weight;
  }
  return w;
}

std::vector<Eigen::VectorXd> reference_weights(const GroundSystem& sys, const std::vector<LabeledMeasure>& refs) {
  return reference_weights_impl(sys, refs);
}

std::vector<Eigen::VectorXd> reference_weights(const NoisyGroundSystem& sys, const std::vector<LabeledMeasure>& refs) {
  return reference_weights_impl(sys, refs);
}

Particles realize(const ParticleSource& source, std::size_t dimension, std::mt19937_64& rng) {
  if (!source.sample) {
    for (const auto& p : source.points) {
      if (static_cast<std::size_t>(p.size()) != dimension) throw DomainError("scenario", "particle dimension mismatch");
    }
    return source.points;
  }
  std::uniform_real_distribution<double> coord(source.sample->low, source.sample->high);
  Particles out;
  for (std::size_t i = 0; i < source.sample->count; ++i) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(dimension));
    for (Eigen::Index d = 0; d < p.size(); ++d) p[d] = coord(rng);
    out.push_back(std::move(p));
  }
  return out;
}

Scenario parse_scenario(const json& j) {
  const Node root(j, "");
  root.allow_only({"schema", "name", "description", "kind", "system", "initial", "references", "target", "options"});
  if (root.at("schema").string() != "otdp-scenario/1") root.at("schema").fail("expected \"otdp-scenario/1\"");
  const std::string name = root.at("name").string();
  if (name.empty()) root.at("name").fail("name must not be empty");
  std::string description;
  if (auto d = root.find("description")) description = d->string();
  const SolverOptions options = root.has("options") ? read_options(root.at("options")) : SolverOptions{};
  const Node kind = root.at("kind");
  const std::string k = kind.string();

  auto forbid = [&](const char* key) {
    if (root.has(key)) root.at(key).fail(std::string("not used by ") + k + " scenarios");
  };

  if (k == "finite" || k == "noisy") {
    forbid("target");
    const Node sys_node = root.at("system");
    auto read_finite = [&](const auto& sys) {
      LabeledMeasure initial = read_measure(root.at("initial"));
      require_labels_in(root.at("initial"), initial, sys.states(0), "state");
      auto refs = read_references(root.at("references"), sys);
      return std::make_pair(std::move(initial), std::move(refs));
    };
    if (k == "finite") {
      auto sys = build_system<GroundSystem>(sys_node, false);
      auto [initial, refs] = read_finite(sys);
      return Scenario{name, description, FiniteScenario{std::move(sys), std::move(initial), std::move(refs)}, options};
    }
    auto sys = build_system<NoisyGroundSystem>(sys_node, true);
    auto [initial, refs] = read_finite(sys);
    return Scenario{name, description, NoisyScenario{std::move(sys), std::move(initial), std::move(refs)}, options};
  }
  if (k == "integrator") {
    forbid("references");
    const Node s = root.at("system");
    s.allow_only({"horizon", "dimension"});
    IntegratorScenario p;
    p.horizon = s.at("horizon").count();
    if (p.horizon == 0) s.at("horizon").fail("horizon must be positive");
    p.dimension = s.at("dimension").count();
    if (p.dimension == 0) s.at("dimension").fail("dimension must be positive");
    p.initial = read_particles(root.at("initial"), p.dimension);
    p.target = read_particles(root.at("target"), p.dimension);
    check_fleet_sizes(root, p.initial, p.target);
    return Scenario{name, description, std::move(p), options};
  }
  if (k == "lqr") {
    forbid("references");
    const Node s = root.at("system");
    s.allow_only({"horizon", "A", "B", "R", "Q", "terminal"});
    const std::size_t horizon = s.at("horizon").count();
    if (horizon == 0) s.at("horizon").fail("horizon must be positive");
    const Eigen::MatrixXd a = read_matrix(s.at("A"), std::nullopt, std::nullopt);
    if (a.rows() != a.cols()) s.at("A").fail("A must be square");
    const Eigen::MatrixXd b = read_matrix(s.at("B"), a.rows(), std::nullopt);
    const Eigen::MatrixXd r = read_matrix(s.at("R"), b.cols(), b.cols());
    const Eigen::MatrixXd terminal = read_matrix(s.at("terminal"), a.rows(), a.rows());
    Eigen::MatrixXd q;
    if (auto qn = s.find("Q")) q = read_matrix(*qn, a.rows(), a.rows());
    LqrScenario p{with_pointer(s, [&] { return lqr::System<double>::time_invariant(horizon, a, b, r, terminal, q); }), {}, {}};
    const auto dim = static_cast<std::size_t>(a.rows());
    p.initial = read_particles(root.at("initial"), dim);
    p.target = read_particles(root.at("target"), dim);
    check_fleet_sizes(root, p.initial, p.target);
    return Scenario{name, description, std::move(p), options};
  }
  kind.fail("expected \"finite\", \"noisy\", \"integrator\" or \"lqr\"");
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("scenario", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("/", std::string("not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

json scenario_to_json(const Scenario& s) {
  json out{{"schema", "otdp-scenario/1"},
           {"name", s.name},
           {"description", s.description},
           {"kind", s.kind()},
           {"options", options_json(s.options)}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FiniteScenario> || std::is_same_v<T, NoisyScenario>) {
          out["system"] = system_json(p.system);
          out["initial"] = to_json(p.initial);
          json refs = json::array();
          for (const auto& r : p.references) refs.push_back(to_json(r));
          out["references"] = std::move(refs);
        } else if constexpr (std::is_same_v<T, IntegratorScenario>) {
          out["system"] = {{"horizon", p.horizon}, {"dimension", p.dimension}};
          out["initial"] = particles_json(p.initial);
          out["target"] = particles_json(p.target);
        } else {
          const auto& st = p.system.stages.at(0);
          json sys{{"horizon", p.system.horizon()},
                   {"A", matrix_json(st.a)},
                   {"B", matrix_json(st.b)},
                   {"R", matrix_json(st.r)},
                   {"terminal", matrix_json(p.system.terminal)}};
          if (st.q.size() > 0) sys["Q"] = matrix_json(st.q);
          out["system"] = std::move(sys);
          out["initial"] = particles_json(p.initial);
          out["target"] = particles_json(p.target);
        }
      },
      s.payload);
  return out;
}

std::string canonical_text(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("scenario", "cannot write " + path.string());
  out << canonical_text(s);
}

std::string scenario_hash(const Scenario& s) {
  const std::string text = canonical_text(s);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw SolverFailure("scenario", "SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

}  // namespace otdp

#include "memsim/circuit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace memsim::circuit {

NodeId Netlist::add_node(std::string name, double initial_voltage) {
  names_.push_back(std::move(name));
  initial_.push_back(initial_voltage);
  return names_.size() - 1;
}

void Netlist::add(Element e) { elements_.push_back(std::move(e)); }

void Netlist::set_initial(NodeId n, double v) {
  if (n == kGround || n >= initial_.size()) {
    throw std::out_of_range("netlist: bad node for initial voltage");
  }
  initial_[n] = v;
}

NodeId Netlist::find_node(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("netlist: no node " + name);
  return static_cast<NodeId>(it - names_.begin());
}

namespace {

struct Checker {
  std::size_t nodes;

  void node(NodeId n) const {
    if (n >= nodes) throw std::invalid_argument("netlist: terminal out of range");
  }
  void positive(double v, const char* what) const {
    if (!(v > 0.0)) {
      throw std::invalid_argument(std::string("netlist: ") + what +
                                  " must be positive");
    }
  }

  void operator()(const Capacitor& e) const {
    node(e.a);
    node(e.b);
    positive(e.c, "capacitance");
  }
  void operator()(const Resistor& e) const {
    node(e.a);
    node(e.b);
    positive(e.r, "resistance");
  }
  void operator()(const MosSwitch& e) const {
    node(e.a);
    node(e.b);
    e.params.validate();
    if (e.params.polarity != device::Polarity::kNmos) {
      throw std::invalid_argument("netlist: switches must be NMOS");
    }
  }
  void operator()(const LeakageSink& e) const {
    node(e.node);
    e.model.validate();
  }
  void operator()(const OpAmpBlock& e) const {
    node(e.in);
    node(e.out);
    positive(e.r0, "r0");
    if (!(e.r1 >= 0.0)) throw std::invalid_argument("netlist: r1 must be >= 0");
    positive(e.rail, "rail");
    positive(e.gbw, "gbw");
    positive(e.r_in, "r_in");
    if (e.out == kGround) throw std::invalid_argument("netlist: op-amp output grounded");
  }
  void operator()(const VSource& e) const {
    node(e.node);
    if (e.node == kGround) throw std::invalid_argument("netlist: source grounded");
  }
};

// Unknown vector layout: node voltages 1..N-1, then one branch current per
// VSource and OpAmpBlock, in element order.
class System {
 public:
  System(const Netlist& netlist, std::span<const double> prev, double t1,
         double dt)
      : netlist_(netlist), prev_(prev), t1_(t1), dt_(dt) {
    nv_ = netlist.node_count() - 1;
    std::size_t branches = 0;
    for (const auto& e : netlist.elements()) {
      if (std::holds_alternative<VSource>(e) || std::holds_alternative<OpAmpBlock>(e)) {
        ++branches;
      }
    }
    size_ = nv_ + branches;
  }

  std::size_t size() const { return size_; }
  std::size_t voltage_count() const { return nv_; }

  void assemble(const Eigen::VectorXd& x, Eigen::MatrixXd& jac,
                Eigen::VectorXd& res) const {
    jac.setZero(size_, size_);
    res.setZero(size_);
    std::size_t branch = nv_;
    auto v = [&](NodeId n) { return n == kGround ? 0.0 : x[n - 1]; };
    auto addf = [&](NodeId n, double i) {
      if (n != kGround) res[n - 1] += i;
    };
    auto addj = [&](NodeId row, NodeId col, double g) {
      if (row != kGround && col != kGround) jac(row - 1, col - 1) += g;
    };
    auto conductance = [&](NodeId a, NodeId b, double g) {
      addj(a, a, g);
      addj(b, b, g);
      addj(a, b, -g);
      addj(b, a, -g);
    };

    for (const auto& elem : netlist_.elements()) {
      if (const auto* c = std::get_if<Capacitor>(&elem)) {
        const double g = c->c / dt_;
        const double dv = (v(c->a) - v(c->b)) - (prev_[c->a] - prev_[c->b]);
        addf(c->a, g * dv);
        addf(c->b, -g * dv);
        conductance(c->a, c->b, g);
      } else if (const auto* r = std::get_if<Resistor>(&elem)) {
        const double g = 1.0 / r->r;
        const double i = g * (v(r->a) - v(r->b));
        addf(r->a, i);
        addf(r->b, -i);
        conductance(r->a, r->b, g);
      } else if (const auto* m = std::get_if<MosSwitch>(&elem)) {
        NodeId hi = m->a;
        NodeId lo = m->b;
        if (v(hi) < v(lo)) std::swap(hi, lo);
        const double vlo = v(lo);
        const device::MosBias bias{m->gate(t1_) - vlo, v(hi) - vlo,
                                   std::max(vlo, 0.0)};
        const device::OperatingPoint op = device::operating_point(m->params, bias);
        addf(hi, op.id);
        addf(lo, -op.id);
        const double d_hi = op.gds;
        const double d_lo = -op.gm - op.gds + (vlo > 0.0 ? op.gmbs : 0.0);
        addj(hi, hi, d_hi);
        addj(hi, lo, d_lo);
        addj(lo, hi, -d_hi);
        addj(lo, lo, -d_lo);
      } else if (const auto* s = std::get_if<LeakageSink>(&elem)) {
        addf(s->node, s->model.current(v(s->node)));
        addj(s->node, s->node, s->model.conductance(v(s->node)));
      } else if (const auto* amp = std::get_if<OpAmpBlock>(&elem)) {
        const double gin = 1.0 / amp->r_in;
        addf(amp->in, gin * v(amp->in));
        addj(amp->in, amp->in, gin);

        const std::size_t row = branch++;
        const double j = x[row];
        addf(amp->out, -j);
        if (amp->out != kGround) jac(amp->out - 1, row) -= 1.0;

        const double target = amp->gain() * v(amp->in);
        const double clamped = std::clamp(target, -amp->rail, amp->rail);
        const double slope =
            (target > -amp->rail && target < amp->rail) ? amp->gain() : 0.0;
        double lag = 0.0;
        if (std::isfinite(amp->gbw)) {
          const double tau = amp->gain() / (2.0 * M_PI * amp->gbw);
          lag = tau / dt_;
        }
        res[row] = (1.0 + lag) * v(amp->out) - lag * prev_[amp->out] - clamped;
        jac(row, amp->out - 1) += 1.0 + lag;
        if (amp->in != kGround) jac(row, amp->in - 1) -= slope;
      } else if (const auto* src = std::get_if<VSource>(&elem)) {
        const std::size_t row = branch++;
        const double j = x[row];
        addf(src->node, -j);
        jac(src->node - 1, row) -= 1.0;
        res[row] = v(src->node) - src->w(t1_);
        jac(row, src->node - 1) += 1.0;
      }
    }
  }

 private:
  const Netlist& netlist_;
  std::span<const double> prev_;
  double t1_;
  double dt_;
  std::size_t nv_ = 0;
  std::size_t size_ = 0;
};

}  // namespace

void Netlist::validate() const {
  const Checker check{names_.size()};
  for (const auto& e : elements_) std::visit(check, e);
}

std::size_t Trace::index_of_time(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) {
    throw std::out_of_range("trace: time not sampled");
  }
  return static_cast<std::size_t>(it - times.begin());
}

std::vector<double> Trace::column(NodeId node) const {
  std::vector<double> out;
  out.reserve(voltages.size());
  for (const auto& row : voltages) out.push_back(row[node]);
  return out;
}

std::vector<double> initial_state(const Netlist& netlist, double t) {
  auto init = netlist.initial_voltages();
  std::vector<double> state(init.begin(), init.end());
  for (const auto& e : netlist.elements()) {
    if (const auto* src = std::get_if<VSource>(&e)) state[src->node] = src->w(t);
  }
  for (const auto& e : netlist.elements()) {
    if (const auto* amp = std::get_if<OpAmpBlock>(&e)) {
      if (!std::isfinite(amp->gbw)) {
        state[amp->out] =
            std::clamp(amp->gain() * state[amp->in], -amp->rail, amp->rail);
      }
    }
  }
  state[kGround] = 0.0;
  return state;
}

std::vector<double> step(const Netlist& netlist, std::span<const double> state,
                         double t, double dt, const NewtonOptions& opts) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("step: tol must be positive");
  if (state.size() != netlist.node_count()) {
    throw std::invalid_argument("step: state size does not match netlist");
  }
  const double t1 = t + dt;
  const System sys(netlist, state, t1, dt);
  const std::size_t nv = sys.voltage_count();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.size()));
  for (std::size_t i = 0; i < nv; ++i) x[i] = state[i + 1];

  Eigen::MatrixXd jac;
  Eigen::VectorXd res;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    sys.assemble(x, jac, res);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      throw SingularSystemError("singular nodal system (floating node?)", t1);
    }
    Eigen::VectorXd delta = lu.solve(-res);
    const double biggest =
        nv > 0 ? delta.head(static_cast<Eigen::Index>(nv)).cwiseAbs().maxCoeff()
               : 0.0;
    const double scale = biggest > opts.max_update ? opts.max_update / biggest : 1.0;
    x += scale * delta;
    if (scale == 1.0 && biggest < opts.tol) {
      std::vector<double> out(netlist.node_count(), 0.0);
      for (std::size_t i = 0; i < nv; ++i) out[i + 1] = x[i];
      return out;
    }
  }
  throw ConvergenceError("Newton iteration did not converge (dt too large?)", t1);
}

namespace {

std::vector<double> collect_breakpoints(const Netlist& netlist) {
  std::vector<double> times;
  auto take = [&](const PwlWaveform& w) {
    for (const auto& b : w.breakpoints()) times.push_back(b.time);
  };
  for (const auto& e : netlist.elements()) {
    if (const auto* m = std::get_if<MosSwitch>(&e)) take(m->gate);
    if (const auto* s = std::get_if<VSource>(&e)) take(s->w);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

bool any_transition(const Netlist& netlist, double t0, double t1) {
  for (const auto& e : netlist.elements()) {
    if (const auto* m = std::get_if<MosSwitch>(&e)) {
      if (m->gate.transitioning(t0, t1)) return true;
    }
    if (const auto* s = std::get_if<VSource>(&e)) {
      if (s->w.transitioning(t0, t1)) return true;
    }
  }
  return false;
}

}  // namespace

Trace run_transient(const Netlist& netlist, double t_stop,
                    const StepPolicy& policy) {
  if (!(t_stop > 0.0)) throw std::invalid_argument("transient: t_stop must be positive");
  if (!(policy.fine_dt > 0.0) || !(policy.max_dt >= policy.fine_dt) ||
      !(policy.event_guard >= 0.0)) {
    throw std::invalid_argument("transient: invalid step policy");
  }
  netlist.validate();

  const std::vector<double> breakpoints = collect_breakpoints(netlist);
  std::vector<double> events;
  for (double b : breakpoints) {
    if (b > 0.0 && b < t_stop) events.push_back(b);
  }
  events.push_back(t_stop);

  auto near_breakpoint = [&](double t) {
    auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(),
                               t - policy.event_guard);
    return it != breakpoints.end() && *it <= t + policy.event_guard;
  };

  Trace trace;
  for (std::size_t n = 0; n < netlist.node_count(); ++n) {
    trace.node_names.push_back(netlist.node_name(n));
  }
  std::vector<double> state = initial_state(netlist, 0.0);
  double t = 0.0;
  trace.times.push_back(t);
  trace.voltages.push_back(state);

  auto next = events.begin();
  while (t < t_stop) {
    while (*next <= t) ++next;
    const double event = *next;

    double dt = policy.fine_dt;
    if (!near_breakpoint(t)) {
      dt = std::min(policy.max_dt, (event - policy.event_guard) - t);
      if (dt < policy.fine_dt || any_transition(netlist, t, t + dt)) {
        dt = policy.fine_dt;
      }
    }
    double t1 = t + dt;
    if (t1 >= event || event - t1 < 1e-3 * policy.fine_dt) {
      t1 = event;
      dt = event - t;
    }

    try {
      state = step(netlist, state, t, dt, policy.newton);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(e.what(), t1);
    } catch (const SingularSystemError& e) {
      throw SingularSystemError(e.what(), t1);
    }
    t = t1;
    trace.times.push_back(t);
    trace.voltages.push_back(state);
  }
  return trace;
}

void write_csv(std::ostream& os, const Trace& trace) {
  os << "time";
  for (std::size_t n = 1; n < trace.node_names.size(); ++n) {
    os << ',' << trace.node_names[n];
  }
  os << '\n';
  char buf[32];
  for (std::size_t r = 0; r < trace.times.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", trace.times[r]);
    os << buf;
    for (std::size_t n = 1; n < trace.voltages[r].size(); ++n) {
      std::snprintf(buf, sizeof buf, "%.17g", trace.voltages[r][n]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace memsim::circuit

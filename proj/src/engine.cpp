#include "skewsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "skewsim/error.hpp"
#include "skewsim/parallel.hpp"
#include "skewsim/rng.hpp"

namespace skewsim {

namespace {

// Holds the rest of the path at the boundary it crossed.
bool absorb(std::span<double> out, int from, double edge) {
    std::fill(out.begin() + from, out.end(), edge);
    return false;
}

void check_sizes(const TimeGrid& grid, std::span<const double> dW, std::span<double> out) {
    auto n = static_cast<std::size_t>(grid.steps());
    if (dW.size() != n || out.size() != n + 1) throw InputError("scheme buffers do not match the time grid");
}

}  // namespace

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps), dt_(0.0) {
    if (!std::isfinite(horizon) || !(horizon > 0.0)) throw InputError("time horizon must be positive and finite");
    if (steps < 1) throw InputError("time grid needs at least one step");
    dt_ = horizon / steps;
}

BrownianDriver::BrownianDriver(std::uint64_t seed, int paths, TimeGrid grid)
    : seed_(seed), paths_(paths), grid_(grid), scale_(std::sqrt(grid.dt())) {
    if (paths < 1) throw InputError("driver needs at least one path");
}

namespace {

std::pair<double, double> normal_pair(std::uint64_t seed, int path, std::uint64_t block) {
    Philox4x32::Counter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                            static_cast<std::uint32_t>(path), 0u};
    Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    auto r = Philox4x32::block(ctr, key);
    double u1 = open_unit(std::uint64_t{r[0]} | (std::uint64_t{r[1]} << 32));
    double u2 = open_unit(std::uint64_t{r[2]} | (std::uint64_t{r[3]} << 32));
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

double BrownianDriver::increment(int path, int step) const {
    if (path < 0 || path >= paths_ || step < 0 || step >= grid_.steps()) throw InputError("driver index out of range");
    auto [z0, z1] = normal_pair(seed_, path, static_cast<std::uint64_t>(step) / 2);
    return scale_ * (step % 2 == 0 ? z0 : z1);
}

void BrownianDriver::fill(int path, std::span<double> out) const {
    if (path < 0 || path >= paths_) throw InputError("driver path out of range");
    auto n = static_cast<std::size_t>(grid_.steps());
    if (out.size() != n) throw InputError("driver buffer does not match the time grid");
    for (std::size_t k = 0; k < n; k += 2) {
        auto [z0, z1] = normal_pair(seed_, path, k / 2);
        out[k] = scale_ * z0;
        if (k + 1 < n) out[k + 1] = scale_ * z1;
    }
}

std::vector<double> BrownianDriver::materialize() const {
    auto n = static_cast<std::size_t>(grid_.steps());
    auto m = static_cast<std::size_t>(paths_);
    if (n * m > memory_budget / sizeof(double)) throw ResourceError("driver exceeds the memory budget; stream paths instead");
    std::vector<double> out(n * m);
    for (std::size_t p = 0; p < m; ++p) fill(static_cast<int>(p), std::span<double>(out.data() + p * n, n));
    return out;
}

BrownianDriver sample_driver(std::uint64_t seed, int paths, const TimeGrid& grid) {
    return BrownianDriver(seed, paths, grid);
}

double sup_abs(const RealFunction& f, double lo, double hi, int n) {
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
        best = std::max(best, std::abs(f(x)));
    }
    return best;
}

// ---------------------------------------------------------------- transform

TransformScheme::TransformScheme(const DiffusionSpec& spec, const SignedMeasure& nu, const SchemeOptions& options)
    : sigma_(spec.sigma) {
    if (spec.has_drift())
        throw InputError("the transform scheme takes a driftless spec; fold the drift into the measure first");
    transform_ = std::make_shared<const ZvonkinTransform>(
        build_transform(restrict(nu, spec.zero_set), options.x_min, options.x_max, options.resolution));
}

bool TransformScheme::run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
                          std::span<double>) const {
    check_sizes(grid, dW, out);
    const auto& t = *transform_;
    if (!t.in_domain(x0)) throw InputError("initial condition outside the working domain");
    double x = x0;
    double y = t.F(x0);
    double fx = t.f(x0);
    out[0] = x0;
    const int n = grid.steps();
    for (int k = 0; k < n; ++k) {
        double inc = fx * sigma_(x) * dW[k];
        if (inc == 0.0) {
            out[k + 1] = x;
            continue;
        }
        y += inc;
        if (!t.in_image(y)) return absorb(out, k + 1, y < t.y_min() ? t.x_min() : t.x_max());
        std::tie(x, fx) = t.inverse_and_f(y);
        out[k + 1] = x;
    }
    return true;
}

// ---------------------------------------------------------------- atoms

AtomicFlow AtomicFlow::constant(const SignedMeasure& nu) {
    if (!nu.purely_atomic()) throw InputError("an atomic flow needs a purely atomic measure");
    AtomicFlow flow;
    for (const auto& a : nu.atoms()) {
        double w = a.weight;
        flow.atoms.push_back(FlowAtom{a.location, [w](double) { return w; }, 0.0});
    }
    return flow;
}

AtomicFlow AtomicFlow::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("atoms") || !doc["atoms"].is_array())
        throw ConfigError("flow must be an object with an atoms array");
    check_keys(doc, {"atoms"}, "flow");
    AtomicFlow flow;
    for (const auto& item : doc["atoms"]) {
        if (!item.is_object() || !item.contains("a") || !item["a"].is_number() || !item.contains("beta"))
            throw ConfigError("flow atoms need a numeric a and a beta");
        check_keys(item, {"a", "beta", "M"}, "flow atom");
        FlowAtom atom;
        atom.location = item["a"].get<double>();
        const auto& beta = item["beta"];
        if (beta.is_number()) {
            double b = beta.get<double>();
            atom.beta = [b](double) { return b; };
        } else {
            atom.beta = make_function(beta);
        }
        atom.derivative_bound = item.value("M", 0.0);
        flow.atoms.push_back(std::move(atom));
    }
    std::sort(flow.atoms.begin(), flow.atoms.end(),
              [](const FlowAtom& l, const FlowAtom& r) { return l.location < r.location; });
    return flow;
}

void AtomicFlow::validate(const TimeGrid& grid) const {
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto& atom = atoms[i];
        if (!std::isfinite(atom.location)) throw ConfigError("flow atom location must be finite");
        if (i > 0 && !(atom.location > atoms[i - 1].location)) throw ConfigError("flow atom locations must be distinct and sorted");
        double prev = 0.0;
        for (int k = 0; k <= grid.steps(); ++k) {
            double b = atom.beta(grid.time(k));
            if (!(std::abs(b) < 1.0)) {
                std::ostringstream msg;
                msg << "(A1) flow coefficient at " << atom.location << " reaches " << b << " at t = " << grid.time(k);
                throw ConditionError("A1", atom.location, msg.str());
            }
            if (k > 0 && std::abs(b - prev) > (atom.derivative_bound * grid.dt()) * (1.0 + 1e-9) + 1e-15)
                throw ConfigError("flow coefficient violates its declared derivative bound");
            prev = b;
        }
    }
}

AtomScheme::AtomScheme(const DiffusionSpec& spec, AtomicFlow flow, const TimeGrid& grid, const SchemeOptions& options)
    : sigma_(spec.sigma), flow_(std::move(flow)), zone_(0.0), x_min_(options.x_min), x_max_(options.x_max) {
    if (spec.has_drift()) throw InputError("the atom scheme takes a driftless spec");
    flow_.validate(grid);
    double sigma_max = sup_abs(sigma_, x_min_, x_max_);
    if (!std::isfinite(sigma_max)) throw ConfigError("sigma must be bounded on the working domain");
    zone_ = 6.0 * sigma_max * std::sqrt(grid.dt());
    for (std::size_t i = 0; i < flow_.atoms.size(); ++i) {
        double a = flow_.atoms[i].location;
        if (a < x_min_ || a > x_max_) throw InputError("flow atom outside the working domain");
        if (i > 0 && a - flow_.atoms[i - 1].location <= 2.0 * zone_)
            throw ConfigError("atom influence zones overlap; refine the time step or separate the atoms");
    }
}

bool AtomScheme::run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
                     std::span<double>) const {
    check_sizes(grid, dW, out);
    if (x0 < x_min_ || x0 > x_max_) throw InputError("initial condition outside the working domain");
    const auto& atoms = flow_.atoms;
    double x = x0;
    out[0] = x0;
    const int n = grid.steps();
    for (int k = 0; k < n; ++k) {
        const FlowAtom* near = nullptr;
        if (!atoms.empty()) {
            auto it = std::lower_bound(atoms.begin(), atoms.end(), x,
                                       [](const FlowAtom& a, double v) { return a.location < v; });
            if (it == atoms.end())
                near = &atoms.back();
            else if (it == atoms.begin() || it->location - x < x - std::prev(it)->location)
                near = &*it;
            else
                near = &*std::prev(it);
        }
        double s = sigma_(x);
        double beta = near ? near->beta(grid.time(k)) : 0.0;
        if (beta == 0.0 || std::abs(x - near->location) > zone_) {
            double inc = s * dW[k];
            if (inc != 0.0) x = x + inc;
        } else {
            double a = near->location;
            double c = (1.0 - beta) / (1.0 + beta);
            bool right = x >= a;
            double inc = (right ? c : 1.0) * s * dW[k];
            if (inc != 0.0) {
                double y = (right ? c * (x - a) : x - a) + inc;
                x = y < 0.0 ? a + y : a + y / c;
            }
        }
        if (x < x_min_ || x > x_max_) return absorb(out, k + 1, x < x_min_ ? x_min_ : x_max_);
        out[k + 1] = x;
    }
    return true;
}

// ---------------------------------------------------------------- reflected

ReflectedScheme::ReflectedScheme(const DiffusionSpec& spec) : sigma_(spec.sigma) {
    if (spec.has_drift()) throw InputError("the reflected scheme takes a driftless spec");
}

bool ReflectedScheme::run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
                          std::span<double> aux) const {
    check_sizes(grid, dW, out);
    if (aux.size() != out.size()) throw InputError("reflected scheme needs an auxiliary buffer");
    if (!(x0 >= 0.0)) throw InputError("reflected SDE needs x0 >= 0");
    double x = x0;
    double push = 0.0;
    out[0] = x0;
    aux[0] = 0.0;
    const int n = grid.steps();
    for (int k = 0; k < n; ++k) {
        double inc = sigma_(x) * dW[k];
        if (inc != 0.0) {
            double trial = x + inc;
            x = std::max(trial, 0.0);
            push += x - trial;
        }
        out[k + 1] = x;
        aux[k + 1] = push;
    }
    return true;
}

// ---------------------------------------------------------------- classical

ClassicalScheme::ClassicalScheme(const DiffusionSpec& spec, const SchemeOptions& options)
    : sigma_(spec.sigma), drift_(spec.drift), x_min_(options.x_min), x_max_(options.x_max) {
    if (!(x_min_ < x_max_)) throw InputError("working domain needs x_min < x_max");
}

bool ClassicalScheme::run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
                          std::span<double>) const {
    check_sizes(grid, dW, out);
    if (x0 < x_min_ || x0 > x_max_) throw InputError("initial condition outside the working domain");
    const double dt = grid.dt();
    double x = x0;
    out[0] = x0;
    const int n = grid.steps();
    for (int k = 0; k < n; ++k) {
        double move = sigma_(x) * dW[k];
        if (drift_) move += drift_(x) * dt;
        if (move != 0.0) x = x + move;
        if (x < x_min_ || x > x_max_) return absorb(out, k + 1, x < x_min_ ? x_min_ : x_max_);
        out[k + 1] = x;
    }
    return true;
}

// ---------------------------------------------------------------- path sets

int PathSet::exit_count() const { return static_cast<int>(std::count(exited.begin(), exited.end(), 1)); }

std::string PathSet::to_csv() const {
    std::string out = "# seed=" + std::to_string(seed) + ",scheme=" + scheme + ",spec_hash=" + spec_hash + "\n";
    out += "t";
    for (int p = 0; p < paths; ++p) out += ",path_" + std::to_string(p);
    out += '\n';
    for (int k = 0; k < width(); ++k) {
        out += format_double(grid.time(k));
        for (int p = 0; p < paths; ++p) {
            out += ',';
            out += format_double(at(p, k));
        }
        out += '\n';
    }
    return out;
}

void for_each_path(const Scheme& scheme, double x0, const BrownianDriver& driver, int threads, const PathVisitor& visit) {
    const TimeGrid& grid = driver.grid();
    auto n = static_cast<std::size_t>(grid.steps());
    parallel_for(static_cast<std::size_t>(driver.paths()), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> dW(n);
        std::vector<double> out(n + 1);
        std::vector<double> aux(scheme.has_aux() ? n + 1 : 0);
        for (std::size_t p = begin; p < end; ++p) {
            driver.fill(static_cast<int>(p), dW);
            bool ok = scheme.run(x0, grid, dW, out, aux);
            visit(static_cast<int>(p), out, aux, !ok);
        }
    });
}

PathSet simulate(const Scheme& scheme, double x0, const BrownianDriver& driver, int threads, const std::string& spec_hash) {
    PathSet set;
    set.grid = driver.grid();
    set.paths = driver.paths();
    set.scheme = scheme.name();
    set.spec_hash = spec_hash;
    set.seed = driver.seed();
    auto width = static_cast<std::size_t>(set.width());
    auto m = static_cast<std::size_t>(set.paths);
    std::size_t copies = scheme.has_aux() ? 2 : 1;
    if (width * m > memory_budget / (sizeof(double) * copies))
        throw ResourceError("path set exceeds the memory budget; stream paths instead");
    set.values.resize(width * m);
    if (scheme.has_aux()) set.aux.resize(width * m);
    set.exited.assign(m, 0);
    for_each_path(scheme, x0, driver, threads,
                  [&](int p, std::span<const double> x, std::span<const double> aux, bool exited) {
                      auto offset = static_cast<std::size_t>(p) * width;
                      std::copy(x.begin(), x.end(), set.values.begin() + static_cast<std::ptrdiff_t>(offset));
                      if (!aux.empty())
                          std::copy(aux.begin(), aux.end(), set.aux.begin() + static_cast<std::ptrdiff_t>(offset));
                      set.exited[static_cast<std::size_t>(p)] = exited ? 1 : 0;
                  });
    return set;
}

PathSet simulate_transform_scheme(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                  const BrownianDriver& driver, const SchemeOptions& options) {
    TransformScheme scheme(spec, nu, options);
    return simulate(scheme, x0, driver, options.threads, spec.hash());
}

PathSet simulate_atom_scheme(const DiffusionSpec& spec, const AtomicFlow& flow, double x0, const BrownianDriver& driver,
                             const SchemeOptions& options) {
    AtomScheme scheme(spec, flow, driver.grid(), options);
    return simulate(scheme, x0, driver, options.threads, spec.hash());
}

PathSet simulate_reflected(const DiffusionSpec& spec, double x0, const BrownianDriver& driver,
                           const SchemeOptions& options) {
    if (!(x0 >= 0.0)) throw InputError("reflected SDE needs x0 >= 0");
    ReflectedScheme scheme(spec);
    return simulate(scheme, x0, driver, options.threads, spec.hash());
}

PathSet simulate_classical(const DiffusionSpec& spec, double x0, const BrownianDriver& driver,
                           const SchemeOptions& options) {
    ClassicalScheme scheme(spec, options);
    return simulate(scheme, x0, driver, options.threads, spec.hash());
}

std::unique_ptr<Scheme> make_scheme(const std::string& name, const DiffusionSpec& spec, const SignedMeasure& nu,
                                    const TimeGrid& grid, const SchemeOptions& options) {
    if (name == "transform") {
        if (!spec.has_drift()) return std::make_unique<TransformScheme>(spec, nu, options);
        if (!nu.empty()) throw ConfigError("give either a drift or a measure to the transform scheme, not both");
        auto folded = drift_to_measure(spec, options.x_min, options.x_max, options.resolution);
        return std::make_unique<TransformScheme>(spec.without_drift(), folded, options);
    }
    if (name == "atom") {
        if (spec.has_drift()) throw ConfigError("the atom scheme does not take a drift");
        return std::make_unique<AtomScheme>(spec, AtomicFlow::constant(restrict(nu, spec.zero_set)), grid, options);
    }
    if (name == "reflected") {
        if (!nu.empty()) throw ConfigError("the reflected scheme does not take a measure");
        return std::make_unique<ReflectedScheme>(spec);
    }
    if (name == "classical") {
        if (!nu.empty()) throw ConfigError("the classical scheme does not take a measure");
        return std::make_unique<ClassicalScheme>(spec, options);
    }
    throw ConfigError("unknown scheme '" + name + "' (transform, atom, reflected, classical)");
}

}  // namespace skewsim

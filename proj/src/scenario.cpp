#include "logsew/scenario.hpp"

#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <toml.hpp>

#include "logsew/pseudotrace.hpp"
#include "logsew/transport.hpp"

namespace logsew {

using nlohmann::json;

namespace {

struct EmbeddedTemplate {
    const char* name;
    const char* format;
    const char* text;
};

#include "logsew_templates.inc"

[[noreturn]] void fail(const std::string& msg) { throw ScenarioError(msg); }

double to_double(const Rational& r) { return r.get_d(); }

ComplexRational number(const json& j, const std::string& what) {
    if (j.is_number_float()) fail(what + ": floating literal where an exact number is required");
    try {
        return complex_rational_from_json(j);
    } catch (const std::exception& e) {
        fail(what + ": " + e.what());
    }
}

long positive(const json& s, const std::string& key, std::optional<long> def = std::nullopt) {
    if (!s.contains(key)) {
        if (def) return *def;
        fail("missing field '" + key + "'");
    }
    if (!s.at(key).is_number_integer()) fail("field '" + key + "' must be an integer");
    long v = s.at(key).get<long>();
    if (v < 0) fail("field '" + key + "' must be non-negative");
    return v;
}

std::string text(const json& s, const std::string& key, const std::string& def) {
    if (!s.contains(key)) return def;
    if (!s.at(key).is_string()) fail("field '" + key + "' must be a string");
    return s.at(key).get<std::string>();
}

std::complex<double> complex_value(const json& j, const std::string& what) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    fail(what + ": expected a number or [re, im]");
}

std::string csv_of(const MultiLogSeries& s) {
    std::ostringstream os;
    s.write_csv(os);
    return os.str();
}

// module descriptors, shared by name so that sewing pairs resolve to the same object
struct ModuleEntry {
    ModulePtr module;
    std::shared_ptr<FockModule> fock;
    std::optional<RightModuleStructure> structure;
    ComplexRational mu;
};

class Context {
public:
    Context(const json& s, const RunOptions& opt) : s_(s) {
        seed = opt.seed ? *opt.seed : static_cast<unsigned long>(positive(s, "seed", 0));
        Mode declared = text(s, "mode", "exact") == "float" ? Mode::Approx : Mode::Exact;
        if (s.contains("mode") && text(s, "mode", "exact") != "exact" && text(s, "mode", "exact") != "float")
            fail("mode must be exact or float");
        mode = opt.mode ? *opt.mode : declared;
        format = opt.format;
        if (format != "csv" && format != "json") fail("format must be csv or json");
    }

    const json& scenario() const { return s_; }

    ModuleEntry module(const json& d) {
        if (d.is_string()) {
            std::string name = d.get<std::string>();
            auto it = named_.find(name);
            if (it != named_.end()) return it->second;
            if (!s_.contains("modules") || !s_.at("modules").contains(name)) fail("unknown module '" + name + "'");
            return named_[name] = build(s_.at("modules").at(name));
        }
        return build(d);
    }

    std::shared_ptr<FockModule> voa(long cutoff) {
        auto it = voas_.find(cutoff);
        if (it != voas_.end()) return it->second;
        return voas_[cutoff] = heisenberg_voa(static_cast<int>(cutoff));
    }

    void emit_series(RunReport& r, const std::string& stem, const MultiLogSeries& s) const {
        MultiLogSeries out = mode == Mode::Approx ? s.to_mode(Mode::Approx) : s;
        if (format == "json")
            r.artifacts[stem + ".json"] = out.to_json().dump(2) + "\n";
        else
            r.artifacts[stem + ".csv"] = csv_of(out);
    }

    unsigned long seed = 0;
    Mode mode = Mode::Exact;
    std::string format;

private:
    ModuleEntry build(const json& d) {
        if (!d.is_object()) fail("module descriptor must be an object or a name");
        std::string type = text(d, "type", "heisenberg");
        long K = positive(d, "cutoff");
        ComplexRational mu = d.contains("mu") ? number(d.at("mu"), "mu") : ComplexRational(0);
        ModuleEntry e;
        e.mu = mu;
        if (type == "heisenberg") {
            e.fock = heisenberg_module(mu, static_cast<int>(K));
        } else if (type == "log_toy") {
            e.fock = std::make_shared<FockModule>(mu, static_cast<int>(K),
                                                  std::vector<std::vector<ComplexRational>>{{0, 0}, {1, 0}});
        } else if (type == "epsilon_toy") {
            long window = positive(d, "window", K);
            auto toy = epsilon_toy(mu, static_cast<int>(K), Rational(window));
            e.fock = toy.module;
            e.structure.emplace(std::move(toy.structure));
        } else {
            fail("unknown module type '" + type + "'");
        }
        e.module = e.fock;
        return e;
    }

    const json& s_;
    std::map<std::string, ModuleEntry> named_;
    std::map<long, std::shared_ptr<FockModule>> voas_;
};

FockVector insertion(const json& d) {
    if (d.is_string()) {
        std::string n = d.get<std::string>();
        if (n == "vacuum") return vacuum();
        if (n == "conformal") return conformal_vector();
        fail("unknown insertion '" + n + "'");
    }
    if (d.is_array()) {
        FockVector x;
        for (const auto& e : d) fock_axpy(x, ComplexRational(1), insertion(e));
        return x;
    }
    if (!d.is_object() || !d.contains("parts")) fail("insertion must be vacuum, conformal, {parts, coeff} or a list");
    Partition p = d.at("parts").get<Partition>();
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[i - 1]) fail("insertion parts must be nonincreasing");
    for (int x : p)
        if (x <= 0) fail("insertion parts must be positive");
    ComplexRational c = d.contains("coeff") ? number(d.at("coeff"), "coeff") : ComplexRational(1);
    return oscillator_state(p, c);
}

TensorVector slot0(const FockModule& V, const FockVector& x) {
    TensorVector t;
    auto v = V.to_vector(x, Truncation::Strict);
    for (const auto& [i, c] : v.coeffs()) t[{i}] = c;
    return t;
}

std::vector<std::size_t> low_indices(const VertexModule& m, long w) {
    std::vector<std::size_t> r;
    auto s = m.space();
    for (std::size_t i = 0; i < s->dim(); ++i)
        if (s->weight_of(i)[0].re - m.lowest_weight() <= w) r.push_back(i);
    return r;
}

// Σ_pieces dim · q^weight up to the cutoff
MultiLogSeries graded_dimension(const VertexModule& m, const Rational& cutoff, const ComplexRational& scale) {
    MultiLogSeries s(1, Mode::Exact, cutoff);
    auto sp = m.space();
    for (std::size_t p = 0; p < sp->num_pieces(); ++p) {
        const auto& piece = sp->piece(p);
        if (piece.weight[0].re > cutoff) continue;
        s.add_term(Monomial{{piece.weight[0]}, {0}}, Scalar(scale * ComplexRational(static_cast<long>(piece.dim))));
    }
    return s;
}

CheckResult exact_check(const std::string& name, const Rational& dev, const std::string& detail = {}) {
    return {name, dev == 0, to_double(dev), detail};
}

MultiLogSeries series_from(const json& j) {
    try {
        return MultiLogSeries::from_json(j);
    } catch (const std::exception& e) {
        fail(std::string("expected series: ") + e.what());
    }
}

// Σ_n p(n)-weighted oracle for the vacuum pseudo-trace
MultiLogSeries vacuum_pseudo_trace_oracle(const ModuleEntry& e, const SLF& w, const Rational& cutoff) {
    const auto& r = *e.structure;
    auto sp = e.module->space();
    MultiLogSeries s(1, Mode::Exact, cutoff);
    bool eps = r.algebra().dim() == 2;
    for (std::size_t p = 0; p < sp->num_pieces(); ++p) {
        const auto& piece = sp->piece(p);
        if (piece.weight[0].re > cutoff) continue;
        ComplexRational n(static_cast<long>(eps ? piece.dim / 2 : piece.dim));
        // q^{L(0)} = q^{L(0)_s}(1 + μ ε log q) on the ε toy
        s.add_term(Monomial{{piece.weight[0]}, {0}}, Scalar(n * w.values()[0]));
        if (eps) s.add_term(Monomial{{piece.weight[0]}, {1}}, Scalar(n * e.mu * w.values()[1]));
    }
    return s;
}

struct PseudoSetup {
    ModuleEntry entry;
    std::shared_ptr<FockModule> V;
    std::optional<SLF> w;
    long cutoff = 0;
};

PseudoSetup pseudo_setup(Context& ctx) {
    const json& s = ctx.scenario();
    PseudoSetup p;
    p.cutoff = positive(s, "cutoff");
    if (!s.contains("module")) fail("missing field 'module'");
    p.entry = ctx.module(s.at("module"));
    std::string alg = text(s, "algebra", p.entry.structure ? "dual_numbers" : "C");
    if (alg == "C") {
        if (p.entry.structure && p.entry.structure->algebra().dim() != 1) fail("module carries a dual-numbers action");
        if (!p.entry.structure) p.entry.structure.emplace(RightModuleStructure::scalars(p.entry.module, p.cutoff));
    } else if (alg == "dual_numbers") {
        if (!p.entry.structure) fail("dual_numbers needs an epsilon_toy module");
    } else {
        fail("unknown algebra '" + alg + "'");
    }
    std::vector<ComplexRational> vals;
    if (s.contains("slf")) {
        for (const auto& v : s.at("slf")) vals.push_back(number(v, "slf"));
    } else {
        // ω = the coefficient of the unit
        vals.assign(p.entry.structure->algebra().dim(), ComplexRational(0));
        vals[0] = ComplexRational(1);
    }
    try {
        p.w.emplace(p.entry.structure->algebra(), vals);
    } catch (const std::invalid_argument& e) {
        fail(std::string("slf: ") + e.what());
    }
    p.V = ctx.voa(positive(s, "voa_cutoff", p.entry.fock->cutoff()));
    return p;
}

Block make_block(Context& ctx, const json& d) {
    std::string type = text(d, "type", "");
    if (!d.contains("module")) fail("block needs a module");
    auto e = ctx.module(d.at("module"));
    if (type == "matrix_element") return matrix_element_block(ctx.voa(positive(d, "voa_cutoff", e.fock->cutoff())), e.module);
    if (type == "pairing") return pairing_block(e.module);
    fail("unknown block type '" + type + "'");
}

void run_character(Context& ctx, RunReport& r) {
    const json& s = ctx.scenario();
    long cutoff = positive(s, "cutoff");
    auto e = ctx.module(s.contains("module") ? s.at("module") : json{{"type", "heisenberg"}, {"cutoff", cutoff}});
    auto V = ctx.voa(positive(s, "voa_cutoff", cutoff));
    std::string geometry = text(s, "geometry", "two_point");
    FockVector ins = insertion(s.contains("insertion") ? s.at("insertion") : json("vacuum"));
    SewingPlan plan;
    plan.blocks.push_back(matrix_element_block(V, e.module));
    plan.cutoff = cutoff;
    MultiLogSeries ch;
    if (geometry == "two_point") {
        plan.blocks.push_back(pairing_block(e.module));
        plan.pairs = {{2, 3}, {4, 1}};
        ch = diagonal_restrict(sew(plan, slot0(*V, ins))).truncated(Rational(cutoff));
    } else if (geometry == "torus") {
        plan.pairs = {{2, 1}};
        ch = sew(plan, slot0(*V, ins));
    } else {
        fail("geometry must be two_point or torus");
    }
    ctx.emit_series(r, "coefficients", ch);
    if (fock_equal(ins, vacuum()))
        r.checks.push_back(exact_check("graded_dimension", max_deviation(ch, graded_dimension(*e.module, cutoff, 1))));
    if (s.contains("expected")) r.checks.push_back(exact_check("expected_series", max_deviation(ch, series_from(s.at("expected")))));
    if (s.contains("samples")) {
        std::vector<std::vector<EvalPoint>> pts;
        for (const auto& p : s.at("samples")) pts.push_back({{p.at("modulus").get<double>(), p.value("arg", 0.0)}});
        ConvergenceOptions o;
        o.tol = s.value("tolerance", o.tol);
        auto table = convergence_table(ch, pts, o);
        std::ostringstream os;
        write_convergence_csv(os, table);
        r.artifacts["convergence.csv"] = os.str();
        if (s.value("require_stabilization", false)) {
            long by = positive(s, "stabilize_by", cutoff);
            int bad = 0;
            for (const auto& smp : table)
                if (!smp.stabilization_order || !smp.reliable || *smp.stabilization_order > by) ++bad;
            r.checks.push_back({"stabilization", bad == 0, static_cast<double>(bad), std::to_string(table.size()) + " samples"});
        }
    }
}

void run_sew(Context& ctx, RunReport& r) {
    const json& s = ctx.scenario();
    SewingPlan plan;
    if (!s.contains("blocks") || !s.contains("pairs")) fail("sew needs blocks and pairs");
    for (const auto& b : s.at("blocks")) plan.blocks.push_back(make_block(ctx, b));
    for (const auto& p : s.at("pairs")) {
        if (!p.is_array() || p.size() != 2) fail("pairs are [module_slot, dual_slot]");
        plan.pairs.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
    }
    plan.cutoff = positive(s, "cutoff");
    try {
        plan.validate();
    } catch (const std::exception& e) {
        fail(std::string("sewing plan: ") + e.what());
    }
    auto open = plan.open_slots();
    TensorVector w{{TensorIndex{}, Scalar(1L)}};
    const json inputs = s.value("inputs", json::array());
    if (inputs.size() != open.size()) fail("one input per open slot required");
    for (std::size_t k = 0; k < open.size(); ++k) {
        auto fm = dynamic_cast<const FockModule*>(&plan.module_at(open[k]));
        if (!fm) fail("inputs are supported on Fock slots only");
        auto v = fm->to_vector(insertion(inputs[k]), Truncation::Strict);
        TensorVector next;
        for (const auto& [idx, c] : w)
            for (const auto& [i, ci] : v.coeffs()) {
                TensorIndex j = idx;
                j.push_back(i);
                tensor_add(next, j, c * ci);
            }
        w = std::move(next);
    }
    MultiLogSeries out = sew(plan, w);
    ctx.emit_series(r, "coefficients", out);
    if (s.value("diagonal", false)) {
        auto d = diagonal_restrict(out);
        ctx.emit_series(r, "diagonal", d);
        out = d;
    }
    if (s.contains("expected")) r.checks.push_back(exact_check("expected_series", max_deviation(out, series_from(s.at("expected")))));
}

void run_pseudo_sew(Context& ctx, RunReport& r) {
    const json& s = ctx.scenario();
    auto p = pseudo_setup(ctx);
    auto phi = matrix_element_block(p.V, p.entry.module);
    FockVector ins = insertion(s.contains("insertion") ? s.at("insertion") : json("vacuum"));
    MultiLogSeries out(1, Mode::Exact, Rational(p.cutoff));
    for (const auto& [idx, c] : slot0(*p.V, ins))
        out += pseudo_sew(phi, 1, 2, *p.w, *p.entry.structure, p.cutoff, idx).scaled(c);
    ctx.emit_series(r, "coefficients", out);
    if (fock_equal(ins, vacuum()))
        r.checks.push_back(exact_check("vacuum_oracle", max_deviation(out, vacuum_pseudo_trace_oracle(p.entry, *p.w, p.cutoff))));
    if (s.contains("expected")) r.checks.push_back(exact_check("expected_series", max_deviation(out, series_from(s.at("expected")))));
    r.checks.push_back({"log_power", out.max_log_power() < static_cast<unsigned>(p.entry.module->jc().nilpotency_index) ||
                                         out.max_log_power() == 0,
                        0.0, "max power of log q " + std::to_string(out.max_log_power())});
}

void run_trace_sewing(Context& ctx, RunReport& r) {
    const json& s = ctx.scenario();
    auto p = pseudo_setup(ctx);
    auto phi = matrix_element_block(p.V, p.entry.module);
    long wmax = positive(s, "max_insertion_weight", 2);
    Rational worst(0);
    int logs = 0, count = 0;
    json table = json::array();
    for (std::size_t i : low_indices(*p.V, wmax)) {
        Rational d = trace_sewing_check(phi, 1, 2, *p.w, *p.entry.structure, p.cutoff, TensorIndex{i});
        worst = std::max(worst, d);
        auto ps = pseudo_sew(phi, 1, 2, *p.w, *p.entry.structure, p.cutoff, TensorIndex{i});
        if (ps.max_log_power() > 0) ++logs;
        ++count;
        table.push_back({{"insertion", i}, {"deviation", rational_to_json(d)}, {"log_power", ps.max_log_power()}});
    }
    r.artifacts["trace_sewing.json"] = table.dump(2) + "\n";
    r.checks.push_back(exact_check("pseudo_sew_equals_diagonal_sew", worst,
                                   std::to_string(count) + " insertions, " + std::to_string(logs) + " with log q"));
}

std::vector<TensorIndex> tuples_up_to(const TensorModule& tm, long w) {
    std::vector<TensorIndex> out{{}};
    for (std::size_t k = 0; k < tm.size(); ++k) {
        std::vector<TensorIndex> next;
        for (const auto& t : out)
            for (std::size_t i : low_indices(*tm.factor(k), w)) {
                auto u = t;
                u.push_back(i);
                next.push_back(u);
            }
        out = std::move(next);
    }
    return out;
}

void run_transport(Context& ctx, RunReport& r) {
    const json& s = ctx.scenario();
    if (!s.contains("block") || !s.contains("field")) fail("transport needs block and field");
    Block phi = make_block(ctx, s.at("block"));
    DeformationField field;
    try {
        field = DeformationField::from_json(s.at("field"));
    } catch (const std::exception& e) {
        fail(std::string("field: ") + e.what());
    }
    if (field.num_slots() != phi.modules()->size()) fail("field needs one slot per block slot");
    std::size_t order = positive(s, "order");
    auto ws = tuples_up_to(*phi.modules(), positive(s, "max_weight", 1));
    auto t = transport_recursion(phi, field, order, ws);
    if (ctx.mode == Mode::Approx)
        for (auto& [w, c] : t.coeffs)
            for (auto& x : c) x = x.to_mode(Mode::Approx);
    r.artifacts["transport.json"] = t.to_json().dump(2) + "\n";
    if (ctx.format == "csv") {
        std::ostringstream os;
        t.write_csv(os);
        r.artifacts["transport.csv"] = os.str();
    }
    if (!field.is_autonomous()) return;
    auto exact = transport_recursion(phi, field, order, ws);
    auto a = field_operator(*phi.modules(), field);
    Rational worst(0);
    for (const auto& w : ws) {
        auto o = autonomous_oracle_coefficients(phi, a, order, w);
        for (std::size_t n = 0; n <= order; ++n) {
            Scalar d = o[n] - exact.at(w)[n];
            worst = std::max(worst, d.is_exact() ? max_abs(d.exact()) : Rational(d.abs()));
        }
    }
    r.checks.push_back(exact_check("oracle_agreement", worst, std::to_string(ws.size()) + " tuples"));
    bool point_fixing = true;
    for (std::size_t i = 0; i < field.num_slots(); ++i)
        for (const auto& [k, c] : field.slot(i)) point_fixing = point_fixing && k >= 2;
    if (point_fixing && s.contains("q_samples")) {
        std::vector<Scalar> qs;
        for (const auto& q : s.at("q_samples")) qs.push_back(Scalar(number(q, "q_samples")));
        r.checks.push_back(exact_check("coordinate_flow", transport_coordinate_check(phi, field, ws, qs, order)));
    }
}

void run_flow(Context& ctx, RunReport& r) {
    using C = std::complex<double>;
    const json& s = ctx.scenario();
    if (!s.contains("flow")) fail("flow needs a flow spec");
    FlowSpec spec;
    try {
        spec = FlowSpec::from_json(s.at("flow"));
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        fail(std::string("flow: ") + e.what());
    }
    std::vector<C> starts;
    bool circle = false;
    double radius = 1;
    if (s.contains("circle")) {
        circle = true;
        radius = s.at("circle").value("radius", 1.0);
        long n = positive(s.at("circle"), "count", 32);
        for (long j = 0; j < n; ++j) starts.push_back(std::polar(radius, 2 * std::numbers::pi * j / n));
    }
    if (s.contains("points"))
        for (const auto& p : s.at("points")) starts.push_back(complex_value(p, "points"));
    if (starts.empty()) fail("flow needs start points or a circle");
    std::vector<C> targets;
    for (const auto& q : s.value("q_targets", json::array())) targets.push_back(complex_value(q, "q_targets"));
    if (targets.empty()) fail("flow needs q_targets");

    std::ostringstream ends;
    ends << "start_re,start_im,q_re,q_im,beta_re,beta_im\n";
    ends.precision(17);
    std::map<std::pair<std::size_t, std::size_t>, C> beta;
    for (std::size_t a = 0; a < starts.size(); ++a)
        for (std::size_t b = 0; b < targets.size(); ++b) {
            C z = flow_integrate(spec, starts[a], targets[b]);
            beta[{a, b}] = z;
            ends << starts[a].real() << ',' << starts[a].imag() << ',' << targets[b].real() << ',' << targets[b].imag() << ','
                 << z.real() << ',' << z.imag() << '\n';
        }
    r.artifacts["endpoints.csv"] = ends.str();
    std::ostringstream traj;
    write_trajectory_csv(traj, flow_trajectory(spec, starts[0], targets[0]));
    r.artifacts["trajectory.csv"] = traj.str();

    // single monomial c z^k with k ∈ {0, 1, 2} has a closed form
    if (spec.is_autonomous() && spec.h.size() == 1 && spec.h.begin()->first >= 0 && spec.h.begin()->first <= 2 &&
        !spec.h.begin()->second.empty()) {
        long k = spec.h.begin()->first;
        C c = spec.h.begin()->second[0];
        double worst = 0;
        for (const auto& [ab, z] : beta) {
            C z0 = starts[ab.first], q = targets[ab.second] * c, ex;
            ex = k == 0 ? z0 + q : k == 1 ? std::exp(q) * z0 : z0 / (1.0 - q * z0);
            worst = std::max(worst, std::abs(z - ex));
        }
        double tol = s.value("tolerance", 1e-8);
        r.checks.push_back({"closed_form", worst <= tol, worst, "tolerance " + std::to_string(tol)});
    }
    if (circle && s.value("winding", true)) {
        C pt = s.contains("winding_point") ? complex_value(s.at("winding_point"), "winding_point") : C(0, 0);
        long expected = s.contains("winding_expected") ? s.at("winding_expected").get<long>() : 1;
        double worst = 0;
        for (std::size_t b = 0; b < targets.size(); ++b) {
            std::vector<C> curve;
            for (std::size_t a = 0; a < starts.size(); ++a)
                if (circle && a < static_cast<std::size_t>(positive(s.at("circle"), "count", 32))) curve.push_back(beta[{a, b}]);
            worst = std::max(worst, std::abs(static_cast<double>(winding_number(curve, pt) - expected)));
        }
        r.checks.push_back({"winding", worst == 0, worst, "expected " + std::to_string(expected)});
    }
    if (spec.is_autonomous() && s.value("group_law", true)) {
        double worst = 0;
        for (const auto& z : starts)
            for (const auto& q : targets) worst = std::max(worst, flow_group_law_deviation(spec, z, q / 2.0, q / 2.0));
        double tol = s.value("group_law_tolerance", 1e-7);
        r.checks.push_back({"group_law", worst <= tol, worst, "tolerance " + std::to_string(tol)});
    }
}

// randomized exact identities, all driven by one seed
void run_identity_suite(Context& ctx, RunReport& r) {
    const json& s = ctx.scenario();
    std::mt19937 rng(static_cast<std::mt19937::result_type>(ctx.seed));
    long tuples = positive(s, "tuples", 50);
    auto rnd_rat = [&](int range, int den) {
        std::uniform_int_distribution<int> n(-range, range), d(1, den);
        Rational q(n(rng), d(rng));
        q.canonicalize();
        return q;
    };
    auto rnd_c = [&]() { return ComplexRational(rnd_rat(5, 4), rnd_rat(5, 4)); };
    auto rnd_state = [&](const FockModule& V, int wmax) {
        std::uniform_int_distribution<int> wd(0, wmax);
        int d = wd(rng);
        FockVector u;
        for (std::size_t i = 0; i < V.space()->dim(); ++i)
            if (V.space()->weight_of(i)[0] == ComplexRational(d))
                fock_axpy(u, rnd_c(), V.from_vector(Vector::basis(V.space(), i)));
        return u;
    };

    {
        auto F0 = ctx.voa(8);
        auto Vs = ctx.voa(4);
        std::uniform_int_distribution<int> deg(0, 2), nterm(1, 3);
        Rational worst(0);
        for (long t = 0; t < tuples; ++t) {
            FockVector u = rnd_state(*Vs, 4);
            BivariatePoly f;
            for (int k = nterm(rng); k > 0; --k) f[{deg(rng), deg(rng)}] += rnd_c();
            worst = std::max(worst, multisew_identity_check(F0, u, f, 3));
        }
        r.checks.push_back(exact_check("multisew", worst, std::to_string(tuples) + " tuples"));
    }
    {
        auto V = ctx.voa(3);
        auto F0 = ctx.voa(5);
        auto M = heisenberg_module(ComplexRational(Rational(1, 2)), 5);
        auto toy = std::make_shared<FockModule>(ComplexRational(1), 5,
                                                std::vector<std::vector<ComplexRational>>{{0, 0}, {1, 0}});
        std::vector<const VertexModule*> mods{F0.get(), M.get(), toy.get()};
        Rational wc(0), wd(0);
        for (long t = 0; t < tuples; ++t) {
            auto u = rnd_state(*V, 2), v = rnd_state(*V, 2);
            Laurent f, g;
            for (long k = -2; k <= 2; ++k) laurent_add(f, k, rnd_c()), laurent_add(g, k, rnd_c());
            const VertexModule& m = *mods[t % 3];
            auto w = Vector::basis(m.space(), rng() % m.space()->dim());
            wc = std::max(wc, commutator_check(m, u, f, v, g, w));
            wd = std::max(wd, derivative_section_check(m, u, f, w));
        }
        r.checks.push_back(exact_check("commutator", wc, std::to_string(tuples) + " tuples"));
        r.checks.push_back(exact_check("derivative_annihilation", wd, std::to_string(tuples) + " tuples"));
    }
    {
        auto V = ctx.voa(8);
        auto M = heisenberg_module(ComplexRational(Rational(1, 3)), 8);
        auto phi = matrix_element_block(V, M);
        auto iv = low_indices(*V, 2), im = low_indices(*M, 1), imp = low_indices(*M, 2), iu = low_indices(*V, 3);
        Rational worst(0);
        long checked = 0;
        std::uniform_int_distribution<int> kind(0, 2), ord(1, 3);
        for (long t = 0; t < tuples; ++t) {
            FockVector u = V->from_vector(Vector::basis(V->space(), iu[rng() % iu.size()]));
            int which = kind(rng);
            RationalFunction f = which == 0   ? RationalFunction::pole(ComplexRational(0), ord(rng))
                                 : which == 1 ? RationalFunction::pole(ComplexRational(1), ord(rng))
                                              : RationalFunction::monomial(static_cast<long>(rng() % (2 * v_weight(u) + 2)));
            TensorIndex w{iv[rng() % iv.size()], imp[rng() % imp.size()], im[rng() % im.size()]};
            Scalar d = ward_residual(phi, SectionDatum{{{u, f}}}, w);
            worst = std::max(worst, max_abs(d.exact()));
            ++checked;
        }
        r.checks.push_back(exact_check("ward", worst, std::to_string(checked) + " tuples"));
    }
    {
        auto toy = epsilon_toy(ComplexRational(1), 6, 4);
        auto Vt = ctx.voa(6);
        auto pt = matrix_element_block(Vt, toy.module);
        SLF w(toy.structure.algebra(), {rnd_c(), rnd_c()});
        Rational worst(0);
        for (std::size_t i : low_indices(*Vt, 1)) worst = std::max(worst, trace_sewing_check(pt, 1, 2, w, toy.structure, 4, TensorIndex{i}));
        r.checks.push_back(exact_check("trace_sewing_epsilon_toy", worst));
    }
    {
        auto M = heisenberg_module(ComplexRational(Rational(2, 3)), 10);
        auto phi = pairing_block(M);
        std::vector<TensorIndex> ws;
        for (std::size_t a : low_indices(*M, 1))
            for (std::size_t b : low_indices(*M, 1)) ws.push_back({a, b});
        long fields = positive(s, "fields", 20);
        std::uniform_int_distribution<int> coin(0, 2);
        Rational worst(0);
        for (long t = 0; t < fields; ++t) {
            std::vector<std::map<long, Scalar>> h(2);
            for (auto& sl : h)
                for (long k = 1; k <= 3; ++k)
                    if (coin(rng)) sl[k] = Scalar(rnd_rat(3, 3));
            auto f = DeformationField::autonomous(h);
            auto tr = transport_recursion(phi, f, 8, ws);
            auto a = field_operator(*phi.modules(), f);
            for (const auto& w : ws) {
                auto o = autonomous_oracle_coefficients(phi, a, 8, w);
                for (std::size_t n = 0; n <= 8; ++n) worst = std::max(worst, max_abs((o[n] - tr.at(w)[n]).exact()));
            }
        }
        r.checks.push_back(exact_check("transport_oracle", worst, std::to_string(fields) + " fields"));
    }
}

void copy_json(const toml::node& n, json& out) {
    if (auto t = n.as_table()) {
        out = json::object();
        for (const auto& [k, v] : *t) copy_json(v, out[std::string(k.str())]);
    } else if (auto a = n.as_array()) {
        out = json::array();
        for (const auto& v : *a) {
            json x;
            copy_json(v, x);
            out.push_back(std::move(x));
        }
    } else if (auto i = n.as_integer()) {
        out = i->get();
    } else if (auto f = n.as_floating_point()) {
        out = f->get();
    } else if (auto s = n.as_string()) {
        out = s->get();
    } else if (auto b = n.as_boolean()) {
        out = b->get();
    } else {
        fail("unsupported TOML value (dates and times are not scenario data)");
    }
}

}  // namespace

bool RunReport::passed() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

json RunReport::summary() const {
    json cs = json::array();
    for (const auto& c : checks) {
        json e{{"name", c.name}, {"status", c.pass ? "pass" : "fail"}, {"max_deviation", c.max_deviation}};
        if (!c.detail.empty()) e["detail"] = c.detail;
        cs.push_back(e);
    }
    json arts = json::array();
    for (const auto& [k, v] : artifacts) arts.push_back(k);
    return {{"scenario", name}, {"kind", kind},         {"seed", seed},     {"mode", mode == Mode::Exact ? "exact" : "float"},
            {"checks", cs},     {"artifacts", arts},    {"status", passed() ? "pass" : "fail"}};
}

json toml_to_json(const std::string& text) {
    try {
        auto tbl = toml::parse(text);
        json out;
        copy_json(tbl, out);
        return out;
    } catch (const toml::parse_error& e) {
        throw ScenarioError(std::string("TOML parse error: ") + std::string(e.description()));
    }
}

json parse_scenario_text(const std::string& text, const std::string& format) {
    if (format == "toml") return toml_to_json(text);
    if (format != "json") throw ScenarioError("unknown scenario format '" + format + "'");
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("JSON parse error: ") + e.what());
    }
}

json load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str(), std::filesystem::path(path).extension() == ".toml" ? "toml" : "json");
}

RunReport run_scenario(const json& s, const RunOptions& opt) {
    if (!s.is_object()) throw ScenarioError("scenario must be an object");
    RunReport r;
    Context ctx(s, opt);
    r.kind = text(s, "kind", "");
    r.name = text(s, "name", r.kind);
    r.seed = ctx.seed;
    r.mode = ctx.mode;
    static const std::map<std::string, void (*)(Context&, RunReport&)> kinds{
        {"character", run_character}, {"sew", run_sew},       {"pseudo_sew", run_pseudo_sew},
        {"trace_sewing", run_trace_sewing},         {"transport", run_transport}, {"flow", run_flow},
        {"identity_suite", run_identity_suite}};
    auto it = kinds.find(r.kind);
    if (it == kinds.end()) throw ScenarioError("unknown scenario kind '" + r.kind + "'");
    try {
        it->second(ctx, r);
    } catch (const ScenarioError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("scenario field: ") + e.what());
    } catch (const std::exception& e) {
        r.checks.push_back({"run", false, 0, e.what()});
    }
    return r;
}

void write_report(const RunReport& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& body) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + name);
        out << body;
    };
    for (const auto& [k, v] : r.artifacts) put(k, v);
    put("summary.json", r.summary().dump(2) + "\n");
}

const std::vector<ScenarioTemplate>& scenario_templates() {
    static const std::vector<ScenarioTemplate> all = [] {
        std::vector<ScenarioTemplate> t;
        for (const auto& e : kEmbeddedTemplates) {
            json j = parse_scenario_text(e.text, e.format);
            t.push_back({e.name, j.value("kind", ""), e.format, j.value("description", ""), e.text});
        }
        return t;
    }();
    return all;
}

}  // namespace logsew

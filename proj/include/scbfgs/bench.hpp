#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scbfgs/bfgs.hpp"
#include "scbfgs/diagnostics.hpp"
#include "scbfgs/errors.hpp"
#include "scbfgs/objective.hpp"
#include "scbfgs/theory.hpp"

namespace scbfgs {

/// Shortest decimal that round-trips to the same double; keeps CSV output
/// byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    int schema = 1;
    std::string problem;                  // hard_cubic|logistic|log_sum_exp|log_barrier|quadratic
    nlohmann::json problem_params = nlohmann::json::object();
    std::vector<int> dims;
    std::vector<std::string> methods;     // bfgs:identity, bfgs:scaled:<a>, bfgs:heuristic, gd, agd
    std::uint64_t seed = 1;
    double alpha = 0.1;
    double beta = 0.9;
    int max_iter = 500;
    int fo_max_iter = 20000;              // iteration budget for gd/agd
    double grad_tol = 1e-10;
    std::string weight = "tilde";
    std::optional<double> m_override;
    std::string out_dir = "out";
    int jobs = 1;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = schema;
        j["problem"] = problem;
        j["problem_params"] = problem_params;
        j["dims"] = dims;
        j["methods"] = methods;
        j["seed"] = seed;
        j["alpha"] = alpha;
        j["beta"] = beta;
        j["max_iter"] = max_iter;
        j["fo_max_iter"] = fo_max_iter;
        j["grad_tol"] = grad_tol;
        j["weight"] = weight;
        if (m_override) j["M"] = *m_override;
        j["out_dir"] = out_dir;
        j["jobs"] = jobs;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        c.schema = j.value("schema", 1);
        if (c.schema != 1) throw Error("config: unsupported schema version");
        c.problem = j.at("problem").get<std::string>();
        c.problem_params = j.value("problem_params", nlohmann::json::object());
        c.dims = j.at("dims").get<std::vector<int>>();
        c.methods = j.value("methods", std::vector<std::string>{"bfgs:identity", "gd", "agd"});
        c.seed = j.value("seed", std::uint64_t{1});
        c.alpha = j.value("alpha", 0.1);
        c.beta = j.value("beta", 0.9);
        c.max_iter = j.value("max_iter", 500);
        c.fo_max_iter = j.value("fo_max_iter", 20000);
        c.grad_tol = j.value("grad_tol", 1e-10);
        c.weight = j.value("weight", std::string("tilde"));
        if (j.contains("M")) c.m_override = j.at("M").get<double>();
        c.out_dir = j.value("out_dir", std::string("out"));
        c.jobs = j.value("jobs", 1);
        c.validate();
        return c;
    }

    void validate() const {
        static const std::vector<std::string> known = {"hard_cubic", "logistic", "log_sum_exp",
                                                       "log_barrier", "quadratic"};
        if (std::find(known.begin(), known.end(), problem) == known.end())
            throw Error("config: unknown problem '" + problem + "'");
        if (dims.empty()) throw Error("config: dims list is empty");
        for (int d : dims) {
            if (d < 1) throw Error("config: dims must be positive");
            if (problem == "log_barrier" && d != 1)
                throw Error("config: log_barrier is 1-D only");
            if (problem == "hard_cubic" && d < 2)
                throw Error("config: hard_cubic needs dim >= 2");
        }
        if (methods.empty()) throw Error("config: methods list is empty");
        for (const auto& m : methods) parse_method(m);
        LineSearchParams{alpha, beta}.validate();
        if (!(grad_tol > 0.0)) throw Error("config: grad_tol must be positive");
        if (max_iter < 1 || fo_max_iter < 1) throw Error("config: iteration budgets must be >= 1");
        if (weight != "tilde" && weight != "bar") throw Error("config: weight must be tilde|bar");
        if (jobs < 1) throw Error("config: jobs must be >= 1");
    }

    struct MethodSpec {
        enum class Algo { bfgs, gd, agd } algo;
        B0Policy b0;
        std::string name;
    };

    static MethodSpec parse_method(const std::string& s) {
        MethodSpec ms;
        ms.name = s;
        if (s == "gd") {
            ms.algo = MethodSpec::Algo::gd;
            return ms;
        }
        if (s == "agd") {
            ms.algo = MethodSpec::Algo::agd;
            return ms;
        }
        if (s.rfind("bfgs:", 0) == 0) {
            ms.algo = MethodSpec::Algo::bfgs;
            const std::string rest = s.substr(5);
            if (rest == "identity") {
                ms.b0 = B0Policy::identity();
                return ms;
            }
            if (rest == "heuristic") {
                ms.b0 = B0Policy::heuristic(0);   // seed patched in at run time
                return ms;
            }
            if (rest.rfind("scaled:", 0) == 0) {
                const double a = std::stod(rest.substr(7));
                if (!(a > 0.0)) throw Error("config: scaled B0 needs a > 0");
                ms.b0 = B0Policy::scaled(a);
                return ms;
            }
        }
        throw Error("config: unknown method '" + s + "'");
    }
};

// ---------------------------------------------------------------------------
// Report structures
// ---------------------------------------------------------------------------

struct TraceRow {
    int t = 0;
    double f_gap_ratio = 1.0;
    double grad_norm = 0.0;
    std::optional<double> eta;
    std::optional<int> lambda;
    std::optional<double> rho;
    std::optional<double> c;
    std::optional<double> d_val;
    std::optional<double> psi_bhat;
    std::optional<double> bound1;
    std::optional<double> bound2;
    std::optional<double> bound3;
};

struct CellReport {
    std::string method;
    int dim = 0;
    std::vector<TraceRow> rows;
    std::string error;            // non-empty when the cell failed
    double wall_seconds = 0.0;
    double f_star = 0.0;          // reference value the gaps are measured against
    bool reference_polished = false;
    std::optional<nlohmann::json> theory;
};

struct RunReport {
    ExperimentConfig cfg;
    std::vector<CellReport> cells;
};

// ---------------------------------------------------------------------------
// Problem and start-point construction
// ---------------------------------------------------------------------------

/// Construct the configured problem instance for one sweep dimension.
inline Objective build_problem(const ExperimentConfig& cfg, int dim) {
    if (cfg.problem == "hard_cubic") {
        HardCubicParams p;
        p.dim = dim;
        p.omega1 = cfg.problem_params.value("omega1", 4.0);
        p.omega2 = cfg.problem_params.value("omega2", 3.0);
        p.delta = cfg.problem_params.value("delta", 1.0);
        return make_hard_cubic(p);
    }
    if (cfg.problem == "logistic")
        return make_logistic(
            LogisticData::generate(dim, cfg.seed, cfg.problem_params.value("n", -1)));
    if (cfg.problem == "log_sum_exp")
        return make_log_sum_exp(
            LogSumExpData::generate(dim, cfg.problem_params.value("n", 2 * dim), cfg.seed));
    if (cfg.problem == "log_barrier") return make_log_barrier_1d();
    if (cfg.problem == "quadratic") {
        if (cfg.problem_params.contains("q")) {
            const auto& rows = cfg.problem_params.at("q");
            Eigen::MatrixXd q(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) q(i, j) = rows[i][j].get<double>();
            return make_quadratic(SpdMatrix(q));
        }
        Eigen::VectorXd diag(dim);
        for (int i = 0; i < dim; ++i) diag[i] = i + 1.0;
        return make_quadratic(SpdMatrix(Eigen::MatrixXd(diag.asDiagonal())));
    }
    throw Error("build_problem: unknown problem");
}

/// Start point policy: 0 where the gradient is informative there (logistic,
/// log-sum-exp), the configured interior point for the barrier, a seeded
/// unit-norm draw elsewhere.
inline Eigen::VectorXd start_point(const ExperimentConfig& cfg, int dim) {
    if (cfg.problem == "logistic" || cfg.problem == "log_sum_exp")
        return Eigen::VectorXd::Zero(dim);
    if (cfg.problem == "log_barrier") {
        Eigen::VectorXd x(1);
        x[0] = cfg.problem_params.value("x0", 0.5);
        return x;
    }
    SplitMix64 rng(cfg.seed + 1);
    Eigen::VectorXd x = rng.normal_vector(dim);
    return x / x.norm();
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void emit_cell_csv(const CellReport& cell, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("emit_csv: cannot open " + path.string());
    os << "t,f_gap_ratio,grad_norm,eta,lambda,rho,C,D,psi_bhat,bound_thm1,bound_thm2,"
          "bound_thm3\n";
    auto put = [&os](const std::optional<double>& v) {
        os << ',';
        if (v) os << format_double(*v);
    };
    for (const TraceRow& r : cell.rows) {
        os << r.t << ',' << format_double(r.f_gap_ratio) << ',' << format_double(r.grad_norm);
        put(r.eta);
        os << ',';
        if (r.lambda) os << *r.lambda;
        put(r.rho);
        put(r.c);
        put(r.d_val);
        put(r.psi_bhat);
        put(r.bound1);
        put(r.bound2);
        put(r.bound3);
        os << '\n';
    }
    if (!os) throw IoError("emit_csv: write failed for " + path.string());
}

inline std::string sanitize_name(std::string s) {
    for (char& c : s)
        if (c == ':' || c == '.') c = '-';
    return s;
}

/// One CSV per (method, dim) under the report's output directory.
inline void emit_csv(const RunReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const CellReport& cell : report.cells) {
        if (!cell.error.empty()) continue;
        const auto name = report.cfg.problem + "_d" + std::to_string(cell.dim) + "_" +
                          sanitize_name(cell.method) + ".csv";
        emit_cell_csv(cell, dir / name);
    }
}

// ---------------------------------------------------------------------------
// SVG convergence chart
// ---------------------------------------------------------------------------

/// Self-contained semilog-y chart: relative suboptimality (floored at 1e-16)
/// against iteration, one polyline per method, dashed overlays for theory
/// bounds.
inline void emit_svg(const RunReport& report, int dim, const std::filesystem::path& path) {
    struct Curve {
        std::string label;
        std::vector<double> y;
        bool dashed = false;
        std::string color;
    };
    static const char* palette[] = {"#1f6fb4", "#d1495b", "#3c8d40", "#8c5fa8",
                                    "#c98a26", "#4aa6a6", "#9a6450", "#5b5b5b"};

    std::vector<Curve> curves;
    int color_idx = 0;
    const double floor_val = 1e-16;
    std::size_t max_len = 2;
    for (const CellReport& cell : report.cells) {
        if (cell.dim != dim || !cell.error.empty() || cell.rows.empty()) continue;
        Curve c;
        c.label = cell.method;
        c.color = palette[color_idx++ % 8];
        for (const TraceRow& r : cell.rows)
            c.y.push_back(std::max(r.f_gap_ratio, floor_val));
        max_len = std::max(max_len, c.y.size());
        curves.push_back(std::move(c));

        auto add_bound = [&](const char* label, auto getter) {
            Curve b;
            b.label = cell.method + " " + label;
            b.dashed = true;
            b.color = palette[color_idx++ % 8];
            bool any = false;
            for (const TraceRow& r : cell.rows) {
                const std::optional<double> v = getter(r);
                if (v) any = true;
                b.y.push_back(std::max(v.value_or(std::nan("")), floor_val));
            }
            if (any) curves.push_back(std::move(b));
        };
        if (std::any_of(cell.rows.begin(), cell.rows.end(),
                        [](const TraceRow& r) { return r.bound1.has_value(); })) {
            add_bound("thm1", [](const TraceRow& r) { return r.bound1; });
            add_bound("thm2", [](const TraceRow& r) { return r.bound2; });
            add_bound("thm3", [](const TraceRow& r) { return r.bound3; });
        }
    }
    if (curves.empty()) throw IoError("emit_svg: no traces for dim " + std::to_string(dim));

    const double width = 760, height = 520;
    const double ml = 80, mr = 20, mt = 40, mb = 50;
    double ymax = 1.0;
    for (const Curve& c : curves)
        for (double v : c.y)
            if (std::isfinite(v)) ymax = std::max(ymax, v);
    const double ly0 = std::log10(floor_val), ly1 = std::log10(ymax) + 0.2;
    const double xmax = static_cast<double>(max_len - 1);

    auto xpix = [&](double t) { return ml + (width - ml - mr) * (xmax > 0 ? t / xmax : 0.0); };
    auto ypix = [&](double v) {
        const double ly = std::log10(std::max(v, floor_val));
        return mt + (height - mt - mb) * (ly1 - ly) / (ly1 - ly0);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
           "font-family=\"sans-serif\">"
        << report.cfg.problem << " d=" << dim << "</text>\n";

    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    const int dec_lo = static_cast<int>(std::floor(ly0));
    const int dec_hi = static_cast<int>(std::ceil(ly1));
    const int dec_step = std::max(1, (dec_hi - dec_lo) / 9);
    for (int e = dec_lo; e <= dec_hi; e += dec_step) {
        const double y = ypix(std::pow(10.0, e));
        if (y < mt || y > height - mb) continue;
        svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">1e" << e
            << "</text>\n";
    }
    const int xticks = 5;
    for (int i = 0; i <= xticks; ++i) {
        const double t = xmax * i / xticks;
        svg << "<line x1=\"" << xpix(t) << "\" y1=\"" << height - mb << "\" x2=\"" << xpix(t)
            << "\" y2=\"" << height - mb + 4 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << xpix(t) << "\" y=\"" << height - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
            << static_cast<long long>(std::llround(t)) << "</text>\n";
    }
    svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">iteration"
        << "</text>\n"
        << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 16 "
        << (mt + height - mb) / 2 << ")\">relative suboptimality</text>\n";

    for (const Curve& c : curves) {
        svg << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.6\"";
        if (c.dashed) svg << " stroke-dasharray=\"6,4\"";
        svg << " points=\"";
        for (std::size_t i = 0; i < c.y.size(); ++i) {
            if (!std::isfinite(c.y[i])) continue;
            svg << xpix(static_cast<double>(i)) << ',' << ypix(c.y[i]) << ' ';
        }
        svg << "\"/>\n";
        if (c.y.size() == 1 && std::isfinite(c.y[0]))
            svg << "<circle cx=\"" << xpix(0) << "\" cy=\"" << ypix(c.y[0])
                << "\" r=\"3\" fill=\"" << c.color << "\"/>\n";
    }

    double ly = mt + 14;
    for (const Curve& c : curves) {
        svg << "<line x1=\"" << width - mr - 168 << "\" y1=\"" << ly - 4 << "\" x2=\""
            << width - mr - 144 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << c.color
            << "\" stroke-width=\"1.6\"" << (c.dashed ? " stroke-dasharray=\"6,4\"" : "")
            << "/>\n"
            << "<text x=\"" << width - mr - 138 << "\" y=\"" << ly
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << c.label << "</text>\n";
        ly += 16;
    }
    svg << "</svg>\n";

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("emit_svg: cannot open " + path.string());
    os << svg.str();
    if (!os) throw IoError("emit_svg: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace detail {

struct RawCell {
    ExperimentConfig::MethodSpec spec;
    std::vector<StepRecord> steps;
    Eigen::VectorXd x_final;
    double f_final = 0.0;
    double g_final = 0.0;
    SpdMatrix b0 = SpdMatrix(Eigen::MatrixXd::Identity(1, 1));
    std::string error;
    double wall_seconds = 0.0;
};

inline RawCell run_cell(const ExperimentConfig& cfg, const Objective& obj,
                        const Eigen::VectorXd& x0, const ExperimentConfig::MethodSpec& spec) {
    RawCell cell;
    cell.spec = spec;
    const auto tic = std::chrono::steady_clock::now();
    try {
        if (spec.algo == ExperimentConfig::MethodSpec::Algo::bfgs) {
            SolverConfig sc;
            sc.grad_tol = cfg.grad_tol;
            sc.max_iter = cfg.max_iter;
            sc.ls = LineSearchParams{cfg.alpha, cfg.beta};
            sc.b0 = spec.b0;
            if (sc.b0.kind == B0Policy::Kind::heuristic) sc.b0.seed = cfg.seed + 2;
            BfgsResult r = bfgs_minimize(obj, x0, sc);
            cell.steps = std::move(r.steps);
            cell.x_final = r.state.x;
            cell.f_final = obj.value(r.state.x);
            cell.g_final = r.state.g.norm();
            cell.b0 = r.B0;
        } else {
            FirstOrderConfig fc;
            fc.grad_tol = cfg.grad_tol;
            fc.max_iter = cfg.fo_max_iter;
            FirstOrderResult r = spec.algo == ExperimentConfig::MethodSpec::Algo::gd
                                     ? gd_minimize(obj, x0, fc)
                                     : agd_minimize(obj, x0, fc);
            cell.steps = std::move(r.steps);
            cell.x_final = r.x;
            cell.f_final = r.f;
            cell.g_final = r.g.norm();
        }
    } catch (const Error& e) {
        cell.error = e.what();
    }
    cell.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    return cell;
}

}  // namespace detail

/// Full sweep: solve every (dim, method) cell, polish one reference per dim,
/// attach diagnostics and theory-bound columns where M is known, and write
/// CSV + SVG + config echo under cfg.out_dir. A failed cell is recorded and
/// skipped, not fatal. Deterministic given the config seed.
inline RunReport run_experiment(const ExperimentConfig& cfg, bool write_files = true) {
    cfg.validate();
    RunReport report;
    report.cfg = cfg;

    const std::filesystem::path dir(cfg.out_dir);
    if (write_files) {
        std::filesystem::create_directories(dir);
        std::ofstream echo(dir / "config_echo.json", std::ios::binary);
        echo << cfg.to_json().dump(2) << '\n';
    }

    for (int dim : cfg.dims) {
        const Objective obj = build_problem(cfg, dim);
        const Eigen::VectorXd x0 = start_point(cfg, dim);

        // solver cells, optionally in parallel
        std::vector<detail::RawCell> raw(cfg.methods.size());
        std::size_t next = 0;
        while (next < cfg.methods.size()) {
            const std::size_t batch =
                std::min<std::size_t>(cfg.jobs, cfg.methods.size() - next);
            std::vector<std::future<detail::RawCell>> futs;
            for (std::size_t k = 0; k < batch; ++k) {
                const auto spec = ExperimentConfig::parse_method(cfg.methods[next + k]);
                futs.push_back(std::async(std::launch::async, [&cfg, &obj, &x0, spec] {
                    return detail::run_cell(cfg, obj, x0, spec);
                }));
            }
            for (std::size_t k = 0; k < batch; ++k) raw[next + k] = futs[k].get();
            next += batch;
        }

        // one reference per dim, polished from the best terminal point
        std::optional<ReferenceSolution> ref;
        double f_star = std::numeric_limits<double>::infinity();
        const detail::RawCell* best = nullptr;
        for (const auto& cell : raw)
            if (cell.error.empty() && cell.f_final < f_star) {
                f_star = cell.f_final;
                best = &cell;
            }
        if (best) {
            try {
                ref = polish_reference(obj, best->x_final);
                f_star = std::min(f_star, ref->f_star);
            } catch (const Error&) {
                ref.reset();   // diagnostics disabled; gaps use best-found value
            }
        }

        const std::optional<double> m_eff =
            cfg.m_override ? cfg.m_override : obj.info().M;
        const WeightChoice wc =
            cfg.weight == "bar" ? WeightChoice::bar : WeightChoice::tilde;

        for (auto& cell : raw) {
            CellReport cr;
            cr.method = cell.spec.name;
            cr.dim = dim;
            cr.error = cell.error;
            cr.wall_seconds = cell.wall_seconds;
            cr.f_star = f_star;
            cr.reference_polished = ref.has_value();
            if (cell.error.empty()) {
                const double c0 = std::max(obj.value(x0) - f_star, 0.0);
                std::vector<DiagRecord> diags;
                std::optional<TheoryBundle> tb;
                const bool is_bfgs =
                    cell.spec.algo == ExperimentConfig::MethodSpec::Algo::bfgs;
                if (is_bfgs && ref) {
                    const bool can_weight = wc == WeightChoice::tilde || m_eff.has_value();
                    if (can_weight)
                        diags = compute_diagnostics(cell.steps, cell.b0, *ref, wc, m_eff,
                                                    LineSearchParams{cfg.alpha, cfg.beta});
                    if (m_eff && c0 > 0.0) {
                        tb = make_theory_bundle(cell.b0, ref->hess_star, c0, *m_eff,
                                                LineSearchParams{cfg.alpha, cfg.beta});
                        cr.theory = to_json(*tb);
                    }
                }

                const DeltaConstants* dc = tb ? &tb->deltas : nullptr;
                // one row per step plus the terminal iterate; a zero-step run
                // stays header-only
                const std::size_t n_rows = cell.steps.empty() ? 0 : cell.steps.size() + 1;
                for (std::size_t t = 0; t < n_rows; ++t) {
                    TraceRow row;
                    row.t = static_cast<int>(t);
                    const double f_t =
                        t < cell.steps.size() ? cell.steps[t].f0 : cell.f_final;
                    const double gap = std::max(f_t - f_star, 0.0);
                    row.f_gap_ratio = c0 > 0.0 ? gap / c0 : 0.0;
                    row.grad_norm =
                        t < cell.steps.size() ? cell.steps[t].g.norm() : cell.g_final;
                    if (t < cell.steps.size()) {
                        row.eta = cell.steps[t].eta;
                        row.lambda = cell.steps[t].evals;
                    }
                    if (t < diags.size()) {
                        row.rho = diags[t].rho;
                        row.c = diags[t].C;
                        row.d_val = diags[t].D;
                        row.psi_bhat = diags[t].psi_bhat;
                    }
                    if (tb && t >= 1) {
                        const LineSearchParams lsp{cfg.alpha, cfg.beta};
                        const int ti = static_cast<int>(t);
                        row.bound1 = std::min(
                            1.0, bound_thm1(ti, tb->potentials, tb->D0, lsp).value);
                        row.bound2 = bound_thm2(ti, tb->potentials, tb->D0, lsp);
                        row.bound3 =
                            bound_thm3(ti, tb->t0, tb->potentials, tb->D0, *dc, lsp);
                    }
                    cr.rows.push_back(std::move(row));
                }
            }
            report.cells.push_back(std::move(cr));
        }

        if (write_files) {
            bool any = false;
            for (const auto& c : report.cells) {
                if (c.dim != dim || !c.error.empty()) continue;
                emit_cell_csv(c, dir / (cfg.problem + "_d" + std::to_string(dim) + "_" +
                                        sanitize_name(c.method) + ".csv"));
                if (!c.rows.empty()) any = true;
                if (c.theory) {
                    std::ofstream os(dir / (cfg.problem + "_d" + std::to_string(dim) + "_" +
                                            sanitize_name(c.method) + "_theory.json"),
                                     std::ios::binary);
                    os << c.theory->dump(2) << '\n';
                }
            }
            if (any)
                emit_svg(report, dim,
                         dir / (cfg.problem + "_d" + std::to_string(dim) + ".svg"));
        }
    }
    return report;
}

}  // namespace scbfgs

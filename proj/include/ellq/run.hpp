#pragma once

#include <chrono>
#include <fstream>
#include <set>
#include <string>

#include "ellq/serialize.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// Batch driver: build representations, run the verification suites, emit one
// machine-readable report. Exit status 0 iff every selected suite passes;
// 2 on configuration errors; 1 on numeric failures (report still written).
// ---------------------------------------------------------------------------

struct RunConfig {
    CartanDatum   cartan = cartan_sl2();
    ModularParams params = ModularParams::make(cx(0.0, 0.8), cx(0.31, 0.17));
    std::uint64_t seed   = 7;

    struct ModuleSpec {
        std::string     type;  // "trivial" | "evaluation" | "direct_sum" | "a1xa1"
        std::string     rank;  // "sl2" | "sl3"
        std::vector<cx> a;     // evaluation parameters
    };
    std::vector<ModuleSpec> modules;
    std::set<std::string>   suites;  // theta, qloop, functor, eqg, serre, factorize,
                                     // invert, roundtrip, classify
    std::string out_path = "report.json";

    static RunConfig from_json(const json& j) {
        RunConfig cfg;
        if (j.contains("cartan")) cfg.cartan = cartan_from_json(j.at("cartan"));
        if (j.contains("params")) {
            const auto& p     = j.at("params");
            const cx    tau   = complex_from_json(p.at("tau"));
            const cx    hbar  = complex_from_json(p.at("hbar"));
            const int   trunc = p.value("trunc", 40);
            const double te   = p.value("tol_eval", 1e-12);
            const double tc   = p.value("tol_check", 1e-8);
            cfg.params        = ModularParams::make(tau, hbar, trunc, te, tc);
            cfg.seed          = p.value("seed", 7);
        }
        if (j.contains("modules"))
            for (const auto& m : j.at("modules")) {
                ModuleSpec ms;
                ms.type = m.at("type").get<std::string>();
                ms.rank = m.value("rank", "sl2");
                if (m.contains("a")) {
                    if (m.at("a").is_array() && m.at("a").size() > 0 &&
                        (m.at("a").at(0).is_array() || m.at("a").at(0).is_string()))
                        for (const auto& av : m.at("a")) ms.a.push_back(complex_from_json(av));
                    else
                        ms.a.push_back(complex_from_json(m.at("a")));
                }
                cfg.modules.push_back(std::move(ms));
            }
        if (j.contains("suites"))
            for (const auto& s : j.at("suites")) cfg.suites.insert(s.get<std::string>());
        if (j.contains("out")) cfg.out_path = j.at("out").get<std::string>();
        return cfg;
    }
};

namespace detail {

inline QLoopRep build_module(const RunConfig::ModuleSpec& ms, const RunConfig& cfg) {
    if (ms.type == "trivial") return make_trivial_module(cfg.cartan, cfg.params);
    if (ms.type == "evaluation")
        return make_evaluation_module(ms.rank == "sl3" ? EvalKind::sl3_vector : EvalKind::sl2,
                                      ms.a.at(0), cfg.params);
    if (ms.type == "a1xa1") return make_a1xa1_tensor(ms.a.at(0), ms.a.at(1), cfg.params);
    if (ms.type == "direct_sum") {
        QLoopRep rep = make_evaluation_module(
            ms.rank == "sl3" ? EvalKind::sl3_vector : EvalKind::sl2, ms.a.at(0), cfg.params);
        for (size_t k = 1; k < ms.a.size(); ++k)
            rep = direct_sum(rep, make_evaluation_module(ms.rank == "sl3" ? EvalKind::sl3_vector
                                                                          : EvalKind::sl2,
                                                         ms.a[k], cfg.params));
        return rep;
    }
    throw invalid_input("unknown module type: " + ms.type);
}

inline json theta_suite(const ModularParams& mp, std::uint64_t seed, bool& pass) {
    Rng    rng(seed);
    double qp = 0.0, odd = 0.0, split = 0.0, fti = 0.0;
    for (int s = 0; s < 200; ++s) {
        const cx u = rng.complex_box(-0.5, 0.5, 0.0, mp.tau.imag());
        const cx t = theta(u, mp);
        const double scale = std::max(1.0, std::abs(t));
        qp  = std::max(qp, std::abs(theta(u + 1.0, mp) + t) / scale);
        qp  = std::max(qp, std::abs(theta(u + mp.tau, mp) +
                                    std::exp(-iu * pi * mp.tau - two_pi_i * u) * t) /
                               scale);
        odd = std::max(odd, std::abs(theta(-u, mp) + t) / scale);
        // Splitting identity with the 1/pi normalization forced by theta'(0)=1.
        const cx sp = std::sin(pi * u) * theta_plus(u, mp) * theta_minus(u, mp) /
                      (pi * theta_plus(0.0, mp) * theta_plus(0.0, mp));
        split = std::max(split, std::abs(t - sp) / scale);
        fti = std::max(fti, fay_residual(rng.complex_box(-0.5, 0.5, 0, mp.tau.imag()),
                                         rng.complex_box(-0.5, 0.5, 0, mp.tau.imag()),
                                         rng.complex_box(-0.5, 0.5, 0, mp.tau.imag()),
                                         rng.complex_box(-0.5, 0.5, 0, mp.tau.imag()), mp));
    }
    const double tol = 1e-10;
    pass = qp < tol && odd < tol && split < tol && fti < tol;
    return json{{"quasi_periodicity", qp},
                {"oddness", odd},
                {"splitting_identity", split},
                {"fay_trisecant", fti},
                {"pass", pass}};
}

}  // namespace detail

struct RunResult {
    int  status = 0;
    json report;
};

inline RunResult run_suite(const RunConfig& cfg) {
    RunResult res;
    json&     rep         = res.report;
    rep["schema_version"] = 1;
    rep["timestamp"]      = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    rep["environment"] = {
        {"tau", to_json(cfg.params.tau)},       {"hbar", to_json(cfg.params.hbar)},
        {"trunc", cfg.params.trunc},            {"tol_eval", cfg.params.tol_eval},
        {"tol_check", cfg.params.tol_check},    {"seed", cfg.seed},
        {"truncation_bound", cfg.params.truncation_bound()}};

    bool all_pass = true;
    auto want     = [&](const std::string& s) {
        return cfg.suites.empty() || cfg.suites.count(s) > 0 || cfg.suites.count("all") > 0;
    };

    try {
        if (want("theta")) {
            bool ok;
            rep["suites"]["theta"] = detail::theta_suite(cfg.params, cfg.seed, ok);
            all_pass               = all_pass && ok;
        }

        std::vector<QLoopRep> mods;
        const bool need_mods = want("qloop") || want("functor") || want("eqg") ||
                               want("serre") || want("factorize") || want("invert") ||
                               want("roundtrip") || want("classify");
        if (need_mods)
            for (const auto& ms : cfg.modules) mods.push_back(detail::build_module(ms, cfg));

        SamplePlan plan;
        plan.seed = cfg.seed;

        if (want("qloop")) {
            json arr = json::array();
            for (size_t m = 0; m < mods.size(); ++m) {
                const RelationReport rr = check_qloop_relations(mods[m], plan);
                arr.push_back({{"module", m}, {"report", to_json(rr)}, {"pass", rr.pass()}});
                all_pass = all_pass && rr.pass();
            }
            rep["suites"]["qloop"] = arr;
        }

        std::vector<EllipticRep> ereps;
        if (want("functor") || want("eqg") || want("serre") || want("factorize") ||
            want("invert") || want("roundtrip") || want("classify"))
            for (const auto& m : mods) ereps.push_back(theta_functor(m));

        if (want("eqg") || want("functor")) {
            json arr = json::array();
            for (size_t m = 0; m < ereps.size(); ++m) {
                const RelationReport rr = check_eqg_relations(ereps[m], plan);
                arr.push_back({{"module", m}, {"report", to_json(rr)}, {"pass", rr.pass()}});
                all_pass = all_pass && rr.pass();
            }
            rep["suites"]["eqg"] = arr;
        }

        if (want("serre")) {
            json arr = json::array();
            for (size_t m = 0; m < ereps.size(); ++m) {
                if (ereps[m].rank() < 2) continue;
                const RelationReport rr = check_serre(ereps[m], 0, 1, plan);
                arr.push_back({{"module", m}, {"report", to_json(rr)}, {"pass", rr.pass()}});
                all_pass = all_pass && rr.pass();
            }
            rep["suites"]["serre"] = arr;
        }

        if (want("factorize")) {
            json arr = json::array();
            for (size_t m = 0; m < ereps.size(); ++m) {
                const auto [norm, rec] = normalize_gauges(ereps[m]);
                const PhiEigenBlocks eb = extract_phi_eigen_data(norm);
                json nodes = json::array();
                for (int i = 0; i < norm.rank(); ++i) {
                    FactorizationProblem prob;
                    prob.dim    = norm.dim();
                    prob.params = norm.params;
                    prob.S      = eb.S;
                    prob.Sinv   = eb.Sinv;
                    Mat Kd      = Mat::Zero(norm.dim(), norm.dim());
                    for (const auto& blk : eb.blocks) {
                        FactorizationProblem::Block pb;
                        pb.offset   = blk.offset;
                        pb.dim      = blk.dim;
                        pb.data.eta = blk.eta[i];
                        pb.data.tq  = blk.tq[i];
                        prob.blocks.push_back(pb);
                        for (int k = 0; k < blk.dim; ++k)
                            Kd(blk.offset + k, blk.offset + k) = blk.eta[i];
                    }
                    prob.K = eb.S * Kd * eb.Sinv;
                    const FactorizationSolution sol = solve_factorization(prob);
                    std::vector<std::pair<cx, Mat>> samples;
                    Rng rng(cfg.seed + 101);
                    while (samples.size() < 20) {
                        const cx u = cx(rng.uniform(0.05, 0.95), 0.0) +
                                     rng.uniform(0.05, 0.95) * norm.params.tau;
                        try {
                            samples.emplace_back(std::exp(two_pi_i * u), norm.phi(i, u));
                        } catch (const pole_hit&) {
                        }
                    }
                    const FactorizationReport fr =
                        check_factorization(sol, samples, prob.K, norm.params.tol_check);
                    nodes.push_back({{"node", i},
                                     {"report", to_json(fr)},
                                     {"uniqueness_ok", uniqueness_preconditions(sol.A, norm.params)}});
                    all_pass = all_pass && fr.pass;
                }
                arr.push_back({{"module", m}, {"gauge", to_json(rec)}, {"nodes", nodes}});
            }
            rep["suites"]["factorize"] = arr;
        }

        if (want("invert") || want("roundtrip")) {
            json arr = json::array();
            for (size_t m = 0; m < mods.size(); ++m) {
                const RoundtripReport r1 = roundtrip_qloop(mods[m]);
                const auto [norm, rec]   = normalize_gauges(ereps[m]);
                const RoundtripReport r2 = roundtrip_elliptic(norm);
                json j                   = to_json(r1);
                const json j2            = to_json(r2);
                j["phi_residual"]          = j2["phi_residual"];
                j["half_current_residual"] = j2["half_current_residual"];
                const bool ok = r1.psi_residual < 1e-7 && r1.x_residual < 1e-7 &&
                                r1.k_residual < 1e-7 && r2.phi_residual < 1e-7 &&
                                r2.half_residual < 1e-7;
                arr.push_back({{"module", m}, {"report", j}, {"pass", ok}});
                all_pass = all_pass && ok;
            }
            rep["suites"]["roundtrip"] = arr;
        }

        if (want("classify")) {
            json arr = json::array();
            for (size_t m = 0; m < ereps.size(); ++m) {
                json j;
                try {
                    const auto hw        = elliptic_drinfeld_data(ereps[m]);
                    j["highest_weight"] = to_json(hw);
                } catch (const std::exception& ex) {
                    j["highest_weight"] = json{{"error", ex.what()}};
                }
                j["triangularity"] = to_json(verify_triangularity(ereps[m]));
                arr.push_back({{"module", m}, {"report", j}});
            }
            rep["suites"]["classify"] = arr;
        }
    } catch (const invalid_params& ex) {
        rep["error"] = ex.what();
        res.status   = 2;
        return res;
    } catch (const invalid_cartan& ex) {
        rep["error"] = ex.what();
        res.status   = 2;
        return res;
    } catch (const std::exception& ex) {
        rep["error"] = ex.what();
        rep["pass"]  = false;
        res.status   = 1;
        return res;
    }

    rep["pass"] = all_pass;
    res.status  = all_pass ? 0 : 1;
    return res;
}

inline void write_report(const json& report, const std::string& path) {
    std::ofstream out(path);
    out << report.dump(2) << "\n";
}

}  // namespace ellq

#pragma once

#include <string>

#include <json.hpp>

#include "ellq/classification.hpp"
#include "ellq/factorization.hpp"
#include "ellq/qloop.hpp"

namespace ellq {

using json = nlohmann::json;

// Complex numbers as [re, im]; also accepted as "a+bi" strings on input.

inline json to_json(cx z) { return json::array({z.real(), z.imag()}); }

inline cx complex_from_json(const json& j) {
    if (j.is_array()) return {j.at(0).get<double>(), j.at(1).get<double>()};
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        // "a+bi" / "a-bi" / "bi" / "a"
        double re = 0.0, im = 0.0;
        size_t ipos = s.find('i');
        if (ipos == std::string::npos) {
            re = std::stod(s);
        } else {
            size_t split = s.find_last_of("+-", ipos == 0 ? 0 : ipos - 1);
            if (split == std::string::npos || split == 0) {
                im = std::stod(s.substr(0, ipos));
            } else {
                re                   = std::stod(s.substr(0, split));
                std::string im_part  = s.substr(split, ipos - split);
                if (im_part == "+" || im_part == "-") im_part += "1";
                im = std::stod(im_part);
            }
        }
        return {re, im};
    }
    throw invalid_input("cannot parse complex number from JSON");
}

inline json to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const ThetaQuotient& tq) {
    json j;
    j["C"]     = to_json(tq.constant);
    j["zeros"] = json::array();
    j["poles"] = json::array();
    for (const cx& z : tq.zeros) j["zeros"].push_back(to_json(z));
    for (const cx& p : tq.poles) j["poles"].push_back(to_json(p));
    return j;
}

inline ThetaQuotient theta_quotient_from_json(const json& j) {
    ThetaQuotient tq;
    tq.constant = complex_from_json(j.at("C"));
    for (const auto& z : j.at("zeros")) tq.zeros.push_back(complex_from_json(z));
    for (const auto& p : j.at("poles")) tq.poles.push_back(complex_from_json(p));
    return tq;
}

inline json to_json(const CartanDatum& cd) {
    json A = json::array();
    for (int i = 0; i < cd.rank(); ++i) {
        json row = json::array();
        for (int j = 0; j < cd.rank(); ++j) row.push_back(cd.A(i, j));
        A.push_back(row);
    }
    return json{{"A", A}, {"labels", cd.labels}, {"d", cd.d}};
}

inline CartanDatum cartan_from_json(const json& j) {
    const auto&     rows = j.at("A");
    const int       n    = static_cast<int>(rows.size());
    Eigen::MatrixXi A(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) A(i, k) = rows.at(i).at(k).get<int>();
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return validate_cartan(A, labels);
}

inline json to_json(const RationalMatFun& f) {
    json j;
    j["dim"]          = f.dim;
    j["value_at_inf"] = to_json(f.value_at_inf);
    j["poles"]        = json::array();
    for (const auto& p : f.poles) {
        json pj;
        pj["z0"]     = to_json(p.z0);
        pj["coeffs"] = json::array();
        for (const auto& C : p.coeffs) pj["coeffs"].push_back(to_json(C));
        j["poles"].push_back(pj);
    }
    return j;
}

inline json to_json(const WeightGradedSpace& sp) {
    json j;
    j["total_dim"] = sp.total_dim;
    j["weights"]   = json::array();
    for (size_t b = 0; b < sp.weights.size(); ++b) {
        json wj;
        wj["coords"] = json::array();
        for (int k = 0; k < sp.weights[b].coords.size(); ++k)
            wj["coords"].push_back(to_json(sp.weights[b].coords[k]));
        wj["dim"] = sp.dims[b];
        j["weights"].push_back(wj);
    }
    return j;
}

inline json to_json(const QLoopRep& rep) {
    json j;
    j["space"]  = to_json(rep.space);
    j["cartan"] = to_json(rep.datum);
    j["K"]      = json::array();
    j["Psi"]    = json::array();
    j["Xplus"]  = json::array();
    j["Xminus"] = json::array();
    for (int i = 0; i < rep.rank(); ++i) {
        j["K"].push_back(to_json(rep.K[i]));
        j["Psi"].push_back(to_json(rep.Psi[i]));
        j["Xplus"].push_back(to_json(rep.Xp[i]));
        j["Xminus"].push_back(to_json(rep.Xm[i]));
    }
    return j;
}

inline json to_json(const DynamicalHalfCurrent& hc) {
    json j;
    j["node"]  = hc.node;
    j["sign"]  = hc.sign;
    j["poles"] = json::array();
    for (const auto& p : hc.poles) {
        json pj;
        pj["b"]      = to_json(p.b);
        pj["coeffs"] = json::array();
        for (const auto& c : p.coeffs) {
            json cj = json::array();
            for (const auto& t : c.terms) {
                json tj;
                tj["exponent"] = json::array();
                for (int k = 0; k < t.e.size(); ++k) tj["exponent"].push_back(to_json(t.e[k]));
                tj["matrix"] = to_json(t.M);
                cj.push_back(tj);
            }
            pj["coeffs"].push_back(cj);
        }
        j["poles"].push_back(pj);
    }
    return j;
}

inline json to_json(const EllipticRep& e) {
    json j;
    j["space"]  = to_json(e.space);
    j["cartan"] = to_json(e.datum);
    json phi    = json::array();
    try {
        const PhiEigenBlocks eb = extract_phi_eigen_data(e);
        for (const auto& blk : eb.blocks) {
            json bj;
            bj["offset"]       = blk.offset;
            bj["dim"]          = blk.dim;
            bj["weight_block"] = blk.weight_block;
            bj["eigenvalues"]  = json::array();
            for (int i = 0; i < e.rank(); ++i) {
                json ej       = to_json(blk.tq[i]);
                ej["C"]       = to_json(blk.constant[i]);
                ej["eta"]     = to_json(blk.eta[i]);
                bj["eigenvalues"].push_back(ej);
            }
            phi.push_back(bj);
        }
    } catch (const std::exception& ex) {
        phi = json{{"error", ex.what()}};
    }
    j["phi_blocks"]    = phi;
    j["half_currents"] = json::array();
    for (int i = 0; i < e.rank(); ++i) {
        j["half_currents"].push_back(to_json(e.xplus[i]));
        j["half_currents"].push_back(to_json(e.xminus[i]));
    }
    return j;
}

inline json to_json(const RelationReport& rr) {
    json j = json::array();
    for (const auto& e : rr.entries)
        j.push_back({{"relation", e.relation},
                     {"max_residual", e.max_residual},
                     {"worst", e.worst},
                     {"pass", e.pass}});
    return j;
}

inline json to_json(const GaugeRecord& g) {
    json j;
    j["identity"] = g.identity;
    j["first_gauge"] = json::array();
    for (const auto& f : g.first) {
        json fj;
        fj["weight_block"] = f.weight_block;
        fj["alpha"]        = std::vector<int>(f.alpha.data(), f.alpha.data() + f.alpha.size());
        j["first_gauge"].push_back(fj);
    }
    j["lnC"] = json::array();
    for (const auto& row : g.lnC) {
        json rj = json::array();
        for (const cx& v : row) rj.push_back(to_json(v));
        j["lnC"].push_back(rj);
    }
    j["log_branch"] = "principal";
    return j;
}

inline json to_json(const RoundtripReport& r) {
    return json{{"psi_residual", r.psi_residual},
                {"x_residual", r.x_residual},
                {"k_residual", r.k_residual},
                {"phi_residual", r.phi_residual},
                {"half_current_residual", r.half_residual}};
}

inline json to_json(const EllipticHighestWeight& hw) {
    json j;
    j["mu"] = json::array();
    for (int k = 0; k < hw.mu.coords.size(); ++k) j["mu"].push_back(to_json(hw.mu.coords[k]));
    j["b"] = json::array();
    for (const auto& node : hw.b) {
        json nj = json::array();
        for (const cx& v : node) nj.push_back(to_json(v));
        j["b"].push_back(nj);
    }
    return j;
}

inline json to_json(const StringDiagnostic& d) {
    json j;
    j["all_balanced"] = d.all_balanced;
    j["strings"]      = json::array();
    for (const auto& s : d.strings) {
        json sj;
        sj["parens"]   = s.parens;
        sj["balanced"] = s.balanced;
        sj["points"]   = json::array();
        for (const cx& p : s.points) sj["points"].push_back(to_json(p));
        j["strings"].push_back(sj);
    }
    return j;
}

inline json to_json(const FactorizationReport& r) {
    return json{{"F1_residual", r.f1_residual},
                {"F2_residual", r.f2_residual},
                {"F4_residual", r.f4_residual},
                {"F3_ok", r.f3_ok},
                {"pass", r.pass}};
}

inline json to_json(const TriangularityReport& r) {
    return json{{"top_found", r.top_found},
                {"top_dimension", r.top_dimension},
                {"raising_residual", r.raising_residual},
                {"eigenvector_residual", r.eigenvector_residual},
                {"closure_dimension", r.closure_dimension},
                {"total_dimension", r.total_dimension},
                {"spanning", r.spanning}};
}

}  // namespace ellq

#include "alignkit/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace alignkit {

std::string digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string format_shortest(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace report {

json envelope(const std::string& command, const WorldSpec& spec) {
    json j;
    j["tool"] = "alignkit";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["input_digest"] = digest(emit_spec(spec));
    if (spec.scenario) j["scenario"] = spec.scenario->name;
    return j;
}

void metric(json& j, const std::string& key, double value) {
    j[key] = value;
    j[key + "_g12"] = format_g12(value);
}

json to_json(const ValidationReport& v) {
    json arr = json::array();
    for (const auto& violation : v) {
        arr.push_back(json{{"code", violation.code},
                           {"location", violation.location},
                           {"message", violation.message}});
    }
    return arr;
}

json to_json(const Assignment& a) {
    json arr = json::array();
    for (const auto& [name, label] : a) arr.push_back(json{{"variable", name}, {"value", label}});
    return arr;
}

json to_json(const JointTable& t) {
    json j;
    json scope = json::array();
    for (const auto& v : t.scope()) {
        json labels = json::array();
        for (const auto& dv : v.domain.values) labels.push_back(dv.label);
        scope.push_back(json{{"name", v.name}, {"values", std::move(labels)}});
    }
    j["scope"] = std::move(scope);
    j["probs"] = t.probs();
    return j;
}

json matrix_json(const std::vector<std::vector<double>>& m,
                 const std::vector<std::string>& row_names,
                 const std::vector<std::string>& col_names) {
    json j;
    j["rows"] = row_names;
    j["columns"] = col_names;
    j["values"] = m;
    return j;
}

json to_json(const DisentanglementVerdict& v) {
    json j;
    j["disentangled"] = v.disentangled;
    metric(j, "max_min", v.max_min);
    j["witness"] = v.witness;
    return j;
}

namespace {

const char* direction_name(MonotoneDirection d) {
    switch (d) {
        case MonotoneDirection::increasing: return "increasing";
        case MonotoneDirection::decreasing: return "decreasing";
        case MonotoneDirection::not_applicable: return "n/a";
    }
    return "?";
}

} // namespace

json to_json(const AlignmentReport& r, const GmSystem& sys) {
    std::vector<std::string> factor_names;
    for (const auto& v : sys.alpha.sources()) factor_names.push_back(v.name);
    std::vector<std::string> target_names;
    for (const auto& v : sys.alpha.targets()) target_names.push_back(v.name);

    json j;
    j["empida"] = matrix_json(r.empida, factor_names, target_names);
    json pi;
    pi["map"] = r.pi.pi;
    pi["residual"] = r.pi.residual;
    pi["valid"] = r.pi.valid;
    pi["surjective"] = r.pi.surjective;
    j["pi"] = std::move(pi);
    j["d1_ok"] = r.d1_ok;
    json d2 = json::array();
    for (std::size_t k = 0; k < r.d2.size(); ++k) {
        json rec;
        rec["target"] = target_names[k];
        rec["monotone"] = r.d2[k].passed;
        rec["direction"] = direction_name(r.d2[k].direction);
        if (r.d2[k].spearman) {
            metric(rec, "spearman", *r.d2[k].spearman);
        } else {
            rec["spearman"] = nullptr;
        }
        d2.push_back(std::move(rec));
    }
    j["d2"] = std::move(d2);
    j["aligned"] = r.aligned;
    if (r.dci) j["dci"] = to_json(*r.dci);
    return j;
}

json to_json(const BlockAlignmentReport& r) {
    json j;
    json d1 = json::array();
    for (std::size_t b = 0; b < r.d1_per_block.size(); ++b) {
        json rec;
        rec["ok"] = r.d1_per_block[b];
        metric(rec, "block_empida", r.d1_value[b]);
        d1.push_back(std::move(rec));
    }
    j["d1"] = std::move(d1);
    j["d2_injective"] = r.d2_per_block;
    j["d1_ok"] = r.d1_ok;
    j["d2_ok"] = r.d2_ok;
    j["aligned"] = r.aligned;
    return j;
}

json to_json(const DciResult& r) {
    json j;
    j["coefficients"] = r.coefficients;
    metric(j, "disentanglement_score", r.disentanglement_score);
    metric(j, "informativeness", r.informativeness);
    j["sweeps"] = r.sweeps;
    j["converged"] = r.converged;
    return j;
}

json to_json(const LeakageResult& r) {
    json j;
    metric(j, "lambda", r.lambda);
    metric(j, "lambda_bits", r.lambda_bits);
    metric(j, "lower_bound", r.lower_bound);
    metric(j, "upper_bound", r.upper_bound);
    metric(j, "l_cl_star", r.l_cl_star);
    metric(j, "l_r_star", r.l_r_star);
    metric(j, "jensen_lower", r.jensen_lower);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["numerically_zero"] = r.numerically_zero;
    return j;
}

json to_json(const AbstractionReport& r) {
    json j;
    json records = json::array();
    for (const auto& rec : r.records) {
        json rj;
        rj["intervention"] = to_json(rec.iv_h.targets);
        rj["mapped"] = to_json(rec.iv_m.targets);
        metric(rj, "tv", rec.tv);
        rj["commutes"] = rec.commutes;
        if (rec.approximate) rj["approximate"] = true;
        records.push_back(std::move(rj));
    }
    j["interventions"] = std::move(records);
    j["overall"] = r.overall;
    if (!r.records.empty()) {
        json worst;
        worst["intervention"] = to_json(r.records[r.worst_index].iv_h.targets);
        metric(worst, "tv", r.records[r.worst_index].tv);
        j["worst"] = std::move(worst);
    }
    return j;
}

std::string table_csv(const JointTable& t) {
    std::ostringstream os;
    for (const auto& v : t.scope()) os << v.name << ",";
    os << "p\n";
    for (std::size_t cell = 0; cell < t.cells(); ++cell) {
        for (const auto& [name, label] : t.frame().assignment_at(cell)) {
            (void)name;
            os << label << ",";
        }
        os << format_shortest(t.at(cell)) << "\n";
    }
    return os.str();
}

std::string matrix_csv(const std::vector<std::vector<double>>& m,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names) {
    std::ostringstream os;
    os << "factor";
    for (const auto& c : col_names) os << "," << c;
    os << "\n";
    for (std::size_t r = 0; r < m.size(); ++r) {
        os << row_names[r];
        for (double v : m[r]) os << "," << format_shortest(v);
        os << "\n";
    }
    return os.str();
}

} // namespace report

} // namespace alignkit

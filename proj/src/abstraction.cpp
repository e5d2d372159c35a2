#include "alignkit/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace alignkit {

namespace {

std::vector<std::string> all_names(const Scm& scm) {
    std::vector<std::string> names;
    for (const auto& v : scm.variables) names.push_back(v.name);
    return names;
}

// Source blocks fully pinned by the intervention. Throws when a block is
// cut or a target lies outside the partition.
std::vector<std::size_t> covered_source_blocks(const Channel& beta, const BlockStructure& blocks,
                                               const Intervention& iv_h) {
    const Frame& src = beta.source_frame();
    std::set<std::size_t> pinned;
    for (const auto& [name, label] : iv_h.targets) {
        (void)label;
        pinned.insert(src.require(name));
    }
    std::vector<bool> in_partition(src.arity(), false);
    std::vector<std::size_t> covered;
    for (std::size_t b = 0; b < blocks.source_blocks.size(); ++b) {
        std::size_t hit = 0;
        for (std::size_t c : blocks.source_blocks[b]) {
            in_partition[c] = true;
            if (pinned.count(c)) ++hit;
        }
        if (hit == blocks.source_blocks[b].size()) {
            covered.push_back(b);
        } else if (hit > 0) {
            throw std::invalid_argument("partial block intervention: source block " +
                                        std::to_string(b) + " is only partly pinned");
        }
    }
    for (std::size_t c : pinned) {
        if (!in_partition[c]) {
            throw std::invalid_argument("partial block intervention: variable '" +
                                        src.vars()[c].name + "' lies outside the block partition");
        }
    }
    if (covered.empty()) throw std::invalid_argument("intervention pins no source block");
    return covered;
}

std::vector<std::size_t> preimage_target_blocks(const BlockStructure& blocks,
                                                const std::vector<std::size_t>& source_blocks) {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < blocks.target_blocks.size(); ++b) {
        if (std::find(source_blocks.begin(), source_blocks.end(), blocks.pi[b]) !=
            source_blocks.end()) {
            out.push_back(b);
        }
    }
    return out;
}

} // namespace

void validate_case(const AbstractionCase& kase) {
    for (const Scm* scm : {&kase.scm_h, &kase.scm_m}) {
        const ValidationReport report = validate_scm(*scm);
        if (!report.empty()) {
            throw std::invalid_argument("invalid model: " + report.front().code + " at " +
                                        report.front().location);
        }
    }
    if (!kase.beta.source_frame().same_vars(Frame(kase.scm_h.variables))) {
        throw std::invalid_argument("map sources must equal the source model variables");
    }
    if (!kase.beta.target_frame().same_vars(Frame(kase.scm_m.variables))) {
        throw std::invalid_argument("map targets must equal the target model variables");
    }
    validate_blocks(kase.blocks, kase.beta.sources().size(), kase.beta.targets().size());
}

Intervention map_intervention(const Channel& beta, const BlockStructure& blocks,
                              const Intervention& iv_h) {
    const Frame& src = beta.source_frame();
    const std::vector<std::size_t> covered = covered_source_blocks(beta, blocks, iv_h);
    const std::vector<std::size_t> target_blocks = preimage_target_blocks(blocks, covered);

    // pin the intervened digits, enumerate everything else
    std::vector<std::size_t> digits(src.arity(), 0);
    std::vector<bool> is_pinned(src.arity(), false);
    for (const auto& [name, label] : iv_h.targets) {
        const std::size_t c = src.require(name);
        digits[c] = src.vars()[c].domain.index_of(label);
        is_pinned[c] = true;
    }
    std::vector<std::size_t> free_coords;
    std::vector<Variable> free_vars;
    for (std::size_t c = 0; c < src.arity(); ++c) {
        if (!is_pinned[c]) {
            free_coords.push_back(c);
            free_vars.push_back(src.vars()[c]);
        }
    }
    Frame free_frame = free_vars.empty() ? Frame() : Frame(free_vars);
    const std::size_t n_free = free_vars.empty() ? 1 : free_frame.cells();

    Intervention iv_m;
    for (std::size_t b : target_blocks) {
        const auto& block = blocks.target_blocks[b];
        std::optional<std::size_t> atom;
        for (std::size_t f = 0; f < n_free; ++f) {
            for (std::size_t t = 0; t < free_coords.size(); ++t) {
                digits[free_coords[t]] = free_frame.digit(f, t);
            }
            const auto v = beta.deterministic_block_value(src.index_of(digits), block);
            if (!v) {
                throw std::domain_error("stochastic block: map is not deterministic on target block " +
                                        std::to_string(b));
            }
            if (atom && *atom != *v) {
                throw std::domain_error("stochastic block: target block " + std::to_string(b) +
                                        " depends on non-intervened coordinates");
            }
            atom = v;
        }
        std::vector<Variable> block_vars;
        for (std::size_t c : block) block_vars.push_back(beta.targets()[c]);
        Frame block_frame(block_vars);
        for (const auto& [name, label] : block_frame.assignment_at(*atom)) {
            iv_m.targets.emplace_back(name, label);
        }
    }
    return iv_m;
}

CommutationRecord check_commutes(const AbstractionCase& kase, const Intervention& iv_h, double eps,
                                 bool approximate) {
    validate_case(kase);
    CommutationRecord record;
    record.iv_h = iv_h;
    record.approximate = approximate;

    const JointTable pushed =
        push_forward(interventional_distribution(kase.scm_h, iv_h, all_names(kase.scm_h)), kase.beta);

    if (!approximate) {
        record.iv_m = map_intervention(kase.beta, kase.blocks, iv_h);
        const JointTable propagated =
            interventional_distribution(kase.scm_m, record.iv_m, all_names(kase.scm_m));
        record.tv = total_variation(pushed, propagated);
        record.commutes = record.tv <= eps;
        return record;
    }

    // approximate route: the map induces a distribution over target-block
    // values; the propagated side is the matching mixture of interventions
    const std::vector<std::size_t> covered = covered_source_blocks(kase.beta, kase.blocks, iv_h);
    const std::vector<std::size_t> target_blocks = preimage_target_blocks(kase.blocks, covered);
    std::vector<std::size_t> j_coords;
    for (std::size_t b : target_blocks) {
        j_coords.insert(j_coords.end(), kase.blocks.target_blocks[b].begin(),
                        kase.blocks.target_blocks[b].end());
    }
    std::vector<Variable> j_vars;
    for (std::size_t c : j_coords) j_vars.push_back(kase.beta.targets()[c]);
    Frame j_frame(j_vars);

    const JointTable p_h =
        interventional_distribution(kase.scm_h, iv_h, all_names(kase.scm_h));
    std::vector<double> weight(j_frame.cells(), 0.0);
    for (std::size_t h = 0; h < p_h.cells(); ++h) {
        const double w = p_h.at(h);
        if (w == 0.0) continue;
        const std::vector<double> part = kase.beta.row_marginal(h, j_coords);
        for (std::size_t m = 0; m < part.size(); ++m) weight[m] += w * part[m];
    }

    std::vector<double> mixed(Frame(kase.scm_m.variables).cells(), 0.0);
    std::size_t best = 0;
    for (std::size_t m = 0; m < weight.size(); ++m) {
        if (weight[m] > weight[best]) best = m;
        if (weight[m] == 0.0) continue;
        Intervention iv{j_frame.assignment_at(m)};
        const JointTable propagated =
            interventional_distribution(kase.scm_m, iv, all_names(kase.scm_m));
        for (std::size_t c = 0; c < mixed.size(); ++c) mixed[c] += weight[m] * propagated.at(c);
    }
    record.iv_m = Intervention{j_frame.assignment_at(best)};
    record.tv = total_variation(std::span<const double>(pushed.probs()),
                                std::span<const double>(mixed));
    record.commutes = record.tv <= eps;
    return record;
}

std::vector<Intervention> enumerate_interventions(const Scm& scm_h, const BlockStructure& blocks,
                                                  std::size_t max_blocks, std::size_t cap) {
    if (max_blocks < 1) throw std::invalid_argument("max_blocks must be at least 1");
    const std::size_t nb = blocks.source_blocks.size();
    Frame h_frame(scm_h.variables);

    std::vector<Intervention> out;
    std::size_t total = 0;
    const std::size_t top = std::min(max_blocks, nb);
    for (std::size_t size = 1; size <= top; ++size) {
        // lexicographic combinations of `size` block indices
        std::vector<std::size_t> combo(size);
        for (std::size_t k = 0; k < size; ++k) combo[k] = k;
        while (true) {
            std::vector<Variable> vars;
            for (std::size_t b : combo) {
                for (std::size_t c : blocks.source_blocks[b]) vars.push_back(h_frame.vars()[c]);
            }
            Frame combo_frame(vars);
            total += combo_frame.cells();
            if (total > cap) {
                throw std::runtime_error("combinatorial cap exceeded while enumerating interventions");
            }
            for (std::size_t cell = 0; cell < combo_frame.cells(); ++cell) {
                out.push_back(Intervention{combo_frame.assignment_at(cell)});
            }
            // advance combination
            std::size_t k = size;
            while (k > 0 && combo[k - 1] == nb - size + (k - 1)) --k;
            if (k == 0) break;
            ++combo[k - 1];
            for (std::size_t t = k; t < size; ++t) combo[t] = combo[t - 1] + 1;
        }
    }
    return out;
}

AbstractionReport check_abstraction(const AbstractionCase& kase, std::size_t max_blocks, double eps,
                                    bool approximate) {
    validate_case(kase);
    AbstractionReport report;
    report.overall = true;
    const auto interventions = enumerate_interventions(kase.scm_h, kase.blocks, max_blocks);
    for (const auto& iv : interventions) {
        report.records.push_back(check_commutes(kase, iv, eps, approximate));
        const auto& rec = report.records.back();
        if (!rec.commutes) report.overall = false;
        if (rec.tv > report.records[report.worst_index].tv) {
            report.worst_index = report.records.size() - 1;
        }
    }
    return report;
}

} // namespace alignkit

#include "alignkit/channel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace alignkit {

namespace {

Frame subframe(const Frame& frame, const std::vector<std::size_t>& coords) {
    std::vector<Variable> vars;
    vars.reserve(coords.size());
    for (std::size_t c : coords) {
        if (c >= frame.arity()) throw std::invalid_argument("coordinate index out of range");
        vars.push_back(frame.vars()[c]);
    }
    return Frame(vars);
}

} // namespace

Channel::Channel(std::vector<Variable> sources, std::vector<Variable> targets,
                 std::vector<std::vector<double>> rows)
    : sources_(std::move(sources)), targets_(std::move(targets)), rows_(std::move(rows)) {
    std::set<std::string> names;
    for (const auto& v : sources_.vars()) names.insert(v.name);
    for (const auto& v : targets_.vars()) {
        if (!names.insert(v.name).second) {
            throw std::invalid_argument("channel sources and targets must be disjoint; '" +
                                        v.name + "' appears on both sides");
        }
    }
    if (rows_.size() != sources_.cells()) {
        throw std::invalid_argument("channel row count does not match the source space");
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].size() != targets_.cells()) {
            throw std::invalid_argument("channel row " + std::to_string(r) +
                                        " does not match the target space");
        }
        double sum = 0.0;
        for (double p : rows_[r]) {
            if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p)) {
                throw std::invalid_argument("channel row " + std::to_string(r) +
                                            " has entries outside [0, 1]");
            }
            sum += p;
        }
        if (std::fabs(sum - 1.0) > kRowMassTol) {
            throw std::invalid_argument("channel row " + std::to_string(r) + " sums to " +
                                        std::to_string(sum));
        }
    }
}

std::vector<double> Channel::row_marginal(std::size_t source_cell,
                                          const std::vector<std::size_t>& target_coords) const {
    Frame sub = subframe(targets_, target_coords);
    std::vector<double> out(sub.cells(), 0.0);
    const auto& row = rows_.at(source_cell);
    for (std::size_t m = 0; m < row.size(); ++m) {
        std::size_t o = 0;
        for (std::size_t t = 0; t < target_coords.size(); ++t) {
            o += targets_.digit(m, target_coords[t]) * sub.stride(t);
        }
        out[o] += row[m];
    }
    return out;
}

std::optional<std::size_t> Channel::deterministic_block_value(
    std::size_t source_cell, const std::vector<std::size_t>& target_coords) const {
    const std::vector<double> block = row_marginal(source_cell, target_coords);
    const auto it = std::max_element(block.begin(), block.end());
    if (*it >= 1.0 - kRowMassTol) return static_cast<std::size_t>(it - block.begin());
    return std::nullopt;
}

Channel compose(const Channel& inner, const Channel& outer) {
    if (!inner.target_frame().same_vars(outer.source_frame())) {
        throw std::invalid_argument("compose: outer sources must equal inner targets");
    }
    const std::size_t n_mid = inner.target_frame().cells();
    const std::size_t n_out = outer.target_frame().cells();
    std::vector<std::vector<double>> rows(inner.source_frame().cells(),
                                          std::vector<double>(n_out, 0.0));
    for (std::size_t g = 0; g < rows.size(); ++g) {
        const auto& gi = inner.row(g);
        for (std::size_t x = 0; x < n_mid; ++x) {
            const double w = gi[x];
            if (w == 0.0) continue;
            const auto& xo = outer.row(x);
            for (std::size_t m = 0; m < n_out; ++m) rows[g][m] += w * xo[m];
        }
    }
    return Channel(inner.sources(), outer.targets(), std::move(rows));
}

JointTable push_forward(const JointTable& dist, const Channel& ch) {
    if (!dist.frame().same_vars(ch.source_frame())) {
        throw std::invalid_argument("push_forward: distribution scope must equal the channel sources");
    }
    std::vector<double> out(ch.target_frame().cells(), 0.0);
    for (std::size_t h = 0; h < dist.cells(); ++h) {
        const double w = dist.at(h);
        if (w == 0.0) continue;
        const auto& row = ch.row(h);
        for (std::size_t m = 0; m < out.size(); ++m) out[m] += w * row[m];
    }
    return JointTable(ch.targets(), std::move(out));
}

std::vector<double> expected_embedding(const Channel& ch, const Assignment& source,
                                       const std::vector<std::size_t>& target_coords) {
    const std::size_t cell = ch.row_of(source);
    std::vector<double> e(target_coords.size(), 0.0);
    const auto& row = ch.row(cell);
    for (std::size_t m = 0; m < row.size(); ++m) {
        if (row[m] == 0.0) continue;
        for (std::size_t t = 0; t < target_coords.size(); ++t) {
            const std::size_t c = target_coords[t];
            e[t] += row[m] * ch.targets()[c].domain.level(ch.target_frame().digit(m, c));
        }
    }
    return e;
}

Channel restrict_channel(const Channel& ch, const Assignment& source_fixed,
                         const std::vector<std::size_t>& target_coords) {
    const Frame& src = ch.source_frame();
    std::vector<std::size_t> fixed_idx;
    std::vector<std::size_t> fixed_digit;
    std::vector<bool> is_fixed(src.arity(), false);
    for (const auto& [name, label] : source_fixed) {
        const std::size_t k = src.require(name);
        if (is_fixed[k]) throw std::invalid_argument("duplicate fixed variable '" + name + "'");
        is_fixed[k] = true;
        fixed_idx.push_back(k);
        fixed_digit.push_back(src.vars()[k].domain.index_of(label));
    }
    std::vector<Variable> free_vars;
    std::vector<std::size_t> free_idx;
    for (std::size_t k = 0; k < src.arity(); ++k) {
        if (!is_fixed[k]) {
            free_vars.push_back(src.vars()[k]);
            free_idx.push_back(k);
        }
    }
    Frame free_frame(free_vars);
    std::vector<Variable> out_targets;
    for (std::size_t c : target_coords) out_targets.push_back(ch.targets().at(c));

    std::vector<std::vector<double>> rows;
    rows.reserve(free_frame.cells());
    std::vector<std::size_t> digits(src.arity(), 0);
    for (std::size_t f = 0; f < free_frame.cells(); ++f) {
        for (std::size_t t = 0; t < free_idx.size(); ++t) digits[free_idx[t]] = free_frame.digit(f, t);
        for (std::size_t t = 0; t < fixed_idx.size(); ++t) digits[fixed_idx[t]] = fixed_digit[t];
        rows.push_back(ch.row_marginal(src.index_of(digits), target_coords));
    }
    return Channel(std::move(free_vars), std::move(out_targets), std::move(rows));
}

Channel channel_from_scm(const Scm& scm, const std::vector<std::string>& sources,
                         const std::vector<std::string>& targets, std::size_t max_cells) {
    std::vector<Variable> src_vars;
    for (const auto& name : sources) src_vars.push_back(scm.variables[scm.require(name)]);
    std::vector<Variable> tgt_vars;
    for (const auto& name : targets) tgt_vars.push_back(scm.variables[scm.require(name)]);
    // Channel endpoints do not carry SCM structure.
    for (auto& v : src_vars) v.parents.clear();
    for (auto& v : tgt_vars) v.parents.clear();

    Frame src_frame(src_vars);
    std::vector<std::vector<double>> rows;
    rows.reserve(src_frame.cells());
    for (std::size_t s = 0; s < src_frame.cells(); ++s) {
        Intervention iv{src_frame.assignment_at(s)};
        rows.push_back(interventional_distribution(scm, iv, targets, max_cells).probs());
    }
    return Channel(std::move(src_vars), std::move(tgt_vars), std::move(rows));
}

Channel deterministic_channel(std::vector<Variable> sources, std::vector<Variable> targets,
                              const std::function<std::size_t(std::size_t)>& image) {
    Frame src(sources);
    Frame tgt(targets);
    std::vector<std::vector<double>> rows(src.cells(), std::vector<double>(tgt.cells(), 0.0));
    for (std::size_t s = 0; s < src.cells(); ++s) {
        const std::size_t m = image(s);
        if (m >= tgt.cells()) throw std::invalid_argument("deterministic image out of range");
        rows[s][m] = 1.0;
    }
    return Channel(std::move(sources), std::move(targets), std::move(rows));
}

Channel identity_channel(std::vector<Variable> sources, std::vector<Variable> targets) {
    Frame src(sources);
    Frame tgt(targets);
    if (src.arity() != tgt.arity()) {
        throw std::invalid_argument("identity channel needs matching tuple arity");
    }
    for (std::size_t k = 0; k < src.arity(); ++k) {
        if (src.size(k) != tgt.size(k)) {
            throw std::invalid_argument("identity channel needs matching domain sizes");
        }
    }
    if (src.cells() != tgt.cells()) throw std::invalid_argument("identity channel size mismatch");
    return deterministic_channel(std::move(sources), std::move(targets),
                                 [](std::size_t s) { return s; });
}

void validate_blocks(const BlockStructure& blocks, std::size_t n_sources, std::size_t n_targets) {
    auto check_partition = [](const std::vector<std::vector<std::size_t>>& part, std::size_t n,
                              const char* side) {
        std::set<std::size_t> seen;
        for (const auto& block : part) {
            if (block.empty()) {
                throw std::invalid_argument(std::string(side) + " block is empty");
            }
            for (std::size_t c : block) {
                if (c >= n) throw std::invalid_argument(std::string(side) + " block index out of range");
                if (!seen.insert(c).second) {
                    throw std::invalid_argument(std::string(side) + " blocks overlap at index " +
                                                std::to_string(c));
                }
            }
        }
    };
    check_partition(blocks.source_blocks, n_sources, "source");
    check_partition(blocks.target_blocks, n_targets, "target");
    if (blocks.pi.size() != blocks.target_blocks.size()) {
        throw std::invalid_argument("block map must assign every target block");
    }
    std::vector<bool> hit(blocks.source_blocks.size(), false);
    for (std::size_t b : blocks.pi) {
        if (b >= blocks.source_blocks.size()) {
            throw std::invalid_argument("block map points to a missing source block");
        }
        hit[b] = true;
    }
    for (std::size_t b = 0; b < hit.size(); ++b) {
        if (!hit[b]) {
            throw std::invalid_argument("block map is not surjective: source block " +
                                        std::to_string(b) + " is never hit");
        }
    }
}

} // namespace alignkit

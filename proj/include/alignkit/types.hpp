#ifndef ALIGNKIT_TYPES_HPP
#define ALIGNKIT_TYPES_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace alignkit {

/// Tolerance for row/table normalization checks.
inline constexpr double kRowMassTol = 1e-9;
/// Events with less mass than this are treated as impossible.
inline constexpr double kZeroMassTol = 1e-12;

/// One value a finite variable can take. `level` is the numeric embedding
/// used for expectations, ordering and regression features.
struct DomainValue {
    std::string label;
    double level = 0.0;
};

inline bool operator==(const DomainValue& a, const DomainValue& b) {
    return a.label == b.label && a.level == b.level;
}

/// Finite value space. When `ordered` is set the levels must strictly
/// increase in list order.
struct Domain {
    std::vector<DomainValue> values;
    bool ordered = false;

    std::size_t size() const { return values.size(); }

    std::optional<std::size_t> find(const std::string& label) const {
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (values[k].label == label) return k;
        }
        return std::nullopt;
    }

    std::size_t index_of(const std::string& label) const {
        if (auto k = find(label)) return *k;
        throw std::invalid_argument("unknown domain value '" + label + "'");
    }

    double level(std::size_t k) const { return values.at(k).level; }
};

inline bool operator==(const Domain& a, const Domain& b) {
    return a.ordered == b.ordered && a.values == b.values;
}

/// A named variable together with its domain and declared parents.
/// Parents are meaningful only inside an SCM; channel endpoints leave
/// them empty.
struct Variable {
    std::string name;
    Domain domain;
    std::vector<std::string> parents;
};

inline bool operator==(const Variable& a, const Variable& b) {
    return a.name == b.name && a.domain == b.domain && a.parents == b.parents;
}

/// Ordered list of (variable name, value label) pairs.
using Assignment = std::vector<std::pair<std::string, std::string>>;

/// A do-assignment: every target variable is forced to the given value.
struct Intervention {
    Assignment targets;
};

/// Indexing over the lexicographic product of a variable tuple. The first
/// variable in declaration order is the most significant digit, i.e. cell
/// order is lexicographic in (declared variable order, declared domain
/// order). File formats depend on this order.
class Frame {
public:
    Frame() = default;

    explicit Frame(std::vector<Variable> vars) : vars_(std::move(vars)) {
        sizes_.resize(vars_.size());
        strides_.resize(vars_.size());
        for (std::size_t k = 0; k < vars_.size(); ++k) {
            if (vars_[k].domain.size() == 0) {
                throw std::invalid_argument("variable '" + vars_[k].name + "' has an empty domain");
            }
            for (std::size_t p = 0; p < k; ++p) {
                if (vars_[p].name == vars_[k].name) {
                    throw std::invalid_argument("variable '" + vars_[k].name +
                                                "' appears twice in a tuple");
                }
            }
            sizes_[k] = vars_[k].domain.size();
        }
        cells_ = 1;
        for (std::size_t k = vars_.size(); k-- > 0;) {
            strides_[k] = cells_;
            if (sizes_[k] != 0 && cells_ > kHardCellLimit / sizes_[k]) {
                throw std::runtime_error("state-space overflow: variable tuple exceeds hard cell limit");
            }
            cells_ *= sizes_[k];
        }
    }

    const std::vector<Variable>& vars() const { return vars_; }
    std::size_t arity() const { return vars_.size(); }
    std::size_t cells() const { return cells_; }
    std::size_t size(std::size_t k) const { return sizes_[k]; }
    std::size_t stride(std::size_t k) const { return strides_[k]; }

    std::size_t index_of(std::span<const std::size_t> digits) const {
        std::size_t cell = 0;
        for (std::size_t k = 0; k < digits.size(); ++k) cell += digits[k] * strides_[k];
        return cell;
    }

    /// Digit of variable k inside a flat cell index.
    std::size_t digit(std::size_t cell, std::size_t k) const {
        return (cell / strides_[k]) % sizes_[k];
    }

    void decode(std::size_t cell, std::vector<std::size_t>& digits) const {
        digits.resize(vars_.size());
        for (std::size_t k = 0; k < vars_.size(); ++k) digits[k] = digit(cell, k);
    }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t k = 0; k < vars_.size(); ++k) {
            if (vars_[k].name == name) return k;
        }
        return std::nullopt;
    }

    std::size_t require(const std::string& name) const {
        if (auto k = find(name)) return *k;
        throw std::invalid_argument("unknown variable '" + name + "'");
    }

    /// Cell index of a full assignment covering every variable of the frame.
    std::size_t cell_of(const Assignment& a) const {
        if (a.size() != vars_.size()) {
            throw std::invalid_argument("assignment does not cover the variable tuple");
        }
        std::size_t cell = 0;
        std::vector<bool> seen(vars_.size(), false);
        for (const auto& [name, label] : a) {
            const std::size_t k = require(name);
            if (seen[k]) throw std::invalid_argument("duplicate variable '" + name + "' in assignment");
            seen[k] = true;
            cell += vars_[k].domain.index_of(label) * strides_[k];
        }
        return cell;
    }

    Assignment assignment_at(std::size_t cell) const {
        Assignment a;
        a.reserve(vars_.size());
        for (std::size_t k = 0; k < vars_.size(); ++k) {
            a.emplace_back(vars_[k].name, vars_[k].domain.values[digit(cell, k)].label);
        }
        return a;
    }

    bool same_vars(const Frame& other) const {
        if (vars_.size() != other.vars_.size()) return false;
        for (std::size_t k = 0; k < vars_.size(); ++k) {
            if (!(vars_[k].name == other.vars_[k].name && vars_[k].domain == other.vars_[k].domain)) {
                return false;
            }
        }
        return true;
    }

private:
    // Absolute guard against index overflow; the user-facing cap on joint
    // enumeration is separate and configurable.
    static constexpr std::size_t kHardCellLimit = std::size_t{1} << 40;

    std::vector<Variable> vars_;
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> strides_;
    std::size_t cells_ = 1;
};

} // namespace alignkit

#endif
